#include "insample/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace insample {

Temperature::Temperature(double tau) : tau_(tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("temperature must be positive and finite");
  }
}

double log_sum_exp(std::span<const double> values, std::span<const std::uint8_t> mask) {
  if (mask.size() != values.size()) throw std::invalid_argument("log_sum_exp: mask size mismatch");
  double top = -std::numeric_limits<double>::infinity();
  std::size_t active = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask[i]) continue;
    top = std::max(top, values[i]);
    ++active;
  }
  if (active == 0) throw std::invalid_argument("log_sum_exp: empty mask");
  if (active == 1) return top;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) sum += std::exp(values[i] - top);
  }
  return top + std::log(sum);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double top = *std::max_element(values.begin(), values.end());
  if (values.size() == 1) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

double softmax_value(std::span<const double> q_row, Temperature tau) {
  const double t = tau.value();
  double top = -std::numeric_limits<double>::infinity();
  for (double q : q_row) top = std::max(top, q);
  if (q_row.empty()) throw std::invalid_argument("softmax_value: empty row");
  double sum = 0.0;
  for (double q : q_row) sum += std::exp((q - top) / t);
  return top + t * std::log(sum);
}

double insample_softmax_value(std::span<const double> q_row, std::span<const std::uint8_t> support,
                              Temperature tau) {
  if (support.size() != q_row.size()) throw std::invalid_argument("support size mismatch");
  const double t = tau.value();
  double top = -std::numeric_limits<double>::infinity();
  std::size_t active = 0;
  for (std::size_t a = 0; a < q_row.size(); ++a) {
    if (!support[a]) continue;
    top = std::max(top, q_row[a]);
    ++active;
  }
  if (active == 0) throw std::invalid_argument("insample_softmax_value: empty support");
  if (active == 1) return top;
  double sum = 0.0;
  for (std::size_t a = 0; a < q_row.size(); ++a) {
    if (support[a]) sum += std::exp((q_row[a] - top) / t);
  }
  return top + t * std::log(sum);
}

std::vector<double> insample_softmax_policy(std::span<const double> q_row,
                                            std::span<const double> beta_row, Temperature tau) {
  if (beta_row.size() != q_row.size()) throw std::invalid_argument("beta size mismatch");
  const double t = tau.value();
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < q_row.size(); ++a) {
    if (beta_row[a] < 0.0) throw std::invalid_argument("insample_softmax_policy: negative beta");
    if (beta_row[a] > 0.0) top = std::max(top, q_row[a]);
  }
  if (top == -std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("insample_softmax_policy: all-zero beta row");
  }
  // Zero-probability actions are masked out before exponentiation (0 * inf = 0).
  std::vector<double> pi(q_row.size(), 0.0);
  double sum = 0.0;
  for (std::size_t a = 0; a < q_row.size(); ++a) {
    if (beta_row[a] > 0.0) {
      pi[a] = std::exp((q_row[a] - top) / t);
      sum += pi[a];
    }
  }
  for (double& p : pi) p /= sum;
  return pi;
}

double sampled_insample_softmax_value(std::span<const double> q_row,
                                      std::span<const double> beta_row,
                                      std::span<const ActionId> samples, Temperature tau) {
  if (samples.empty()) throw std::invalid_argument("sampled_insample_softmax_value: no samples");
  const double t = tau.value();
  double top = -std::numeric_limits<double>::infinity();
  for (ActionId a : samples) {
    if (a >= q_row.size() || !(beta_row[a] > 0.0)) {
      throw std::invalid_argument("sampled action " + std::to_string(a) +
                                  " has zero behavior probability");
    }
    top = std::max(top, q_row[a]);
  }
  std::vector<double> exponents;
  exponents.reserve(samples.size());
  for (ActionId a : samples) exponents.push_back((q_row[a] - top) / t - std::log(beta_row[a]));
  const double log_mean = log_sum_exp(exponents) - std::log(static_cast<double>(samples.size()));
  return top + t * log_mean;
}

double soft_policy_value(std::span<const double> q_row, std::span<const double> pi_row,
                         Temperature tau) {
  double v = 0.0;
  for (std::size_t a = 0; a < q_row.size(); ++a) {
    const double p = pi_row[a];
    if (p > 0.0) v += p * (q_row[a] - tau.value() * std::log(p));
  }
  return v;
}

double soft_policy_value(const QTable& q, const Policy& pi, Temperature tau, StateId state) {
  return soft_policy_value(q.row(state), pi.row(state), tau);
}

double max_entropy_objective(std::span<const double> q_row, std::span<const double> pi_row,
                             Temperature tau) {
  return soft_policy_value(q_row, pi_row, tau);
}

namespace {

struct BootstrapVisitor {
  const QTable& q;

  std::vector<double> operator()(const HardMax&) const {
    std::vector<double> g(q.n_states());
    for (StateId s = 0; s < q.n_states(); ++s) {
      const auto row = q.row(s);
      g[s] = *std::max_element(row.begin(), row.end());
    }
    return g;
  }

  std::vector<double> operator()(const SoftMax& k) const {
    std::vector<double> g(q.n_states());
    for (StateId s = 0; s < q.n_states(); ++s) g[s] = softmax_value(q.row(s), k.tau);
    return g;
  }

  template <typename Rowwise>
  std::vector<double> insample(const SupportSet& support, EmptySupport on_empty,
                               Rowwise&& rowwise) const {
    if (support.n_states() != q.n_states() || support.n_actions() != q.n_actions()) {
      throw std::invalid_argument("backup: support shape mismatch");
    }
    std::vector<double> g(q.n_states(), 0.0);
    for (StateId s = 0; s < q.n_states(); ++s) {
      if (support.empty(s)) {
        if (on_empty == EmptySupport::Reject) {
          throw std::invalid_argument("backup: empty support at state " + std::to_string(s));
        }
        continue;
      }
      g[s] = rowwise(q.row(s), support.row(s));
    }
    return g;
  }

  std::vector<double> operator()(const InSampleHardMax& k) const {
    return insample(k.support, k.on_empty, [](auto row, auto mask) {
      return row[masked_argmax(row, mask)];
    });
  }

  std::vector<double> operator()(const InSampleSoftMax& k) const {
    return insample(k.support, k.on_empty, [&](auto row, auto mask) {
      return insample_softmax_value(row, mask, k.tau);
    });
  }
};

std::vector<std::uint8_t> reachable(const TabularMDP& mdp) {
  std::vector<std::uint8_t> hit(mdp.n_states(), 0);
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    for (ActionId a = 0; a < mdp.n_actions(); ++a) {
      for (const auto& succ : mdp.successors(s, a)) hit[succ.state] = 1;
    }
  }
  return hit;
}

}  // namespace

std::vector<double> bootstrap_values(const QTable& q, const BackupKind& kind) {
  return std::visit(BootstrapVisitor{q}, kind);
}

QTable expected_backup(const TabularMDP& mdp, std::span<const double> next_value) {
  std::vector<double> out(mdp.n_states() * mdp.n_actions());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    for (ActionId a = 0; a < mdp.n_actions(); ++a) {
      double ev = 0.0;
      for (const auto& succ : mdp.successors(s, a)) ev += succ.prob * next_value[succ.state];
      out[s * mdp.n_actions() + a] = mdp.reward(s, a) + mdp.gamma() * ev;
    }
  }
  return QTable(mdp.n_states(), mdp.n_actions(), std::move(out));
}

QTable backup(const TabularMDP& mdp, const QTable& q, const BackupKind& kind) {
  if (q.n_states() != mdp.n_states() || q.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("backup: q shape mismatch");
  }
  // Unreachable empty-support states never feed a bootstrap, so they are
  // tolerated even in Reject mode.
  auto reject_unreachable_only = [&](const SupportSet& support, EmptySupport on_empty) {
    if (on_empty != EmptySupport::Reject) return;
    const auto empty = support.empty_states();
    if (empty.empty()) return;
    const auto hit = reachable(mdp);
    for (StateId s : empty) {
      if (hit[s]) throw std::invalid_argument("backup: empty support at reachable state " +
                                              std::to_string(s));
    }
  };
  std::vector<double> g;
  if (const auto* k = std::get_if<InSampleHardMax>(&kind)) {
    reject_unreachable_only(k->support, k->on_empty);
    g = bootstrap_values(q, InSampleHardMax{k->support, EmptySupport::BootstrapZero});
  } else if (const auto* k2 = std::get_if<InSampleSoftMax>(&kind)) {
    reject_unreachable_only(k2->support, k2->on_empty);
    g = bootstrap_values(q, InSampleSoftMax{k2->support, k2->tau, EmptySupport::BootstrapZero});
  } else {
    g = bootstrap_values(q, kind);
  }
  return expected_backup(mdp, g);
}

QTable onpolicy_soft_backup(const TabularMDP& mdp, const QTable& q, const Policy& pi,
                            Temperature tau, const LiveMask* live) {
  if (pi.n_states() != mdp.n_states() || pi.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("onpolicy_soft_backup: policy shape mismatch");
  }
  std::vector<double> g(mdp.n_states(), 0.0);
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    if (live && !(*live)[s]) continue;
    g[s] = soft_policy_value(q.row(s), pi.row(s), tau);
  }
  return expected_backup(mdp, g);
}

double sup_norm_diff(const QTable& a, const QTable& b) {
  if (a.values().size() != b.values().size()) throw std::invalid_argument("sup_norm_diff: shape");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

}  // namespace insample
