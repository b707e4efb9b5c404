#include "insample/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "insample/text.hpp"

namespace insample {

double certified_step(double tol, double gamma) {
  if (gamma <= 0.0) return tol;
  return tol * std::min(1.0, (1.0 - gamma) / gamma);
}

SolveReport value_iteration(const TabularMDP& mdp, const BackupKind& kind, const QTable& q0,
                            double tol, std::size_t max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
  if (max_iter == 0) throw std::invalid_argument("value_iteration: max_iter must be positive");
  const double step = certified_step(tol, mdp.gamma());
  SolveReport report{q0, 0, {}, false};
  for (std::size_t k = 0; k < max_iter; ++k) {
    QTable next = backup(mdp, report.q, kind);
    const double change = sup_norm_diff(next, report.q);
    report.q = std::move(next);
    report.residuals.push_back(change);
    report.iterations = k + 1;
    if (change <= step) {
      report.converged = true;
      break;
    }
  }
  return report;
}

SolveReport soft_policy_evaluation(const TabularMDP& mdp, const Policy& pi, Temperature tau,
                                   double tol, std::size_t max_iter,
                                   const std::optional<QTable>& q0, const LiveMask* live) {
  if (!(tol > 0.0)) throw std::invalid_argument("soft_policy_evaluation: tol must be positive");
  if (max_iter == 0) throw std::invalid_argument("soft_policy_evaluation: max_iter must be positive");
  const double step = certified_step(tol, mdp.gamma());
  SolveReport report{q0 ? *q0 : QTable::constant(mdp.n_states(), mdp.n_actions(), 0.0), 0, {},
                     false};
  for (std::size_t k = 0; k < max_iter; ++k) {
    QTable next = onpolicy_soft_backup(mdp, report.q, pi, tau, live);
    const double change = sup_norm_diff(next, report.q);
    report.q = std::move(next);
    report.residuals.push_back(change);
    report.iterations = k + 1;
    if (change <= step) {
      report.converged = true;
      break;
    }
  }
  return report;
}

QTable exact_soft_q_value(const TabularMDP& mdp, const Policy& pi, Temperature tau) {
  // Fold the entropy bonus into the reward: v^pi of r - tau log pi is v~^pi.
  MdpTables augmented = mdp.tables();
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    for (ActionId a = 0; a < mdp.n_actions(); ++a) {
      const double p = pi(s, a);
      if (p > 0.0) augmented.reward[s * mdp.n_actions() + a] -= tau.value() * std::log(p);
    }
  }
  const VTable v = exact_policy_value(TabularMDP(std::move(augmented)), pi);
  return q_from_v(mdp, v);
}

namespace {

double policy_change(const Policy& a, const Policy& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.probs().size(); ++i) {
    m = std::max(m, std::abs(a.probs()[i] - b.probs()[i]));
  }
  return m;
}

Policy improve(const QTable& q, const Policy& beta, Temperature tau, const LiveMask* live) {
  std::vector<double> probs(beta.probs());
  for (StateId s = 0; s < beta.n_states(); ++s) {
    if (live && !(*live)[s]) continue;
    const auto row = insample_softmax_policy(q.row(s), beta.row(s), tau);
    std::copy(row.begin(), row.end(), probs.begin() + static_cast<std::ptrdiff_t>(s * beta.n_actions()));
  }
  return Policy(beta.n_states(), beta.n_actions(), std::move(probs));
}

}  // namespace

PolicyIterationResult insample_soft_policy_iteration(const TabularMDP& mdp, const Policy& beta,
                                                     Temperature tau,
                                                     const PolicyIterationOptions& options) {
  if (beta.n_states() != mdp.n_states() || beta.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("policy iteration: beta shape mismatch");
  }
  if (options.max_outer == 0) throw std::invalid_argument("policy iteration: max_outer must be positive");
  Policy pi = options.initial ? *options.initial : beta;
  for (std::size_t i = 0; i < pi.probs().size(); ++i) {
    if (pi.probs()[i] > 0.0 && !(beta.probs()[i] > 0.0)) {
      throw std::invalid_argument("policy iteration: initial policy leaves the support of beta");
    }
  }

  auto evaluate = [&](const Policy& p, const std::optional<QTable>& warm) {
    SolveReport r = soft_policy_evaluation(mdp, p, tau, options.eval_tol, options.max_eval_iter,
                                           warm, options.live);
    if (!r.converged) throw std::runtime_error("policy iteration: inner evaluation did not converge");
    return r.q;
  };

  QTable q0 = evaluate(pi, std::nullopt);
  PolicyIterationResult result{pi, q0, SolveReport{q0, 0, {}, false}, {}, {}};
  if (options.keep_trajectory) {
    result.policies.push_back(result.policy);
    result.values.push_back(result.q);
  }
  for (std::size_t t = 0; t < options.max_outer; ++t) {
    Policy next = improve(result.q, beta, tau, options.live);
    const double change = policy_change(next, result.policy);
    result.policy = std::move(next);
    result.q = evaluate(result.policy, result.q);
    result.report.residuals.push_back(change);
    result.report.iterations = t + 1;
    if (options.keep_trajectory) {
      result.policies.push_back(result.policy);
      result.values.push_back(result.q);
    }
    if (change <= options.tol) {
      result.report.converged = true;
      break;
    }
  }
  result.report.q = result.q;
  return result;
}

QTable brute_force_insample_optimum(const TabularMDP& mdp, const SupportSet& support) {
  const std::size_t ns = mdp.n_states();
  const std::size_t na = mdp.n_actions();
  if (ns > 12 || na > 4) throw std::length_error("brute force: instance too large");
  if (support.n_states() != ns || support.n_actions() != na) {
    throw std::invalid_argument("brute force: support shape mismatch");
  }
  std::vector<std::vector<ActionId>> choices(ns);
  std::size_t total = 1;
  for (StateId s = 0; s < ns; ++s) {
    for (ActionId a = 0; a < na; ++a) {
      if (support.allowed(s, a)) choices[s].push_back(a);
    }
    if (choices[s].empty()) {
      throw std::invalid_argument("brute force: empty support at state " + std::to_string(s));
    }
    total *= choices[s].size();
    if (total > kBruteForcePolicyLimit) throw std::length_error("brute force: instance too large");
  }

  std::vector<std::size_t> digit(ns, 0);
  std::optional<VTable> best;
  double best_sum = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < total; ++k) {
    std::vector<double> probs(ns * na, 0.0);
    for (StateId s = 0; s < ns; ++s) probs[s * na + choices[s][digit[s]]] = 1.0;
    VTable v = exact_policy_value(mdp, Policy(ns, na, std::move(probs)));
    // An optimal deterministic policy dominates every other one statewise,
    // so it also has the largest value sum.
    const double sum = std::accumulate(v.values().begin(), v.values().end(), 0.0);
    if (sum > best_sum) {
      best_sum = sum;
      best = std::move(v);
    }
    for (StateId s = 0; s < ns; ++s) {
      if (++digit[s] < choices[s].size()) break;
      digit[s] = 0;
    }
  }
  return q_from_v(mdp, *best);
}

std::vector<TauGap> tau_limit_check(const TabularMDP& mdp, const SupportSet& support,
                                    const std::vector<double>& tau_schedule, double tol) {
  for (std::size_t i = 1; i < tau_schedule.size(); ++i) {
    if (!(tau_schedule[i] < tau_schedule[i - 1])) {
      throw std::invalid_argument("tau_limit_check: schedule must be decreasing");
    }
  }
  const QTable zero = QTable::constant(mdp.n_states(), mdp.n_actions(), 0.0);
  const SolveReport hard = value_iteration(
      mdp, InSampleHardMax{support, EmptySupport::BootstrapZero}, zero, tol);
  std::vector<TauGap> out;
  for (double t : tau_schedule) {
    const Temperature tau(t);
    const SolveReport soft = value_iteration(
        mdp, InSampleSoftMax{support, tau, EmptySupport::BootstrapZero}, zero, tol);
    out.push_back({t, sup_norm_diff(soft.q, hard.q),
                   t * std::log(static_cast<double>(mdp.n_actions())) / (1.0 - mdp.gamma())});
  }
  return out;
}

void write_report_csv(const SolveReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "iteration,residual\n";
  for (std::size_t k = 0; k < report.residuals.size(); ++k) {
    out << (k + 1) << ',' << format_real(report.residuals[k]) << '\n';
  }
}

}  // namespace insample
