#include "insample/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "insample/agents.hpp"
#include "insample/approximator.hpp"
#include "insample/envs.hpp"
#include "insample/operators.hpp"
#include "insample/random.hpp"
#include "insample/solvers.hpp"
#include "insample/text.hpp"

namespace insample {

namespace {

// Tracks the worst observation of one check across trials.
class Tracker {
 public:
  Tracker(std::string suite, std::string name, std::string relation, double bound,
          std::uint64_t seed) {
    check_.suite = std::move(suite);
    check_.name = std::move(name);
    check_.relation = std::move(relation);
    check_.bound = bound;
    check_.seed = seed;
    check_.measured = lower() ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
  }

  void observe(double value, std::size_t trial) {
    ++observations_;
    if (std::isnan(value)) {
      nan_ = true;
      if (!std::isnan(check_.measured)) {
        check_.measured = value;
        check_.worst_trial = trial;
      }
      return;
    }
    if (nan_) return;
    const bool worse = lower() ? value < check_.measured : value > check_.measured;
    if (worse) {
      check_.measured = value;
      check_.worst_trial = trial;
    }
  }

  VerifyCheck finish(std::size_t trials) {
    check_.trials = trials;
    if (observations_ == 0) check_.measured = check_.bound;
    check_.passed = !nan_ && (lower() ? check_.measured >= check_.bound
                                      : check_.measured <= check_.bound);
    return check_;
  }

 private:
  bool lower() const { return check_.relation == ">="; }

  VerifyCheck check_;
  std::size_t observations_ = 0;
  bool nan_ = false;
};

Rng trial_rng(std::uint64_t seed, std::uint64_t stream, std::size_t trial) {
  return make_rng(seed, stream * 1000000 + trial);
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

std::size_t uniform_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + uniform_index(rng, hi - lo + 1);
}

std::vector<double> random_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

// Each action kept with probability 1/2, at least one per row.
std::vector<std::uint8_t> random_mask(Rng& rng, std::size_t n) {
  std::vector<std::uint8_t> mask(n);
  for (auto& m : mask) m = uniform01(rng) < 0.5 ? 1 : 0;
  mask[uniform_index(rng, n)] = 1;
  return mask;
}

// Positive weights on the mask, zero elsewhere, normalized.
std::vector<double> random_distribution(Rng& rng, std::span<const std::uint8_t> mask) {
  std::vector<double> p(mask.size(), 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask[a]) continue;
    p[a] = 0.05 + uniform01(rng);
    total += p[a];
  }
  for (double& x : p) x /= total;
  return p;
}

SupportSet random_support(Rng& rng, std::size_t n_states, std::size_t n_actions) {
  std::vector<std::uint8_t> mask;
  mask.reserve(n_states * n_actions);
  for (std::size_t s = 0; s < n_states; ++s) {
    const auto row = random_mask(rng, n_actions);
    mask.insert(mask.end(), row.begin(), row.end());
  }
  return SupportSet(n_states, n_actions, std::move(mask));
}

// A policy with positive probability exactly on `support`.
Policy random_policy_on(Rng& rng, const SupportSet& support) {
  std::vector<double> probs;
  probs.reserve(support.n_states() * support.n_actions());
  for (StateId s = 0; s < support.n_states(); ++s) {
    const auto row = random_distribution(rng, support.row(s));
    probs.insert(probs.end(), row.begin(), row.end());
  }
  return Policy(support.n_states(), support.n_actions(), std::move(probs));
}

// A policy whose support is a random non-empty subset of `support`;
// deterministic rows appear with probability 1/4.
Policy random_policy_under(Rng& rng, const SupportSet& support) {
  std::vector<double> probs;
  probs.reserve(support.n_states() * support.n_actions());
  for (StateId s = 0; s < support.n_states(); ++s) {
    const auto allowed = support.row(s);
    std::vector<std::uint8_t> sub(allowed.begin(), allowed.end());
    std::vector<ActionId> on;
    for (ActionId a = 0; a < sub.size(); ++a) {
      if (sub[a]) on.push_back(a);
    }
    if (uniform01(rng) < 0.25) {
      std::fill(sub.begin(), sub.end(), 0);
      sub[on[uniform_index(rng, on.size())]] = 1;
    } else {
      const ActionId keep = on[uniform_index(rng, on.size())];
      for (ActionId a : on) {
        if (a != keep && uniform01(rng) < 0.3) sub[a] = 0;
      }
    }
    const auto row = random_distribution(rng, sub);
    probs.insert(probs.end(), row.begin(), row.end());
  }
  return Policy(support.n_states(), support.n_actions(), std::move(probs));
}

QTable random_q(Rng& rng, std::size_t n_states, std::size_t n_actions, double lo, double hi) {
  return QTable(n_states, n_actions, random_vector(rng, n_states * n_actions, lo, hi));
}

TabularMDP random_instance(Rng& rng, std::size_t n_states, std::size_t n_actions,
                           double gamma = 0.9) {
  const std::size_t branching = uniform_between(rng, 1, std::min<std::size_t>(3, n_states));
  return random_mdp(n_states, n_actions, branching, rng(), gamma);
}

QTable add(const QTable& q, double c) {
  std::vector<double> v = q.values();
  for (double& x : v) x += c;
  return QTable(q.n_states(), q.n_actions(), std::move(v));
}

double min_diff(const QTable& a, const QTable& b) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::min(m, a.values()[i] - b.values()[i]);
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double off_support_mass(const Policy& pi, const SupportSet& support) {
  double m = 0.0;
  for (StateId s = 0; s < pi.n_states(); ++s) {
    for (ActionId a = 0; a < pi.n_actions(); ++a) {
      if (!support.allowed(s, a)) m = std::max(m, pi(s, a));
    }
  }
  return m;
}

// -- identities --------------------------------------------------------------

void suite_identities(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  constexpr std::size_t kTrials = 1000;
  constexpr std::size_t kPolicies = 1000;
  constexpr std::size_t kActions = 10;
  const std::string suite = "identities";
  Tracker reform(suite, "sampling-reformulation", "<=", 1e-10, seed);
  Tracker sampled(suite, "sampled-reformulation-full-draw", "<=", 1e-10, seed);
  Tracker identity(suite, "max-entropy-identity", "<=", 1e-9, seed);
  Tracker soft_value(suite, "soft-value-of-greedy-policy", "<=", 1e-10, seed);
  Tracker dominance(suite, "max-entropy-dominance", "<=", 1e-9, seed);
  Tracker off_support(suite, "greedy-policy-off-support-mass", "<=", 0.0, seed);
  Tracker shift_value(suite, "shift-covariance-value", "<=", 1e-10, seed);
  Tracker shift_policy(suite, "shift-invariance-policy", "<=", 1e-12, seed);
  Tracker tau_low(suite, "softmax-above-max", ">=", -1e-12, seed);
  Tracker tau_high(suite, "softmax-overshoot-minus-tau-log-n", "<=", 1e-12, seed);

  for (std::size_t t = 0; t < kTrials; ++t) {
    Rng rng = trial_rng(seed, 1, t);
    const Temperature tau(log_uniform(rng, 0.01, 10.0));
    const auto q = random_vector(rng, kActions, -10.0, 10.0);
    const auto mask = random_mask(rng, kActions);
    const auto beta = random_distribution(rng, mask);

    // Expectation under beta of exp(q/tau - log beta), shifted by the
    // support max; an independent evaluation of the same quantity.
    const double value = insample_softmax_value(q, mask, tau);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < kActions; ++a) {
      if (mask[a]) top = std::max(top, q[a]);
    }
    double expectation = 0.0;
    for (std::size_t a = 0; a < kActions; ++a) {
      if (beta[a] > 0.0) {
        expectation += beta[a] * std::exp((q[a] - top) / tau.value() - std::log(beta[a]));
      }
    }
    reform.observe(std::abs(value - (top + tau.value() * std::log(expectation))), t);

    // Under a uniform beta on the support, one draw of each support action
    // makes the sample mean exact.
    std::vector<ActionId> draw;
    for (std::size_t a = 0; a < kActions; ++a) {
      if (mask[a]) draw.push_back(a);
    }
    std::vector<double> flat(kActions, 0.0);
    for (ActionId a : draw) flat[a] = 1.0 / static_cast<double>(draw.size());
    sampled.observe(std::abs(sampled_insample_softmax_value(q, flat, draw, tau) - value), t);

    const auto pi = insample_softmax_policy(q, beta, tau);
    identity.observe(std::abs(max_entropy_objective(q, pi, tau) - value), t);
    soft_value.observe(std::abs(soft_policy_value(q, pi, tau) - value), t);
    double off = 0.0;
    for (std::size_t a = 0; a < kActions; ++a) {
      if (!mask[a]) off = std::max(off, pi[a]);
    }
    off_support.observe(off, t);

    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kPolicies; ++k) {
      std::vector<std::uint8_t> sub = mask;
      for (std::size_t a = 0; a < kActions; ++a) {
        if (sub[a] && uniform01(rng) < 0.3) sub[a] = 0;
      }
      if (std::find(sub.begin(), sub.end(), 1) == sub.end()) sub = mask;
      const auto other = random_distribution(rng, sub);
      excess = std::max(excess, max_entropy_objective(q, other, tau) - value);
    }
    dominance.observe(excess, t);

    const double c = uniform(rng, -100.0, 100.0);
    std::vector<double> shifted = q;
    for (double& x : shifted) x += c;
    shift_value.observe(std::abs(softmax_value(shifted, tau) - softmax_value(q, tau) - c), t);
    shift_policy.observe(max_abs_diff(insample_softmax_policy(shifted, beta, tau), pi), t);

    const double top_all = *std::max_element(q.begin(), q.end());
    const double over = softmax_value(q, tau) - top_all;
    tau_low.observe(over, t);
    tau_high.observe(over - tau.value() * std::log(static_cast<double>(kActions)), t);
  }
  for (Tracker* tr : {&reform, &sampled, &identity, &soft_value, &dominance, &off_support,
                      &shift_value, &shift_policy, &tau_low, &tau_high}) {
    out.push_back(tr->finish(kTrials));
  }
}

// -- contraction -------------------------------------------------------------

void suite_contraction(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  constexpr std::size_t kTrials = 1000;
  constexpr std::size_t kUniqueness = 100;
  constexpr double kGamma = 0.9;
  const std::string suite = "contraction";

  Tracker one_step(suite, "one-step-nonexpansion-excess", "<=", 1e-12, seed);
  for (std::size_t t = 0; t < kTrials; ++t) {
    Rng rng = trial_rng(seed, 2, t);
    const std::size_t n = uniform_between(rng, 2, 10);
    const Temperature tau(log_uniform(rng, 0.01, 10.0));
    const auto mask = random_mask(rng, n);
    const auto q1 = random_vector(rng, n, -10.0, 10.0);
    const auto q2 = random_vector(rng, n, -10.0, 10.0);
    const double lhs =
        std::abs(insample_softmax_value(q1, mask, tau) - insample_softmax_value(q2, mask, tau));
    one_step.observe(lhs - max_abs_diff(q1, q2), t);
  }
  out.push_back(one_step.finish(kTrials));

  Tracker soft_ratio(suite, "insample-soft-backup-lipschitz", "<=", kGamma + 1e-12, seed);
  Tracker soft_excess(suite, "insample-soft-backup-excess", "<=", 1e-12, seed);
  Tracker hard_ratio(suite, "insample-hard-backup-lipschitz", "<=", kGamma + 1e-12, seed);
  for (std::size_t t = 0; t < kTrials; ++t) {
    Rng rng = trial_rng(seed, 3, t);
    const std::size_t ns = uniform_between(rng, 2, 10);
    const std::size_t na = uniform_between(rng, 2, 5);
    const TabularMDP mdp = random_instance(rng, ns, na, kGamma);
    const SupportSet support = random_support(rng, ns, na);
    const Temperature tau(log_uniform(rng, 0.01, 10.0));
    const double scale = log_uniform(rng, 1e-3, 100.0);
    const QTable q1 = random_q(rng, ns, na, -scale, scale);
    const QTable q2 = random_q(rng, ns, na, -scale, scale);
    const double dq = sup_norm_diff(q1, q2);
    const BackupKind soft = InSampleSoftMax{support, tau};
    const double dt = sup_norm_diff(backup(mdp, q1, soft), backup(mdp, q2, soft));
    soft_ratio.observe(dt / dq, t);
    soft_excess.observe(dt - kGamma * dq, t);
    const BackupKind hard = InSampleHardMax{support};
    hard_ratio.observe(sup_norm_diff(backup(mdp, q1, hard), backup(mdp, q2, hard)) / dq, t);
  }
  out.push_back(soft_ratio.finish(kTrials));
  out.push_back(soft_excess.finish(kTrials));
  out.push_back(hard_ratio.finish(kTrials));

  constexpr double kTol = kDefaultTolerance;
  Tracker unique(suite, "fixed-point-uniqueness", "<=", 2 * kTol, seed);
  Tracker residual(suite, "fixed-point-residual", "<=", kTol, seed);
  Tracker converged(suite, "value-iteration-unconverged-runs", "<=", 0.0, seed);
  double unconverged = 0.0;
  for (std::size_t t = 0; t < kUniqueness; ++t) {
    Rng rng = trial_rng(seed, 4, t);
    const std::size_t ns = uniform_between(rng, 2, 10);
    const std::size_t na = uniform_between(rng, 2, 4);
    const TabularMDP mdp = random_instance(rng, ns, na, kGamma);
    const SupportSet support = random_support(rng, ns, na);
    const BackupKind kind = InSampleSoftMax{support, Temperature(log_uniform(rng, 0.01, 1.0))};
    const auto high = value_iteration(mdp, kind, QTable::constant(ns, na, 50.0), kTol);
    const auto low = value_iteration(mdp, kind, QTable::constant(ns, na, -50.0), kTol);
    unique.observe(sup_norm_diff(high.q, low.q), t);
    residual.observe(sup_norm_diff(backup(mdp, high.q, kind), high.q), t);
    if (!high.converged || !low.converged) unconverged += 1.0;
    converged.observe(unconverged, t);
  }
  out.push_back(unique.finish(kUniqueness));
  out.push_back(residual.finish(kUniqueness));
  out.push_back(converged.finish(kUniqueness));
}

// -- monotonicity ------------------------------------------------------------

void suite_monotonicity(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  constexpr std::size_t kTrials = 200;
  constexpr std::size_t kSteps = 50;
  const std::string suite = "monotonicity";
  Tracker mono(suite, "onpolicy-monotonicity-min-gap", ">=", -1e-12, seed);
  Tracker rate(suite, "onpolicy-rate-excess", "<=", 1e-9, seed);
  Tracker lipschitz(suite, "onpolicy-lipschitz", "<=", 0.9 + 1e-12, seed);
  Tracker eval(suite, "policy-evaluation-vs-linear-solve", "<=", kDefaultTolerance + 1e-10, seed);

  for (std::size_t t = 0; t < kTrials; ++t) {
    Rng rng = trial_rng(seed, 5, t);
    const std::size_t ns = uniform_between(rng, 2, 10);
    const std::size_t na = uniform_between(rng, 2, 5);
    const TabularMDP mdp = random_instance(rng, ns, na);
    const Policy pi = random_policy_under(rng, SupportSet::full(ns, na));
    const Temperature tau(log_uniform(rng, 0.01, 10.0));

    const QTable q2 = random_q(rng, ns, na, -10.0, 10.0);
    std::vector<double> bumped = q2.values();
    for (double& x : bumped) x += uniform01(rng) < 0.3 ? 0.0 : uniform(rng, 0.0, 5.0);
    const QTable q1(ns, na, std::move(bumped));
    const QTable t1 = onpolicy_soft_backup(mdp, q1, pi, tau);
    const QTable t2 = onpolicy_soft_backup(mdp, q2, pi, tau);
    mono.observe(min_diff(t1, t2), t);
    lipschitz.observe(sup_norm_diff(t1, t2) / sup_norm_diff(q1, q2), t);

    const QTable fixed = exact_soft_q_value(mdp, pi, tau);
    QTable q = random_q(rng, ns, na, -50.0, 50.0);
    const double e0 = sup_norm_diff(q, fixed);
    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= kSteps; ++k) {
      q = onpolicy_soft_backup(mdp, q, pi, tau);
      excess = std::max(excess, sup_norm_diff(q, fixed) -
                                    std::pow(mdp.gamma(), static_cast<double>(k)) * e0);
    }
    rate.observe(excess, t);

    eval.observe(sup_norm_diff(soft_policy_evaluation(mdp, pi, tau).q, fixed), t);
  }
  for (Tracker* tr : {&mono, &rate, &lipschitz, &eval}) out.push_back(tr->finish(kTrials));
}

// -- improvement -------------------------------------------------------------

void suite_improvement(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  constexpr std::size_t kTrials = 50;
  const std::string suite = "improvement";
  Tracker improve(suite, "min-elementwise-increase", ">=", -1e-9, seed);
  Tracker support(suite, "iterate-off-support-mass", "<=", 0.0, seed);
  Tracker vs_vi(suite, "policy-iteration-vs-value-iteration", "<=", 1e-6, seed);
  Tracker consistency(suite, "final-policy-consistency", "<=", 1e-6, seed);
  Tracker converged(suite, "unconverged-runs", "<=", 0.0, seed);
  Tracker singleton(suite, "deterministic-beta-fixed", "<=", 0.0, seed);

  double unconverged = 0.0;
  for (std::size_t t = 0; t < kTrials; ++t) {
    Rng rng = trial_rng(seed, 6, t);
    const std::size_t ns = uniform_between(rng, 2, 10);
    const std::size_t na = uniform_between(rng, 2, 4);
    const TabularMDP mdp = random_instance(rng, ns, na);
    const SupportSet supp = random_support(rng, ns, na);
    const Policy beta = random_policy_on(rng, supp);
    const Temperature tau(log_uniform(rng, 0.05, 1.0));

    PolicyIterationOptions options;
    options.keep_trajectory = true;
    const auto result = insample_soft_policy_iteration(mdp, beta, tau, options);
    double inc = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < result.values.size(); ++k) {
      inc = std::min(inc, min_diff(result.values[k + 1], result.values[k]));
    }
    if (result.values.size() > 1) improve.observe(inc, t);
    double off = 0.0;
    for (const Policy& p : result.policies) off = std::max(off, off_support_mass(p, supp));
    support.observe(off, t);

    const auto vi = value_iteration(mdp, InSampleSoftMax{supp, tau}, QTable::constant(ns, na, 0.0),
                                    1e-10);
    vs_vi.observe(sup_norm_diff(result.q, vi.q), t);

    double gap = 0.0;
    for (StateId s = 0; s < ns; ++s) {
      gap = std::max(gap, max_abs_diff(insample_softmax_policy(result.q.row(s), beta.row(s), tau),
                                       result.policy.row(s)));
    }
    consistency.observe(gap, t);
    if (!result.report.converged || !vi.converged) unconverged += 1.0;
    converged.observe(unconverged, t);

    std::vector<double> det(ns * na, 0.0);
    for (StateId s = 0; s < ns; ++s) det[s * na + masked_argmax(beta.row(s), supp.row(s))] = 1.0;
    const Policy det_beta(ns, na, det);
    const auto fixed = insample_soft_policy_iteration(mdp, det_beta, tau);
    singleton.observe(max_abs_diff(fixed.policy.probs(), det_beta.probs()), t);
  }
  for (Tracker* tr : {&improve, &support, &vs_vi, &consistency, &converged, &singleton}) {
    out.push_back(tr->finish(kTrials));
  }
}

// -- tau limit ---------------------------------------------------------------

void suite_tau_limit(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  constexpr std::size_t kTrials = 20;
  constexpr std::size_t kActions = 4;
  constexpr double kMargin = 1e-2;
  const std::vector<double> schedule = {1.0, 0.1, 0.01, 1e-3, 1e-4};
  const std::string suite = "tau-limit";
  Tracker ratio(suite, "gap-over-bound", "<=", 1.0, seed);
  Tracker monotone(suite, "gap-increase-along-schedule", "<=", 1e-9, seed);
  Tracker greedy(suite, "greedy-disagreements", "<=", 0.0, seed);
  Tracker brute(suite, "hard-optimum-vs-enumeration", "<=", 1e-8, seed);
  Tracker singleton(suite, "singleton-support-gap", "<=", 0.0, seed);

  for (std::size_t t = 0; t < kTrials; ++t) {
    Rng rng = trial_rng(seed, 7, t);
    const std::size_t ns = uniform_between(rng, 2, 10);
    const TabularMDP mdp = random_instance(rng, ns, kActions, 0.9);
    const SupportSet supp = random_support(rng, ns, kActions);

    const auto gaps = tau_limit_check(mdp, supp, schedule);
    double worst = 0.0;
    double rise = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      worst = std::max(worst, gaps[i].gap / gaps[i].bound);
      if (i > 0) rise = std::max(rise, gaps[i].gap - gaps[i - 1].gap);
    }
    ratio.observe(worst, t);
    monotone.observe(rise, t);

    const QTable zero = QTable::constant(ns, kActions, 0.0);
    const auto hard = value_iteration(mdp, InSampleHardMax{supp}, zero, 1e-12);
    const auto soft =
        value_iteration(mdp, InSampleSoftMax{supp, Temperature(schedule.back())}, zero, 1e-12);
    double disagreements = 0.0;
    for (StateId s = 0; s < ns; ++s) {
      const auto row = hard.q.row(s);
      const ActionId best = masked_argmax(row, supp.row(s));
      double runner_up = -std::numeric_limits<double>::infinity();
      for (ActionId a = 0; a < kActions; ++a) {
        if (a != best && supp.allowed(s, a)) runner_up = std::max(runner_up, row[a]);
      }
      if (row[best] - runner_up <= kMargin) continue;
      if (masked_argmax(soft.q.row(s), supp.row(s)) != best) disagreements += 1.0;
    }
    greedy.observe(disagreements, t);

    // At most two states keep two actions, so at most four policies exist.
    std::vector<std::uint8_t> small(ns * kActions, 0);
    for (StateId s = 0; s < ns; ++s) {
      const auto row = supp.row(s);
      std::vector<ActionId> on;
      for (ActionId a = 0; a < kActions; ++a) {
        if (row[a]) on.push_back(a);
      }
      small[s * kActions + on[0]] = 1;
      if (s < 2) small[s * kActions + (on.size() > 1 ? on[1] : (on[0] + 1) % kActions)] = 1;
    }
    const SupportSet few(ns, kActions, std::move(small));
    const auto few_hard = value_iteration(mdp, InSampleHardMax{few}, zero, 1e-12);
    brute.observe(sup_norm_diff(brute_force_insample_optimum(mdp, few), few_hard.q), t);

    std::vector<std::uint8_t> one(ns * kActions, 0);
    for (StateId s = 0; s < ns; ++s) one[s * kActions + uniform_index(rng, kActions)] = 1;
    double single_gap = 0.0;
    for (const TauGap& g : tau_limit_check(mdp, SupportSet(ns, kActions, one), schedule)) {
      single_gap = std::max(single_gap, g.gap);
    }
    singleton.observe(single_gap, t);
  }
  for (Tracker* tr : {&ratio, &monotone, &greedy, &brute, &singleton}) {
    out.push_back(tr->finish(kTrials));
  }
}

// -- optimality --------------------------------------------------------------

void suite_optimality(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  constexpr std::size_t kTrials = 100;
  constexpr std::size_t kPolicies = 100;
  const std::string suite = "optimality";
  Tracker dominance(suite, "dominance-min-gap", ">=", -1e-9, seed);
  Tracker superharmonic(suite, "dominance-premise-violation", "<=", 1e-10, seed);
  Tracker optimal(suite, "optimal-value-min-gap", ">=", -1e-9, seed);
  Tracker vs_pi(suite, "optimal-value-vs-policy-iteration", "<=", 1e-6, seed);

  for (std::size_t t = 0; t < kTrials; ++t) {
    Rng rng = trial_rng(seed, 8, t);
    const std::size_t ns = uniform_between(rng, 2, 8);
    const std::size_t na = uniform_between(rng, 2, 4);
    const TabularMDP mdp = random_instance(rng, ns, na);
    const SupportSet supp = random_support(rng, ns, na);
    const Policy beta = random_policy_on(rng, supp);
    const Temperature tau(log_uniform(rng, 0.05, 1.0));
    const BackupKind kind = InSampleSoftMax{supp, tau};
    const QTable opt = value_iteration(mdp, kind, QTable::constant(ns, na, 0.0), 1e-12).q;

    // Any q with q >= T q dominates every support-constrained soft value;
    // shifting the fixed point up by c >= 0 gives such a q.
    const QTable upper = add(opt, uniform01(rng) < 0.25 ? 0.0 : uniform(rng, 0.0, 5.0));
    superharmonic.observe(-min_diff(upper, backup(mdp, upper, kind)), t);

    std::vector<double> v_opt(ns);
    for (StateId s = 0; s < ns; ++s) v_opt[s] = insample_softmax_value(opt.row(s), supp.row(s), tau);

    double dom = std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kPolicies; ++k) {
      const Policy pi = random_policy_under(rng, supp);
      const QTable q_pi = exact_soft_q_value(mdp, pi, tau);
      dom = std::min(dom, min_diff(upper, q_pi));
      for (StateId s = 0; s < ns; ++s) gap = std::min(gap, v_opt[s] - soft_policy_value(q_pi, pi, tau, s));
    }
    dominance.observe(dom, t);
    optimal.observe(gap, t);

    const auto pi_result = insample_soft_policy_iteration(mdp, beta, tau);
    double diff = 0.0;
    for (StateId s = 0; s < ns; ++s) {
      diff = std::max(diff, std::abs(v_opt[s] - soft_policy_value(pi_result.q, pi_result.policy, tau, s)));
    }
    vs_pi.observe(diff, t);
  }
  for (Tracker* tr : {&dominance, &superharmonic, &optimal, &vs_pi}) out.push_back(tr->finish(kTrials));
}

// -- gradients ---------------------------------------------------------------

constexpr double kStep = 1e-5;

// ||analytic - numeric||_inf / max(||analytic||_inf, ||numeric||_inf, 1e-8)
double gradient_error(Approximator& net, const std::vector<double>& analytic,
                      const std::function<double()>& loss) {
  auto& params = net.parameters();
  std::vector<double> numeric(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + kStep;
    const double up = loss();
    params[i] = saved - kStep;
    const double down = loss();
    params[i] = saved;
    numeric[i] = (up - down) / (2 * kStep);
  }
  const double scale = std::max({sup_norm(analytic), sup_norm(numeric), 1e-8});
  return max_abs_diff(analytic, numeric) / scale;
}

void randomize(Approximator& net, Rng& rng, double range) {
  for (double& p : net.parameters()) p = uniform(rng, -range, range);
}

void suite_gradients(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  constexpr std::size_t kTrials = 20;
  constexpr double kBound = 1e-5;
  const std::string suite = "gradients";
  Tracker behavior(suite, "behavior-loss-relative-error", "<=", kBound, seed);
  Tracker critic(suite, "critic-loss-relative-error", "<=", kBound, seed);
  Tracker baseline(suite, "baseline-loss-relative-error", "<=", kBound, seed);
  Tracker actor(suite, "actor-loss-relative-error", "<=", kBound, seed);
  Tracker linear(suite, "onehot-linear-relative-error", "<=", kBound, seed);
  Tracker mlp(suite, "mlp-relative-error", "<=", kBound, seed);

  for (std::size_t t = 0; t < kTrials; ++t) {
    Rng rng = trial_rng(seed, 9, t);
    const std::size_t ns = uniform_between(rng, 3, 6);
    const std::size_t na = uniform_between(rng, 2, 4);
    TrainConfig config;
    config.tau = uniform(rng, 0.5, 2.0);
    config.seed = rng();
    if (t % 2 == 1) {
      config.architecture = "mlp";
      config.hidden = t % 4 == 1 ? std::vector<std::size_t>{5} : std::vector<std::size_t>{4, 3};
    }
    InACAgent agent(ns, na, 0.9, config);
    for (Approximator* net : {&agent.actor(), &agent.behavior(), &agent.critic(),
                              &agent.baseline(), &agent.critic_target(), &agent.baseline_target()}) {
      randomize(*net, rng, 1.0);
    }
    std::vector<Transition> data(8);
    for (Transition& tr : data) {
      tr.state = uniform_index(rng, ns);
      tr.action = uniform_index(rng, na);
      tr.reward = uniform01(rng);
      tr.next_state = uniform_index(rng, ns);
    }
    const Batch batch(data);
    Rng action_rng = trial_rng(seed, 10, t);
    const std::vector<ActionId> actions = agent.sample_actor_actions(batch, action_rng);

    auto check = [&](Tracker& tracker, Approximator& net, const std::function<double()>& loss) {
      net.zero_grad();
      loss();
      const std::vector<double> analytic = net.gradient();
      tracker.observe(gradient_error(net, analytic, loss), t);
    };
    check(behavior, agent.behavior(), [&] { return agent.behavior_loss(batch); });
    check(critic, agent.critic(), [&] { return agent.critic_loss(batch); });
    check(baseline, agent.baseline(), [&] { return agent.baseline_loss(batch, actions); });
    check(actor, agent.actor(), [&] { return agent.actor_loss(batch); });

    // Approximators on dense inputs with <upstream, output> as the loss.
    const std::size_t n_in = uniform_between(rng, 2, 6);
    const std::size_t n_out = uniform_between(rng, 1, 4);
    const auto input = random_vector(rng, n_in, -1.0, 1.0);
    const auto upstream = random_vector(rng, n_out, -1.0, 1.0);
    auto dense_check = [&](Tracker& tracker, Approximator& net) {
      randomize(net, rng, 1.0);
      auto loss = [&] {
        const auto y = net.forward(input);
        return std::inner_product(y.begin(), y.end(), upstream.begin(), 0.0);
      };
      net.zero_grad();
      loss();
      net.backward(upstream);
      const std::vector<double> analytic = net.gradient();
      tracker.observe(gradient_error(net, analytic, loss), t);
    };
    OneHotLinear table(n_in, n_out, 0.0);
    dense_check(linear, table);
    Mlp network({n_in, uniform_between(rng, 2, 6), uniform_between(rng, 2, 6), n_out}, rng());
    dense_check(mlp, network);
  }
  for (Tracker* tr : {&behavior, &critic, &baseline, &actor, &linear, &mlp}) {
    out.push_back(tr->finish(kTrials));
  }
}

using Suite = void (*)(std::uint64_t, std::vector<VerifyCheck>&);

const std::vector<std::pair<std::string, Suite>>& suite_table() {
  static const std::vector<std::pair<std::string, Suite>> table = {
      {"identities", suite_identities},   {"contraction", suite_contraction},
      {"monotonicity", suite_monotonicity}, {"improvement", suite_improvement},
      {"tau-limit", suite_tau_limit},     {"optimality", suite_optimality},
      {"gradients", suite_gradients},
  };
  return table;
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

std::string VerifyReport::to_text() const {
  std::ostringstream out;
  for (const VerifyCheck& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.suite << '/' << c.name << ": measured "
        << format_real(c.measured) << ' ' << c.relation << ' ' << format_real(c.bound) << " over "
        << c.trials << " trials";
    if (!c.passed) out << " (seed " << c.seed << ", trial " << c.worst_trial << ')';
    out << '\n';
  }
  return out.str();
}

void VerifyReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "suite,check,passed,measured,relation,bound,trials,seed,worst_trial\n";
  for (const VerifyCheck& c : checks) {
    out << c.suite << ',' << c.name << ',' << (c.passed ? "true" : "false") << ','
        << format_real(c.measured) << ',' << c.relation << ',' << format_real(c.bound) << ','
        << c.trials << ',' << c.seed << ',' << c.worst_trial << '\n';
  }
}

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : suite_table()) n.push_back(name);
    return n;
  }();
  return names;
}

VerifyReport run_verify(const std::string& suite, std::uint64_t seed) {
  VerifyReport report;
  bool found = false;
  for (const auto& [name, fn] : suite_table()) {
    if (suite != "all" && suite != name) continue;
    found = true;
    fn(seed, report.checks);
  }
  if (!found) throw std::invalid_argument("unknown verify suite '" + suite + "'");
  return report;
}

}  // namespace insample
