#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "insample/envs.hpp"
#include "insample/solvers.hpp"

using namespace insample;

namespace {

const double kLog2 = std::log(2.0);

QTable zeros(const TabularMDP& mdp) { return QTable::constant(mdp.n_states(), mdp.n_actions(), 0.0); }

Policy random_full_policy(std::size_t ns, std::size_t na, Rng& rng) {
  std::vector<double> p(ns * na);
  for (StateId s = 0; s < ns; ++s) {
    double total = 0;
    for (ActionId a = 0; a < na; ++a) total += p[s * na + a] = 0.1 + uniform01(rng);
    for (ActionId a = 0; a < na; ++a) p[s * na + a] /= total;
  }
  return Policy(ns, na, p);
}

SupportSet random_support(std::size_t ns, std::size_t na, Rng& rng) {
  std::vector<std::uint8_t> m(ns * na);
  for (StateId s = 0; s < ns; ++s) {
    for (ActionId a = 0; a < na; ++a) m[s * na + a] = uniform01(rng) < 0.5;
    m[s * na + uniform_index(rng, na)] = 1;
  }
  return SupportSet(ns, na, m);
}

}  // namespace

TEST_CASE("value_iteration closed forms") {
  const TabularMDP mdp = fixtures::one_state(0, 1);
  const SolveReport hard = value_iteration(mdp, HardMax{}, zeros(mdp));
  CHECK(hard.converged);
  CHECK(std::abs(hard.q(0, 0) - 9.0) <= 1e-8);
  CHECK(std::abs(hard.q(0, 1) - 10.0) <= 1e-8);

  const SolveReport single =
      value_iteration(mdp, InSampleSoftMax{SupportSet(1, 2, {1, 0}), Temperature(0.37)}, zeros(mdp));
  CHECK(single.q(0, 0) == 0.0);
  CHECK(single.q(0, 1) == 1.0);
}

TEST_CASE("value_iteration report invariants") {
  const TabularMDP mdp = random_mdp(8, 3, 3, 5);
  const SolveReport r = value_iteration(mdp, SoftMax{Temperature(0.2)}, zeros(mdp));
  REQUIRE_FALSE(r.residuals.empty());
  CHECK(r.iterations == r.residuals.size());
  CHECK(r.converged);
  CHECK(r.residuals.back() <= kDefaultTolerance);
  // Residuals contract at rate gamma.
  for (std::size_t k = 1; k < r.residuals.size(); ++k) {
    CHECK(r.residuals[k] <= 0.9 * r.residuals[k - 1] + 1e-13);
  }
  const SolveReport capped = value_iteration(mdp, HardMax{}, zeros(mdp), 1e-8, 3);
  CHECK_FALSE(capped.converged);
  CHECK(capped.iterations == 3);
}

TEST_CASE("value_iteration fixed point is unique") {
  const TabularMDP mdp = random_mdp(8, 3, 3, 7);
  Rng rng = make_rng(7);
  const BackupKind kind = InSampleSoftMax{random_support(8, 3, rng), Temperature(0.1)};
  const auto a = value_iteration(mdp, kind, QTable::constant(8, 3, 50.0));
  const auto b = value_iteration(mdp, kind, QTable::constant(8, 3, -50.0));
  CHECK(sup_norm_diff(a.q, b.q) <= 2 * kDefaultTolerance);
}

TEST_CASE("soft_policy_evaluation closed forms") {
  MdpTables t;
  t.n_states = 1;
  t.n_actions = 1;
  t.reward = {1.0};
  t.transition = {1.0};
  const auto loop = soft_policy_evaluation(TabularMDP(t), uniform_policy(1, 1), Temperature(0.5));
  CHECK(std::abs(loop.q(0, 0) - 10.0) <= 1e-8);

  const auto flat =
      soft_policy_evaluation(fixtures::one_state(0, 0), uniform_policy(1, 2), Temperature(1));
  CHECK(std::abs(flat.q(0, 0) - 9 * kLog2) <= 1e-8);
  CHECK(std::abs(flat.q(0, 1) - 9 * kLog2) <= 1e-8);
}

TEST_CASE("on-policy iteration converges at rate gamma") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TabularMDP mdp = random_mdp(6, 3, 2, seed);
    Rng rng = make_rng(seed, 5);
    const Policy pi = random_full_policy(6, 3, rng);
    const Temperature tau(0.3);
    const QTable fixed = exact_soft_q_value(mdp, pi, tau);
    QTable q = QTable::constant(6, 3, 20.0);
    const double e0 = sup_norm_diff(q, fixed);
    for (int k = 1; k <= 50; ++k) {
      q = onpolicy_soft_backup(mdp, q, pi, tau);
      CHECK(sup_norm_diff(q, fixed) <= std::pow(0.9, k) * e0 + 1e-10);
    }
  }
}

TEST_CASE("insample_soft_policy_iteration") {
  SUBCASE("deterministic beta is the only feasible policy") {
    const TabularMDP mdp = random_mdp(4, 3, 2, 2);
    const Policy beta(4, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0});
    const auto r = insample_soft_policy_iteration(mdp, beta, Temperature(0.5));
    CHECK(r.policy == beta);
    CHECK(sup_norm_diff(r.q, exact_soft_q_value(mdp, beta, Temperature(0.5))) <= 1e-9);
  }
  SUBCASE("agrees with in-sample soft value iteration") {
    const TabularMDP mdp = random_mdp(6, 3, 3, 3);
    const Policy beta = uniform_policy(6, 3);
    const Temperature tau(0.1);
    PolicyIterationOptions options;
    options.keep_trajectory = true;
    const auto r = insample_soft_policy_iteration(mdp, beta, tau, options);
    CHECK(r.report.converged);
    const auto vi = value_iteration(mdp, InSampleSoftMax{SupportSet::full(6, 3), tau}, zeros(mdp), 1e-10);
    CHECK(sup_norm_diff(r.q, vi.q) <= 1e-6);
    for (StateId s = 0; s < 6; ++s) {
      const auto improved = insample_softmax_policy(r.q.row(s), beta.row(s), tau);
      for (ActionId a = 0; a < 3; ++a) CHECK(std::abs(improved[a] - r.policy(s, a)) <= 1e-6);
    }
    for (std::size_t k = 0; k + 1 < r.values.size(); ++k) {
      for (std::size_t i = 0; i < r.values[k].values().size(); ++i) {
        CHECK(r.values[k + 1].values()[i] >= r.values[k].values()[i] - 1e-9);
      }
    }
  }
  SUBCASE("iterates stay on a partial support") {
    const TabularMDP mdp = random_mdp(7, 4, 2, 9);
    Rng rng = make_rng(9);
    const SupportSet support = random_support(7, 4, rng);
    std::vector<double> p(28, 0.0);
    for (StateId s = 0; s < 7; ++s) {
      for (ActionId a = 0; a < 4; ++a) p[s * 4 + a] = support.allowed(s, a) ? 1.0 / support.count(s) : 0.0;
    }
    PolicyIterationOptions options;
    options.keep_trajectory = true;
    const auto r = insample_soft_policy_iteration(mdp, Policy(7, 4, p), Temperature(0.2), options);
    for (const Policy& pi : r.policies) {
      for (StateId s = 0; s < 7; ++s) {
        for (ActionId a = 0; a < 4; ++a) {
          if (!support.allowed(s, a)) CHECK(pi(s, a) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("brute_force_insample_optimum") {
  const TabularMDP mdp = fixtures::one_state(0, 1);
  const QTable both = brute_force_insample_optimum(mdp, SupportSet::full(1, 2));
  CHECK(both(0, 0) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(both(0, 1) == doctest::Approx(10.0).epsilon(1e-12));
  const QTable only0 = brute_force_insample_optimum(mdp, SupportSet(1, 2, {1, 0}));
  CHECK(only0(0, 0) == doctest::Approx(0.0));
  CHECK(only0(0, 1) == doctest::Approx(1.0));

  const TabularMDP small = random_mdp(2, 2, 2, 1);
  Rng rng = make_rng(1);
  const SupportSet support = random_support(2, 2, rng);
  const auto vi = value_iteration(small, InSampleHardMax{support}, zeros(small), 1e-12);
  CHECK(sup_norm_diff(brute_force_insample_optimum(small, support), vi.q) <= 1e-8);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularMDP m = random_mdp(6, 3, 2, seed);
    Rng r2 = make_rng(seed, 3);
    const SupportSet s = random_support(6, 3, r2);
    const auto hard = value_iteration(m, InSampleHardMax{s}, zeros(m), 1e-12);
    CHECK(sup_norm_diff(brute_force_insample_optimum(m, s), hard.q) <= 1e-8);
  }

  CHECK_THROWS_AS(brute_force_insample_optimum(random_mdp(13, 2, 1, 0), SupportSet::full(13, 2)),
                  std::length_error);
  CHECK_THROWS_AS(brute_force_insample_optimum(random_mdp(2, 5, 1, 0), SupportSet::full(2, 5)),
                  std::length_error);
  CHECK_THROWS_AS(brute_force_insample_optimum(random_mdp(12, 4, 1, 0), SupportSet::full(12, 4)),
                  std::length_error);
}

TEST_CASE("tau_limit_check") {
  const std::vector<double> schedule{1, 0.1, 0.01, 1e-3, 1e-4};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TabularMDP mdp = random_mdp(8, 4, 3, seed);
    Rng rng = make_rng(seed, 4);
    const SupportSet support = random_support(8, 4, rng);
    const auto gaps = tau_limit_check(mdp, support, schedule);
    REQUIRE(gaps.size() == schedule.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      CHECK(gaps[i].gap <= gaps[i].bound);
      CHECK(gaps[i].bound == doctest::Approx(schedule[i] * std::log(4.0) / 0.1));
      if (i > 0) CHECK(gaps[i].gap <= gaps[i - 1].gap + 1e-9);
    }
    CHECK(gaps.back().gap <= 1e-3);

    std::vector<std::uint8_t> single(32, 0);
    for (StateId s = 0; s < 8; ++s) single[s * 4 + uniform_index(rng, 4)] = 1;
    for (const TauGap& g : tau_limit_check(mdp, SupportSet(8, 4, single), schedule)) CHECK(g.gap == 0.0);
  }
  CHECK_THROWS(tau_limit_check(random_mdp(2, 2, 1, 0), SupportSet::full(2, 2), {0.1, 1.0}));
}

TEST_CASE("greedy policies coincide at small temperature") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularMDP mdp = random_mdp(8, 4, 2, seed + 100);
    Rng rng = make_rng(seed, 6);
    const SupportSet support = random_support(8, 4, rng);
    const auto hard = value_iteration(mdp, InSampleHardMax{support}, zeros(mdp), 1e-12);
    const auto soft = value_iteration(mdp, InSampleSoftMax{support, Temperature(1e-4)}, zeros(mdp), 1e-12);
    const Policy g_hard = greedy_policy(hard.q, support);
    const Policy g_soft = greedy_policy(soft.q, support);
    for (StateId s = 0; s < 8; ++s) {
      std::vector<double> row(hard.q.row(s).begin(), hard.q.row(s).end());
      const ActionId best = masked_argmax(row, support.row(s));
      double second = -1e300;
      for (ActionId a = 0; a < 4; ++a) {
        if (a != best && support.allowed(s, a)) second = std::max(second, row[a]);
      }
      if (row[best] - second > 1e-2) CHECK(g_hard(s, best) == g_soft(s, best));
    }
  }
}

TEST_CASE("write_report_csv") {
  fixtures::TempDir dir;
  SolveReport r{QTable::constant(1, 1, 0.0), 2, {0.5, 0.25}, true};
  write_report_csv(r, dir / "r.csv");
  CHECK(fixtures::slurp(dir / "r.csv") == "iteration,residual\n1,0.5\n2,0.25\n");
}
