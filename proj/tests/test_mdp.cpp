#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "insample/envs.hpp"
#include "insample/mdp.hpp"
#include "insample/text.hpp"

using namespace insample;

namespace {

MdpTables two_state_tables() {
  MdpTables t;
  t.n_states = 2;
  t.n_actions = 1;
  t.gamma = 0.9;
  t.reward = {0.0, 1.0};
  t.transition = {0.5, 0.5, 0.5, 0.5};
  return t;
}

// Plain Bellman expectation iteration, independent of the library's solvers.
std::vector<double> iterate_policy_value(const TabularMDP& mdp, const Policy& pi,
                                         std::size_t steps) {
  const std::size_t ns = mdp.n_states();
  std::vector<double> v(ns, 0.0), next(ns);
  for (std::size_t k = 0; k < steps; ++k) {
    for (StateId s = 0; s < ns; ++s) {
      double acc = 0.0;
      for (ActionId a = 0; a < mdp.n_actions(); ++a) {
        double ev = 0.0;
        const auto row = mdp.transition_row(s, a);
        for (StateId s2 = 0; s2 < ns; ++s2) ev += row[s2] * v[s2];
        acc += pi(s, a) * (mdp.reward(s, a) + mdp.gamma() * ev);
      }
      next[s] = acc;
    }
    std::swap(v, next);
  }
  return v;
}

}  // namespace

TEST_CASE("validate_mdp accepts a well-formed MDP") {
  CHECK_NOTHROW(validate_mdp(two_state_tables()));
  CHECK_NOTHROW(TabularMDP(two_state_tables()));
}

TEST_CASE("validate_mdp reports the first violated invariant") {
  SUBCASE("row not stochastic") {
    MdpTables t = two_state_tables();
    t.transition = {0.5, 0.5, 0.5, 0.4};
    try {
      validate_mdp(t);
      FAIL("expected MdpError");
    } catch (const MdpError& e) {
      CHECK(std::string(e.what()).find("row not stochastic") != std::string::npos);
      CHECK(e.state() == 1);
      CHECK(e.action() == 0);
    }
  }
  SUBCASE("discount must be < 1") {
    MdpTables t = two_state_tables();
    t.gamma = 1.0;
    CHECK_THROWS_WITH_AS(validate_mdp(t), doctest::Contains("discount must be < 1"), MdpError);
  }
  SUBCASE("negative probability") {
    MdpTables t = two_state_tables();
    t.transition = {1.5, -0.5, 0.5, 0.5};
    CHECK_THROWS_AS(validate_mdp(t), MdpError);
  }
  SUBCASE("non-finite reward") {
    MdpTables t = two_state_tables();
    t.reward[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH_AS(validate_mdp(t), doctest::Contains("reward not finite"), MdpError);
  }
  SUBCASE("row within 1e-12 is accepted") {
    MdpTables t = two_state_tables();
    t.transition = {0.5, 0.5 + 5e-13, 0.5, 0.5};
    CHECK_NOTHROW(validate_mdp(t));
  }
}

TEST_CASE("uniform_policy") {
  const Policy p = uniform_policy(2, 4);
  for (double x : p.probs()) CHECK(x == 0.25);
  CHECK(uniform_policy(1, 1).probs() == std::vector<double>{1.0});
  const Policy q = uniform_policy(3, 2);
  for (double x : q.probs()) CHECK(x == 0.5);
}

TEST_CASE("Policy rejects rows that are not distributions") {
  CHECK_THROWS(Policy(1, 2, {0.6, 0.6}));
  CHECK_THROWS(Policy(1, 2, {1.5, -0.5}));
  CHECK_NOTHROW(Policy(1, 2, {0.3, 0.7}));
}

TEST_CASE("greedy_policy picks the supported argmax with lowest-index ties") {
  const QTable q(1, 3, {1.0, 5.0, 3.0});
  CHECK(greedy_policy(q, SupportSet::full(1, 3)).probs() == std::vector<double>{0, 1, 0});
  CHECK(greedy_policy(q, SupportSet(1, 3, {1, 0, 1})).probs() == std::vector<double>{0, 0, 1});
  const QTable tie(1, 2, {2.0, 2.0});
  CHECK(greedy_policy(tie, SupportSet::full(1, 2)).probs() == std::vector<double>{1, 0});
}

TEST_CASE("greedy_policy names the state with empty support") {
  const QTable q(2, 2, {0, 1, 2, 3});
  CHECK_THROWS_WITH(greedy_policy(q, SupportSet(2, 2, {1, 0, 0, 0})),
                    doctest::Contains("state 1"));
}

TEST_CASE("greedy_policy is shift invariant per state and stays on the support") {
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> values(5 * 4), mask_values(5 * 4);
    std::vector<std::uint8_t> mask(5 * 4);
    for (auto& v : values) v = uniform01(rng) * 10;
    for (StateId s = 0; s < 5; ++s) {
      for (ActionId a = 0; a < 4; ++a) mask[s * 4 + a] = uniform01(rng) < 0.5;
      mask[s * 4 + uniform_index(rng, 4)] = 1;
    }
    const SupportSet support(5, 4, mask);
    const Policy base = greedy_policy(QTable(5, 4, values), support);
    std::vector<double> shifted = values;
    for (StateId s = 0; s < 5; ++s) {
      const double c = uniform01(rng) * 100 - 50;
      for (ActionId a = 0; a < 4; ++a) shifted[s * 4 + a] += c;
    }
    CHECK(greedy_policy(QTable(5, 4, shifted), support) == base);
    for (StateId s = 0; s < 5; ++s) {
      for (ActionId a = 0; a < 4; ++a) {
        if (!support.allowed(s, a)) CHECK(base(s, a) == 0.0);
      }
    }
  }
}

TEST_CASE("exact_policy_value closed forms") {
  MdpTables t;
  t.n_states = 1;
  t.n_actions = 1;
  t.reward = {1.0};
  t.transition = {1.0};
  const TabularMDP loop(t);
  CHECK(exact_policy_value(loop, uniform_policy(1, 1))(0) == doctest::Approx(10.0).epsilon(1e-12));

  const TabularMDP zero = random_mdp(4, 2, 2, 3);
  MdpTables zt = zero.tables();
  std::fill(zt.reward.begin(), zt.reward.end(), 0.0);
  const VTable v = exact_policy_value(TabularMDP(zt), uniform_policy(4, 2));
  for (double x : v.values()) CHECK(x == 0.0);
}

TEST_CASE("exact_policy_value matches a long iterative evaluation") {
  const TabularMDP mdp = random_mdp(3, 2, 2, 0);
  const Policy pi = uniform_policy(3, 2);
  const VTable v = exact_policy_value(mdp, pi);
  const auto oracle = iterate_policy_value(mdp, pi, 1000000);
  for (StateId s = 0; s < 3; ++s) CHECK(std::abs(v(s) - oracle[s]) <= 1e-8);
}

TEST_CASE("exact_policy_value satisfies the Bellman expectation equation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TabularMDP mdp = random_mdp(6, 3, 3, seed);
    Rng rng = make_rng(seed, 99);
    std::vector<double> probs(6 * 3);
    for (StateId s = 0; s < 6; ++s) {
      double total = 0;
      for (ActionId a = 0; a < 3; ++a) total += probs[s * 3 + a] = uniform01(rng);
      for (ActionId a = 0; a < 3; ++a) probs[s * 3 + a] /= total;
    }
    const Policy pi(6, 3, probs);
    const VTable v = exact_policy_value(mdp, pi);
    const QTable q = q_from_v(mdp, v);
    for (StateId s = 0; s < 6; ++s) {
      double backed = 0;
      for (ActionId a = 0; a < 3; ++a) backed += pi(s, a) * q(s, a);
      CHECK(std::abs(backed - v(s)) <= 1e-10);
    }
  }
}

TEST_CASE("SupportSet bookkeeping") {
  const SupportSet s(3, 2, {1, 0, 0, 0, 1, 1});
  CHECK(s.count(0) == 1);
  CHECK(s.empty(1));
  CHECK(s.count(2) == 2);
  CHECK(s.empty_states() == std::vector<StateId>{1});
  const SupportSet of = SupportSet::of(Policy(2, 2, {0.0, 1.0, 0.5, 0.5}));
  CHECK(of == SupportSet(2, 2, {0, 1, 1, 1}));
}

TEST_CASE("MDP files round-trip exactly") {
  fixtures::TempDir dir;
  const TabularMDP mdp = random_mdp(5, 3, 2, 42, 0.95);
  write_mdp(mdp, dir / "m.txt");
  const TabularMDP back = read_mdp(dir / "m.txt");
  CHECK(back.tables().reward == mdp.tables().reward);
  CHECK(back.tables().transition == mdp.tables().transition);
  CHECK(back.gamma() == mdp.gamma());

  fixtures::spit(dir / "bad.txt", "n_states 1\nn_actions 1\ngamma 0.9\nreward\nx\n");
  CHECK_THROWS_WITH(read_mdp(dir / "bad.txt"), doctest::Contains("line 5"));
}

TEST_CASE("text helpers") {
  CHECK(format_real(0.1) == "0.1");
  CHECK(parse_real(format_real(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_fixed(1e-5) == "0.00001");
  CHECK_THROWS(parse_real("1.0x"));
  CHECK_THROWS(parse_unsigned("-1"));
  CHECK(parse_unsigned("42") == 42);
  CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(trim("  x \t") == "x");
}
