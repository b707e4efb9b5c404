#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "insample/agents.hpp"
#include "insample/harness.hpp"
#include "insample/solvers.hpp"

using namespace insample;

namespace {

const FourRooms& env() {
  static const FourRooms e;
  return e;
}

TrainConfig small_config() {
  TrainConfig c;
  c.learning_rate = 0.03;
  c.batch_size = 20;
  c.updates = 200;
  c.eval_interval = 100;
  c.bc_steps = 50;
  c.eval_episodes = 2;
  return c;
}

std::vector<double> flat_gradient(Approximator& a) { return a.gradient(); }

bool all_zero(const std::vector<double>& v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("default training configuration") {
  const TrainConfig c;
  CHECK(c.init_value == 10.0);
  CHECK(c.polyak == 0.995);
  CHECK(c.tau == 0.01);
  CHECK(c.batch_size == 100);
  CHECK_NOTHROW(c.validate(10000));
}

TEST_CASE("TrainConfig::validate names the bad field") {
  auto bad = [](auto mutate, const char* field) {
    TrainConfig c;
    mutate(c);
    CHECK_THROWS_WITH_AS(c.validate(1000), doctest::Contains(field), std::invalid_argument);
  };
  bad([](TrainConfig& c) { c.learning_rate = 0; }, "learning_rate");
  bad([](TrainConfig& c) { c.tau = -1; }, "tau");
  bad([](TrainConfig& c) { c.batch_size = 0; }, "batch_size");
  bad([](TrainConfig& c) { c.batch_size = 5000; }, "batch_size");
  bad([](TrainConfig& c) { c.eval_interval = 0; }, "eval_interval");
  bad([](TrainConfig& c) { c.weight_floor = 2; }, "weight_floor");
  bad([](TrainConfig& c) { c.polyak = 1.5; }, "polyak");
  bad([](TrainConfig& c) { c.architecture = "cnn"; }, "architecture");
  bad([](TrainConfig& c) {
    c.architecture = "mlp";
    c.hidden.clear();
  }, "hidden");
}

TEST_CASE("critic loss regresses on the bootstrapped target") {
  TrainConfig c;
  c.init_value = 0.0;
  InACAgent agent(3, 4, 0.9, c);
  agent.baseline_target().parameters() = {0.0, 0.0, 2.0};
  const std::vector<Transition> batch{{0, 1, 1.0, 2}};
  agent.critic().zero_grad();
  agent.actor().zero_grad();
  agent.baseline().zero_grad();
  // target 1 + 0.9 * 2 = 2.8, prediction 0
  CHECK(agent.critic_loss(batch) == doctest::Approx(0.5 * 2.8 * 2.8));
  std::vector<double> expected(12, 0.0);
  expected[0 * 4 + 1] = -2.8;
  const auto g = flat_gradient(agent.critic());
  for (std::size_t i = 0; i < 12; ++i) CHECK(g[i] == doctest::Approx(expected[i]));
  CHECK(all_zero(agent.actor().gradient()));
  CHECK(all_zero(agent.baseline().gradient()));

  InACAgent optimistic(3, 4, 0.9, TrainConfig{});
  // Optimistic init: q = 10 against the target 0.9 * 10.
  CHECK(optimistic.critic_loss(std::vector<Transition>{{0, 1, 0.0, 2}}) == doctest::Approx(0.5));
}

TEST_CASE("baseline loss uses the entropy-regularized target") {
  TrainConfig c;
  InACAgent agent(2, 4, 0.9, c);
  const std::vector<Transition> batch{{1, 0, 0.0, 0}};
  const std::vector<ActionId> actions{3};
  agent.baseline().zero_grad();
  // Uniform actor: -tau log pi = tau log 4.
  const double err = -c.tau * std::log(4.0);
  CHECK(agent.baseline_loss(batch, actions) == doctest::Approx(0.5 * err * err));
  CHECK(agent.baseline().gradient()[1] == doctest::Approx(err));
  CHECK(agent.baseline().gradient()[0] == 0.0);

  // A near-deterministic actor makes the target the critic value itself.
  agent.actor().parameters()[1 * 4 + 3] = 60.0;
  agent.baseline().zero_grad();
  CHECK(agent.baseline_loss(batch, actions) == doctest::Approx(0.0).epsilon(1e-20));
  CHECK_THROWS(agent.baseline_loss(batch, std::vector<ActionId>{}));
}

TEST_CASE("actor loss with unit weights is behavior cloning") {
  TrainConfig c;
  InACAgent agent(2, 4, 0.9, c);
  // Behavior deterministic on the dataset action and q = v: weight exactly 1.
  std::vector<double> table(8, 0.0);
  table[0 * 4 + 2] = 1.0;
  table[1 * 4 + 1] = 1.0;
  agent.set_behavior_table(Policy(2, 4, table));
  const std::vector<Transition> batch{{0, 2, 0.0, 1}, {1, 1, 0.0, 0}};
  agent.actor().zero_grad();
  CHECK(agent.actor_loss(batch) == doctest::Approx(std::log(4.0)));
  // Gradient of the mean cross-entropy: (p - onehot) / batch.
  const auto g = agent.actor().gradient();
  CHECK(g[0 * 4 + 2] == doctest::Approx((0.25 - 1.0) / 2));
  CHECK(g[0 * 4 + 0] == doctest::Approx(0.25 / 2));
  CHECK(g[1 * 4 + 1] == doctest::Approx((0.25 - 1.0) / 2));
}

TEST_CASE("actor loss with a uniform behavior weighs by the action count") {
  TrainConfig c;
  InACAgent agent(2, 4, 0.9, c);
  agent.set_behavior_table(uniform_policy(2, 4));
  const std::vector<Transition> batch{{0, 2, 0.0, 1}};
  agent.actor().zero_grad();
  CHECK(agent.actor_loss(batch) == doctest::Approx(4.0 * std::log(4.0)));

  TrainConfig exact = c;
  exact.exact_normalizer = true;
  InACAgent normalized(2, 4, 0.9, exact);
  normalized.set_behavior_table(uniform_policy(2, 4));
  normalized.actor().zero_grad();
  // v = 10 + tau log 4 cancels the behavior term.
  CHECK(normalized.actor_loss(batch) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("actor weight clipping and floor") {
  TrainConfig c;
  InACAgent agent(1, 2, 0.9, c);
  agent.set_behavior_table(uniform_policy(1, 2));
  const std::vector<Transition> batch{{0, 0, 0.0, 0}};
  agent.critic().parameters() = {100.0, 0.0};
  agent.actor().zero_grad();
  CHECK(agent.actor_loss(batch) == doctest::Approx(std::exp(20.0) * std::log(2.0)));

  agent.critic().parameters() = {-100.0, 0.0};
  agent.actor().zero_grad();
  CHECK(agent.actor_loss(batch) == doctest::Approx(1e-8 * std::log(2.0)));

  TrainConfig no_floor = c;
  no_floor.weight_floor = 0.0;
  InACAgent bare(1, 2, 0.9, no_floor);
  bare.set_behavior_table(uniform_policy(1, 2));
  bare.critic().parameters() = {-100.0, 0.0};
  bare.actor().zero_grad();
  CHECK(bare.actor_loss(batch) == 0.0);
}

TEST_CASE("actor update reads only dataset pairs") {
  InACAgent agent(env().n_states(), 4, 0.9, TrainConfig{});
  const OfflineDataset data = make_recipe_dataset(env(), "missing-action", 10000, 0);
  const std::vector<Transition> batch(data.transitions.begin(), data.transitions.begin() + 100);
  ActorQueryLog log;
  agent.actor_update(batch, &log);
  REQUIRE(log.critic.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::pair<StateId, ActionId> pair{batch[i].state, batch[i].action};
    CHECK(log.critic[i] == pair);
    CHECK(log.behavior[i] == pair);
    CHECK(log.actor[i] == pair);
    CHECK(log.baseline[i] == batch[i].state);
  }
}

TEST_CASE("actor loss is invariant to a common shift of critic and baseline") {
  TrainConfig c;
  c.tau = 0.5;
  InACAgent agent(3, 4, 0.9, c);
  Rng rng = make_rng(11);
  for (double& p : agent.critic().parameters()) p = uniform01(rng);
  for (double& p : agent.baseline().parameters()) p = uniform01(rng);
  for (double& p : agent.actor().parameters()) p = uniform01(rng);
  for (double& p : agent.behavior().parameters()) p = uniform01(rng);
  const std::vector<Transition> batch{{0, 1, 0.0, 2}, {2, 3, 1.0, 1}, {1, 0, 0.0, 0}};
  agent.actor().zero_grad();
  const double before = agent.actor_loss(batch);
  const auto g_before = agent.actor().gradient();
  for (double& p : agent.critic().parameters()) p += 3.25;
  for (double& p : agent.baseline().parameters()) p += 3.25;
  agent.actor().zero_grad();
  CHECK(agent.actor_loss(batch) == doctest::Approx(before).epsilon(1e-12));
  for (std::size_t i = 0; i < g_before.size(); ++i) {
    CHECK(agent.actor().gradient()[i] == doctest::Approx(g_before[i]).epsilon(1e-12));
  }
}

TEST_CASE("polyak targets track the online networks") {
  TrainConfig c;
  c.init_value = 0.0;
  InACAgent agent(1, 2, 0.9, c);
  agent.critic().parameters() = {1.0, 1.0};
  agent.update_targets();
  CHECK(agent.critic_target().parameters()[0] == doctest::Approx(0.005));
}

TEST_CASE("training is deterministic per seed") {
  const OfflineDataset data = make_recipe_dataset(env(), "mixed", 2000, 1);
  const TrainConfig c = small_config();
  const TrainResult a = inac_train(data, c, env());
  const TrainResult b = inac_train(data, c, env());
  REQUIRE(a.curve.size() == 3);
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].update == i * 100);
    CHECK(a.curve[i].exact_start_value == b.curve[i].exact_start_value);
    CHECK(a.curve[i].rollout_return_mean == b.curve[i].rollout_return_mean);
  }
  CHECK(a.checkpoint == b.checkpoint);
  CHECK(a.policy == b.policy);

  TrainConfig other = c;
  other.seed = 1;
  CHECK(inac_train(data, other, env()).checkpoint != a.checkpoint);
}

TEST_CASE("zero updates evaluate the initial actor") {
  const OfflineDataset data = make_recipe_dataset(env(), "expert", 1000, 0);
  TrainConfig c = small_config();
  c.updates = 0;
  const TrainResult r = inac_train(data, c, env());
  REQUIRE(r.curve.size() == 1);
  const Policy uniform = uniform_policy(env().n_states(), 4);
  CHECK(r.policy == uniform);
  CHECK(r.curve[0].exact_start_value ==
        doctest::Approx(exact_policy_value(env().mdp(), uniform)(env().start())).epsilon(1e-12));
}

TEST_CASE("mlp actor-critic trains end to end") {
  const OfflineDataset data = make_recipe_dataset(env(), "random", 1000, 0);
  TrainConfig c = small_config();
  c.architecture = "mlp";
  c.hidden = {8};
  c.updates = 20;
  c.eval_interval = 10;
  const TrainResult r = inac_train(data, c, env());
  CHECK(r.curve.size() == 3);
  CHECK(parse_checkpoint(r.checkpoint)->architecture() == "mlp 148 8 4");
}

TEST_CASE("Oracle-Max on expert data follows the expert") {
  const OfflineDataset data = make_recipe_dataset(env(), "expert", 10000, 0);
  TrainConfig c = small_config();
  const TrainResult r = oracle_max_train(data, c, env());
  // Singleton supports pin the greedy action on every visited state.
  const Policy expert = optimal_policy(env());
  const double optimum = exact_policy_value(env().mdp(), expert)(env().start());
  for (const CurvePoint& p : r.curve) {
    CHECK(p.exact_start_value == doctest::Approx(optimum).epsilon(1e-9));
    CHECK(p.rollout_return_mean == 77.0);
  }
  // The in-sample optimum on this support is the same value.
  const EmpiricalBehavior b = estimate_behavior(data, env().n_states(), 4);
  const SolveReport best =
      value_iteration(env().mdp(), InSampleHardMax{b.support(), EmptySupport::BootstrapZero},
                      QTable::constant(env().n_states(), 4, 0.0), 1e-12);
  double start = best.q(env().start(), 0);
  for (ActionId a = 0; a < 4; ++a) {
    if (b.support().allowed(env().start(), a)) start = best.q(env().start(), a);
  }
  CHECK(start == doctest::Approx(optimum).epsilon(1e-9));
}

TEST_CASE("Oracle-Max and FQI coincide under full coverage") {
  const OfflineDataset data = make_recipe_dataset(env(), "random", 10000, 0);
  const TrainConfig c = small_config();
  const TrainResult o = oracle_max_train(data, c, env());
  const TrainResult f = fqi_train(data, c, env());
  CHECK(o.checkpoint == f.checkpoint);
  CHECK(o.policy == f.policy);
}

TEST_CASE("FQI on expert data bootstraps from unseen actions") {
  const OfflineDataset data = make_recipe_dataset(env(), "expert", 10000, 0);
  TrainConfig c = small_config();
  c.updates = 300;
  const TrainResult f = fqi_train(data, c, env());
  const auto q = parse_checkpoint(f.checkpoint);
  // Unseen actions keep their optimistic initial value 10, above any real value.
  const auto row = q->forward_onehot(env().start());
  double top = row[0];
  for (double x : row) top = std::max(top, x);
  CHECK(top >= 9.0);
}

TEST_CASE("curve CSV and policy table files") {
  fixtures::TempDir dir;
  const std::vector<CurvePoint> curve{{0, 0.1, 2.5, 0.25}, {1000, 1.0 / 3.0, 77, 0}};
  write_curve_csv(curve, dir / "c.csv");
  const auto back = read_curve_csv(dir / "c.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].update == 1000);
  CHECK(back[1].exact_start_value == 1.0 / 3.0);
  CHECK(back[0].rollout_return_stderr == 0.25);
  CHECK(fixtures::slurp(dir / "c.csv").rfind(
            "update,exact_start_value,rollout_return_mean,rollout_return_stderr\n", 0) == 0);
  fixtures::spit(dir / "empty.csv",
                 "update,exact_start_value,rollout_return_mean,rollout_return_stderr\n");
  CHECK_THROWS(read_curve_csv(dir / "empty.csv"));

  const Policy pi = optimal_policy(env());
  write_policy_table(pi, dir / "p.txt");
  CHECK(read_policy_table(dir / "p.txt") == pi);
  fixtures::spit(dir / "bad.txt", "policy-table 2 2\n0.5 0.5\n1\n");
  CHECK_THROWS(read_policy_table(dir / "bad.txt"));
}

TEST_CASE("evaluate_policy") {
  const Policy pi = optimal_policy(env());
  const CurvePoint p = evaluate_policy(env(), pi, 5, 0, 7);
  CHECK(p.update == 7);
  CHECK(p.rollout_return_mean == 77.0);
  CHECK(p.rollout_return_stderr == 0.0);
  CHECK(p.exact_start_value == doctest::Approx(0.886294).epsilon(1e-6));
  CHECK_THROWS(evaluate_policy(env(), pi, 0, 0));
}
