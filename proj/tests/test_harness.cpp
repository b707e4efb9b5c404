#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "insample/config.hpp"
#include "insample/harness.hpp"
#include "insample/verify.hpp"

using namespace insample;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("config text round-trips") {
  ExperimentConfig c;
  c.agent = "fqi";
  c.train.learning_rate = 1.0 / 3.0;
  c.train.hidden = {7, 5};
  c.train.behavior_from_counts = true;
  c.learning_rates = {0.5, 0.25};
  c.seeds = {3, 1, 4};
  c.data = "some/path.csv";
  CHECK(parse_config(to_text(c)) == c);
  CHECK(parse_config(to_text(ExperimentConfig{})) == ExperimentConfig{});
  CHECK(config_keys().size() == count(to_text(c), " = "));
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config("# comment\n\nagent = oracle-max  # trailing\nseeds = 0, 1,2\n");
  CHECK(c.agent == "oracle-max");
  CHECK(c.seeds == std::vector<std::uint64_t>{0, 1, 2});
  CHECK_THROWS_WITH(parse_config("learning_rat = 0.1\n"), doctest::Contains("learning_rat"));
  CHECK_THROWS_WITH(parse_config("updates = many\n"), doctest::Contains("updates"));
  CHECK_THROWS_WITH(parse_config("agent inac\n"), doctest::Contains("line 1"));
  CHECK_THROWS(parse_config("behavior_online = maybe\n"));
  ExperimentConfig d;
  apply_setting(d, "weight_floor", "0");
  CHECK(d.train.weight_floor == 0.0);
}

TEST_CASE("gen-data writes a readable dataset") {
  fixtures::TempDir dir;
  cmd_gen_data("fourrooms", "random", 300, 5, dir / "r.csv");
  const OfflineDataset data = read_dataset(dir / "r.csv");
  CHECK(data.size() == 300);
  CHECK(data.transitions == make_recipe_dataset(make_env("fourrooms"), "random", 300, 5).transitions);
  CHECK_THROWS(cmd_gen_data("gridworld", "random", 10, 0, dir / "x.csv"));
  CHECK_THROWS(cmd_gen_data("fourrooms", "nope", 10, 0, dir / "x.csv"));
}

TEST_CASE("solve methods") {
  fixtures::TempDir dir;
  SolveOptions hard;
  hard.method = "hard-vi";
  hard.out_dir = dir / "hard";
  const SolveSummary h = cmd_solve(hard);
  CHECK(h.report.converged);
  REQUIRE(h.start_value.has_value());
  CHECK(*h.start_value == doctest::Approx(0.886294).epsilon(1e-6));
  CHECK(*h.start_value <= 10.0);
  CHECK(read_q_table(dir / "hard" / "q.txt").values() == h.report.q.values());
  CHECK(std::filesystem::exists(dir / "hard" / "report.csv"));

  SolveOptions soft = hard;
  soft.method = "soft-vi";
  soft.tau = 1e-4;
  soft.out_dir.clear();
  const SolveSummary s = cmd_solve(soft);
  CHECK(*s.start_value >= *h.start_value);
  CHECK(*s.start_value - *h.start_value <= 1e-4 * std::log(4.0) / 0.1 + 1e-9);

  cmd_gen_data("fourrooms", "random", 10000, 0, dir / "random.csv");
  SolveOptions vi;
  vi.method = "insample-soft-vi";
  vi.data = (dir / "random.csv").string();
  SolveOptions pi = vi;
  pi.method = "insample-soft-pi";
  pi.out_dir = dir / "pi";
  const SolveSummary a = cmd_solve(vi);
  const SolveSummary b = cmd_solve(pi);
  CHECK(std::abs(*a.start_value - *b.start_value) <= 1e-6);
  REQUIRE(b.policy.has_value());
  CHECK(read_policy_table(dir / "pi" / "policy.txt") == *b.policy);

  SolveOptions missing;
  missing.method = "insample-hard-vi";
  CHECK_THROWS_WITH(cmd_solve(missing), doctest::Contains("dataset"));
  SolveOptions unknown;
  unknown.method = "q-learning";
  CHECK_THROWS_WITH(cmd_solve(unknown), doctest::Contains("q-learning"));
}

TEST_CASE("eval of stored policies") {
  fixtures::TempDir dir;
  const FourRooms env = make_env("fourrooms");
  const Policy best = optimal_policy(env);
  write_policy_table(best, dir / "best.txt");
  const CurvePoint p = cmd_eval(dir / "best.txt", "fourrooms", 3, 0);
  CHECK(p.exact_start_value == doctest::Approx(0.886294).epsilon(1e-6));
  CHECK(p.rollout_return_mean == 77.0);

  write_policy_table(uniform_policy(env.n_states(), 4), dir / "uniform.txt");
  CHECK(cmd_eval(dir / "uniform.txt", "fourrooms", 3, 0).exact_start_value < p.exact_start_value);

  OneHotLinear actor(env.n_states(), 4, 0.0);
  write_checkpoint(actor, dir / "actor.txt");
  CHECK(cmd_eval(dir / "actor.txt", "fourrooms", 3, 0).exact_start_value ==
        doctest::Approx(exact_policy_value(env.mdp(), uniform_policy(env.n_states(), 4))(env.start())));

  write_policy_table(uniform_policy(5, 4), dir / "small.txt");
  CHECK_THROWS_WITH(cmd_eval(dir / "small.txt", "fourrooms", 3, 0), doctest::Contains("shape"));
  write_checkpoint(OneHotLinear(3, 4, 0.0), dir / "small_actor.txt");
  CHECK_THROWS(cmd_eval(dir / "small_actor.txt", "fourrooms", 3, 0));
  fixtures::spit(dir / "junk.txt", "hello\n");
  CHECK_THROWS(cmd_eval(dir / "junk.txt", "fourrooms", 3, 0));
}

TEST_CASE("plot") {
  fixtures::TempDir dir;
  write_curve_csv({{0, 0.1, 0, 0}, {10, 0.5, 40, 2}}, dir / "one.csv");
  write_curve_csv({{0, 0.1, 5, 0}, {10, 0.9, 77, 0}}, dir / "two.csv");
  cmd_plot({dir / "one.csv"}, dir / "a.svg");
  const std::string single = fixtures::slurp(dir / "a.svg");
  CHECK(single.rfind("<svg", 0) == 0);
  CHECK(count(single, "<polyline") == 1);
  cmd_plot({dir / "one.csv", dir / "two.csv"}, dir / "b.svg");
  const std::string both = fixtures::slurp(dir / "b.svg");
  CHECK(count(both, "<polyline") == 2);
  CHECK(both.find(">one<") < both.find(">two<"));
  CHECK_THROWS(cmd_plot({}, dir / "c.svg"));
  fixtures::spit(dir / "empty.csv", "");
  CHECK_THROWS(cmd_plot({dir / "empty.csv"}, dir / "c.svg"));
}

TEST_CASE("sweep picks the lowest learning rate among ties") {
  const FourRooms env = make_env("fourrooms");
  ExperimentConfig c;
  c.agent = "oracle-max";
  c.train.updates = 10;
  c.train.eval_interval = 10;
  c.train.eval_episodes = 1;
  c.learning_rates = {0.1, 0.001, 0.01};
  c.seeds = {0, 1};
  c.jobs = 2;
  // Singleton supports fix the policy, so every rate ends at the same value.
  const OfflineDataset data = make_recipe_dataset(env, "expert", 10000, 0);
  const SweepResult r = run_sweep(c, data, env);
  REQUIRE(r.entries.size() == 3);
  CHECK(r.best == 1);
  CHECK(r.entries[0].runs.size() == 2);
  CHECK(r.entries[0].mean_final_return == 77.0);
  CHECK(r.entries[0].stderr_final_return == 0.0);
}

TEST_CASE("train writes its outputs") {
  fixtures::TempDir dir;
  ExperimentConfig c;
  c.agent = "inac";
  c.recipe = "mixed";
  c.n = 1000;
  c.train.updates = 20;
  c.train.eval_interval = 10;
  c.train.bc_steps = 10;
  c.train.batch_size = 10;
  c.learning_rates = {0.01};
  c.out = (dir / "run").string();
  cmd_train(c);
  CHECK(load_config(dir / "run" / "config.txt") == c);
  CHECK(read_curve_csv(dir / "run" / "curve_inac_lr0.01_seed0.csv").size() == 3);
  CHECK(std::filesystem::exists(dir / "run" / "policy_inac_lr0.01_seed0.txt"));
  CHECK(std::filesystem::exists(dir / "run" / "checkpoint_inac_lr0.01_seed0.txt"));
  CHECK(fixtures::slurp(dir / "run" / "summary.csv").find("0.01,") != std::string::npos);
  c.agent = "sarsa";
  CHECK_THROWS(cmd_train(c));
}

TEST_CASE("verify entry points") {
  CHECK(verify_suites().size() >= 7);
  CHECK_THROWS_AS(run_verify("nonsense", 0), std::invalid_argument);
  const VerifyReport r = run_verify("gradients", 3);
  CHECK(r.passed());
  CHECK(r.to_text().find("gradients") != std::string::npos);
}
