#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "insample/config.hpp"
#include "insample/harness.hpp"
#include "insample/text.hpp"
#include "insample/verify.hpp"

namespace {

using namespace insample;

std::string flag_name(const std::string& key) {
  std::string flag = key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return "--" + flag;
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-sample softmax solvers, offline actor-critic training and verification"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate an offline dataset");
  std::string gen_env = "fourrooms";
  std::string recipe = "expert";
  std::size_t gen_n = 10000;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--env", gen_env, "Environment")->capture_default_str();
  gen->add_option("--recipe", recipe, "expert | random | mixed | missing-action")
      ->capture_default_str();
  gen->add_option("--n", gen_n, "Number of transitions")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Solve an MDP exactly");
  SolveOptions solve_opts;
  std::string solve_out;
  solve->add_option("--env", solve_opts.env, "Environment")->capture_default_str();
  solve->add_option("--mdp", solve_opts.mdp_path, "MDP file (overrides --env)");
  solve->add_option("--method", solve_opts.method,
                    "hard-vi | soft-vi | insample-hard-vi | insample-soft-vi | insample-soft-pi")
      ->required();
  solve->add_option("--tau", solve_opts.tau, "Temperature")->capture_default_str();
  solve->add_option("--data", solve_opts.data, "Dataset giving the support of in-sample methods");
  solve->add_option("--tol", solve_opts.tol, "Sup-norm tolerance")->capture_default_str();
  solve->add_option("--out", solve_out, "Output directory");

  // train
  auto* train = app.add_subcommand("train", "Train an agent over a learning-rate sweep");
  std::string config_path;
  train->add_option("--config", config_path, "key = value config file; flags override it");
  std::map<std::string, std::string> overrides;
  const ExperimentConfig defaults;
  const std::string default_text = to_text(defaults);
  for (const std::string& key : config_keys()) {
    const auto line_start = default_text.find(key + " = ");
    const auto value_start = line_start + key.size() + 3;
    const std::string value =
        default_text.substr(value_start, default_text.find('\n', value_start) - value_start);
    train->add_option_function<std::string>(
        flag_name(key), [&overrides, key](const std::string& v) { overrides[key] = v; },
        "default: " + value);
  }

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a stored policy");
  std::string policy_path;
  std::string eval_env = "fourrooms";
  std::size_t episodes = 5;
  std::uint64_t eval_seed = 0;
  std::string eval_out;
  eval->add_option("--policy", policy_path, "Policy table or actor checkpoint")->required();
  eval->add_option("--env", eval_env, "Environment")->capture_default_str();
  eval->add_option("--episodes", episodes, "Rollout episodes")->capture_default_str();
  eval->add_option("--seed", eval_seed, "Rollout seed")->capture_default_str();
  eval->add_option("--out", eval_out, "Write the metrics as a one-row curve CSV");

  // verify
  auto* verify = app.add_subcommand("verify", "Run the randomized property suites");
  std::string suite = "all";
  std::uint64_t verify_seed = 0;
  std::string verify_out;
  std::string suite_help = "all";
  for (const auto& name : verify_suites()) suite_help += " | " + name;
  verify->add_option("--suite", suite, suite_help)->capture_default_str();
  verify->add_option("--seed", verify_seed, "Base seed")->capture_default_str();
  verify->add_option("--out", verify_out, "Write the report as CSV");

  // plot
  auto* plot = app.add_subcommand("plot", "Plot learning curves as SVG");
  std::vector<std::string> curves;
  std::string svg_out;
  plot->add_option("curves", curves, "Curve CSV files")->required();
  plot->add_option("--out", svg_out, "Output SVG")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      cmd_gen_data(gen_env, recipe, gen_n, gen_seed, gen_out);
      std::cout << "wrote " << gen_out << '\n';
    } else if (solve->parsed()) {
      solve_opts.out_dir = solve_out;
      const SolveSummary s = cmd_solve(solve_opts);
      std::cout << "method " << solve_opts.method << ": " << s.report.iterations << " iterations, "
                << (s.report.converged ? "converged" : "not converged");
      if (!s.report.residuals.empty()) {
        std::cout << ", final residual " << format_real(s.report.residuals.back());
      }
      std::cout << '\n';
      if (s.start_value) std::cout << "start value " << fixed(*s.start_value, 6) << '\n';
      if (!s.report.converged) return 2;
    } else if (train->parsed()) {
      ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
      for (const auto& [key, value] : overrides) apply_setting(config, key, value);
      const SweepResult sweep = cmd_train(config);
      std::cout << "learning_rate  final_value  final_return\n";
      for (std::size_t i = 0; i < sweep.entries.size(); ++i) {
        const SweepEntry& e = sweep.entries[i];
        std::cout << format_real(e.learning_rate) << "  " << fixed(e.mean_final_value, 6)
                  << "  " << fixed(e.mean_final_return, 2) << " +- "
                  << fixed(e.stderr_final_return, 2) << (i == sweep.best ? "  best" : "")
                  << '\n';
      }
      std::cout << "outputs in " << config.out << '\n';
    } else if (eval->parsed()) {
      const CurvePoint p = cmd_eval(policy_path, eval_env, episodes, eval_seed);
      std::cout << "exact start value " << fixed(p.exact_start_value, 6) << "\nreturn "
                << fixed(p.rollout_return_mean, 3) << " +- "
                << fixed(p.rollout_return_stderr, 3) << " over " << episodes
                << " episodes\n";
      if (!eval_out.empty()) write_curve_csv({p}, eval_out);
    } else if (verify->parsed()) {
      const VerifyReport report = run_verify(suite, verify_seed);
      std::cout << report.to_text();
      if (!verify_out.empty()) report.write_csv(verify_out);
      return report.passed() ? 0 : 1;
    } else if (plot->parsed()) {
      std::vector<std::filesystem::path> paths(curves.begin(), curves.end());
      cmd_plot(paths, svg_out);
      std::cout << "wrote " << svg_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
