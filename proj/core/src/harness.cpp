#include "insample/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "insample/text.hpp"

namespace insample {

FourRooms make_env(const std::string& name) {
  if (name != "fourrooms") throw std::invalid_argument("unknown environment '" + name + "'");
  return build_four_rooms();
}

Policy optimal_policy(const FourRooms& env) {
  const auto& mdp = env.mdp();
  const SolveReport vi =
      value_iteration(mdp, HardMax{}, QTable::constant(mdp.n_states(), mdp.n_actions(), 0.0), 1e-12);
  return greedy_policy(vi.q, SupportSet::full(mdp.n_states(), mdp.n_actions()));
}

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names = {"expert", "random", "mixed", "missing-action"};
  return names;
}

OfflineDataset make_recipe_dataset(const FourRooms& env, const std::string& recipe, std::size_t n,
                                   std::uint64_t seed) {
  if (recipe == "expert") {
    OfflineDataset d = collect_episodic(env, optimal_policy(env), n, seed);
    d.recipe = "expert";
    return d;
  }
  if (recipe == "random") {
    OfflineDataset d = collect_random_restart(env, n, seed);
    d.recipe = "random";
    return d;
  }
  if (recipe == "mixed" || recipe == "missing-action") {
    const std::size_t n_expert = n / 100;
    OfflineDataset expert =
        collect_episodic(env, optimal_policy(env), std::max<std::size_t>(n_expert, 1), seed);
    expert.recipe = "expert";
    OfflineDataset random = collect_random_restart(env, n - n_expert, seed);
    random.recipe = "random";
    OfflineDataset mixed = make_mixed(expert, random, n_expert, n - n_expert);
    if (recipe == "mixed") return mixed;
    return make_missing_action(mixed, env.upper_left_room(), FourRooms::kDown);
  }
  throw std::invalid_argument("unknown recipe '" + recipe + "'");
}

void cmd_gen_data(const std::string& env, const std::string& recipe, std::size_t n,
                  std::uint64_t seed, const std::filesystem::path& out_path) {
  const FourRooms rooms = make_env(env);
  write_dataset(make_recipe_dataset(rooms, recipe, n, seed), out_path);
}

const std::vector<std::string>& solve_methods() {
  static const std::vector<std::string> names = {"hard-vi", "soft-vi", "insample-hard-vi",
                                                 "insample-soft-vi", "insample-soft-pi"};
  return names;
}

void write_q_table(const QTable& q, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "q-table " << q.n_states() << ' ' << q.n_actions() << '\n';
  for (StateId s = 0; s < q.n_states(); ++s) {
    for (ActionId a = 0; a < q.n_actions(); ++a) out << (a ? " " : "") << format_real(q(s, a));
    out << '\n';
  }
}

QTable read_q_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string tag;
  std::size_t ns = 0;
  std::size_t na = 0;
  if (!(in >> tag >> ns >> na) || tag != "q-table") {
    throw std::runtime_error(path.string() + ": not a q-table file");
  }
  std::vector<double> values(ns * na);
  std::string token;
  for (double& v : values) {
    if (!(in >> token)) throw std::runtime_error(path.string() + ": truncated q table");
    v = parse_real(token);
  }
  return QTable(ns, na, std::move(values));
}

SolveSummary cmd_solve(const SolveOptions& options) {
  const auto& methods = solve_methods();
  if (std::find(methods.begin(), methods.end(), options.method) == methods.end()) {
    throw std::invalid_argument("unknown solve method '" + options.method + "'");
  }
  std::optional<FourRooms> env;
  std::optional<TabularMDP> file_mdp;
  if (!options.mdp_path.empty()) {
    file_mdp.emplace(read_mdp(options.mdp_path));
  } else {
    env.emplace(make_env(options.env));
  }
  const TabularMDP& mdp = file_mdp ? *file_mdp : env->mdp();
  const QTable zero = QTable::constant(mdp.n_states(), mdp.n_actions(), 0.0);

  const bool in_sample = options.method.rfind("insample-", 0) == 0;
  std::optional<EmpiricalBehavior> behavior;
  if (in_sample) {
    if (options.data.empty()) {
      throw std::invalid_argument("method '" + options.method + "' needs a dataset for the support");
    }
    const OfflineDataset data = read_dataset(options.data);
    check_dataset(data, mdp);
    behavior.emplace(estimate_behavior(data, mdp.n_states(), mdp.n_actions()));
  }

  SolveSummary summary{{zero, 0, {}, false}, std::nullopt, std::nullopt};
  if (options.method == "hard-vi") {
    summary.report = value_iteration(mdp, HardMax{}, zero, options.tol);
  } else if (options.method == "soft-vi") {
    summary.report = value_iteration(mdp, SoftMax{Temperature(options.tau)}, zero, options.tol);
  } else if (options.method == "insample-hard-vi") {
    summary.report = value_iteration(
        mdp, InSampleHardMax{behavior->support(), EmptySupport::BootstrapZero}, zero, options.tol);
  } else if (options.method == "insample-soft-vi") {
    summary.report = value_iteration(
        mdp, InSampleSoftMax{behavior->support(), Temperature(options.tau), EmptySupport::BootstrapZero},
        zero, options.tol);
  } else {
    const LiveMask live = behavior->live_mask();
    PolicyIterationOptions pi_options;
    pi_options.tol = options.tol;
    pi_options.live = &live;
    PolicyIterationResult r = insample_soft_policy_iteration(mdp, behavior->policy(),
                                                             Temperature(options.tau), pi_options);
    summary.report = std::move(r.report);
    summary.policy = std::move(r.policy);
  }
  if (env) {
    const auto row = summary.report.q.row(env->start());
    summary.start_value = *std::max_element(row.begin(), row.end());
  }
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    write_q_table(summary.report.q, options.out_dir / "q.txt");
    write_report_csv(summary.report, options.out_dir / "report.csv");
    if (summary.policy) write_policy_table(*summary.policy, options.out_dir / "policy.txt");
  }
  return summary;
}

TrainResult train_agent(const std::string& agent, const OfflineDataset& data,
                        const TrainConfig& config, const FourRooms& env) {
  if (agent == "inac") return inac_train(data, config, env);
  if (agent == "oracle-max") return oracle_max_train(data, config, env);
  if (agent == "fqi") return fqi_train(data, config, env);
  throw std::invalid_argument("unknown agent '" + agent + "'");
}

OfflineDataset experiment_dataset(const ExperimentConfig& config, const FourRooms& env) {
  if (!config.data.empty()) return read_dataset(config.data);
  return make_recipe_dataset(env, config.recipe, config.n, config.data_seed);
}

SweepResult run_sweep(const ExperimentConfig& config, const OfflineDataset& data,
                      const FourRooms& env) {
  if (config.agent != "inac" && config.agent != "oracle-max" && config.agent != "fqi") {
    throw std::invalid_argument("unknown agent '" + config.agent + "'");
  }
  if (config.seeds.empty()) throw std::invalid_argument("config: seeds must not be empty");
  std::vector<double> rates = config.learning_rates;
  if (rates.empty()) rates.push_back(config.train.learning_rate);
  for (double lr : rates) {
    TrainConfig probe = config.train;
    probe.learning_rate = lr;
    probe.validate(data.size());
  }

  SweepResult result;
  for (double lr : rates) {
    result.entries.push_back({lr, config.seeds, {}, 0.0, 0.0, 0.0});
  }
  const std::size_t n_seeds = config.seeds.size();
  const std::size_t total = rates.size() * n_seeds;
  std::vector<std::optional<TrainResult>> runs(total);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed) {
      const std::size_t k = next++;
      if (k >= total) return;
      TrainConfig c = config.train;
      c.learning_rate = rates[k / n_seeds];
      c.seed = config.seeds[k % n_seeds];
      try {
        runs[k] = train_agent(config.agent, data, c, env);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, total);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  for (std::size_t i = 0; i < rates.size(); ++i) {
    SweepEntry& e = result.entries[i];
    std::vector<double> returns;
    for (std::size_t j = 0; j < n_seeds; ++j) {
      e.runs.push_back(std::move(*runs[i * n_seeds + j]));
      const CurvePoint& last = e.runs.back().curve.back();
      e.mean_final_value += last.exact_start_value;
      returns.push_back(last.rollout_return_mean);
    }
    const double n = static_cast<double>(n_seeds);
    e.mean_final_value /= n;
    for (double r : returns) e.mean_final_return += r;
    e.mean_final_return /= n;
    if (n_seeds > 1) {
      double ss = 0.0;
      for (double r : returns) ss += (r - e.mean_final_return) * (r - e.mean_final_return);
      e.stderr_final_return = std::sqrt(ss / (n - 1.0) / n);
    }
  }
  for (std::size_t i = 1; i < result.entries.size(); ++i) {
    const SweepEntry& cand = result.entries[i];
    const SweepEntry& best = result.entries[result.best];
    const double diff = cand.mean_final_value - best.mean_final_value;
    const bool tie = std::abs(diff) <= 1e-12;
    if (diff > 1e-12 || (tie && cand.learning_rate < best.learning_rate)) result.best = i;
  }
  return result;
}

namespace {

std::string run_stem(double lr, std::uint64_t seed) {
  return "lr" + format_real(lr) + "_seed" + std::to_string(seed);
}

}  // namespace

SweepResult cmd_train(const ExperimentConfig& config) {
  const FourRooms env = make_env(config.env);
  const OfflineDataset data = experiment_dataset(config, env);
  SweepResult sweep = run_sweep(config, data, env);

  const std::filesystem::path out(config.out);
  std::filesystem::create_directories(out);
  {
    std::ofstream f(out / "config.txt", std::ios::binary);
    f << to_text(config);
  }
  for (const SweepEntry& e : sweep.entries) {
    for (std::size_t j = 0; j < e.runs.size(); ++j) {
      const std::string stem = config.agent + "_" + run_stem(e.learning_rate, e.seeds[j]);
      write_curve_csv(e.runs[j].curve, out / ("curve_" + stem + ".csv"));
      write_policy_table(e.runs[j].policy, out / ("policy_" + stem + ".txt"));
      std::ofstream ckpt(out / ("checkpoint_" + stem + ".txt"), std::ios::binary);
      ckpt << e.runs[j].checkpoint;
    }
  }
  std::ofstream summary(out / "summary.csv", std::ios::binary);
  summary << "learning_rate,mean_final_exact_start_value,mean_final_return,stderr_final_return,best\n";
  for (std::size_t i = 0; i < sweep.entries.size(); ++i) {
    const SweepEntry& e = sweep.entries[i];
    summary << format_real(e.learning_rate) << ',' << format_real(e.mean_final_value) << ','
            << format_real(e.mean_final_return) << ',' << format_real(e.stderr_final_return) << ','
            << (i == sweep.best ? 1 : 0) << '\n';
  }
  return sweep;
}

CurvePoint cmd_eval(const std::filesystem::path& policy_path, const std::string& env_name,
                    std::size_t episodes, std::uint64_t seed) {
  const FourRooms env = make_env(env_name);
  std::ifstream in(policy_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + policy_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  const std::size_t ns = env.n_states();
  const std::size_t na = FourRooms::kNumActions;
  std::optional<Policy> pi;
  if (text.rfind("policy-table", 0) == 0) {
    pi.emplace(read_policy_table(policy_path));
  } else if (text.rfind("architecture", 0) == 0) {
    auto actor = parse_checkpoint(text);
    if (actor->input_size() != ns || actor->output_size() != na) {
      throw std::invalid_argument("checkpoint architecture '" + actor->architecture() +
                                  "' does not fit environment " + env_name);
    }
    std::vector<double> probs;
    for (StateId s = 0; s < ns; ++s) {
      const auto logits = actor->forward_onehot(s);
      const double top = *std::max_element(logits.begin(), logits.end());
      double sum = 0.0;
      std::vector<double> row(na);
      for (ActionId a = 0; a < na; ++a) sum += row[a] = std::exp(logits[a] - top);
      for (double p : row) probs.push_back(p / sum);
    }
    pi.emplace(ns, na, std::move(probs));
  } else {
    throw std::invalid_argument(policy_path.string() + ": unrecognized checkpoint format");
  }
  if (pi->n_states() != ns || pi->n_actions() != na) {
    throw std::invalid_argument("policy shape " + std::to_string(pi->n_states()) + "x" +
                                std::to_string(pi->n_actions()) + " does not fit environment " +
                                env_name);
  }
  return evaluate_policy(env, *pi, episodes, seed);
}

}  // namespace insample
