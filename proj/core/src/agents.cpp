#include "insample/agents.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "insample/operators.hpp"
#include "insample/text.hpp"

namespace insample {

void TrainConfig::validate(std::size_t dataset_size) const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("config: " + field + " " + why);
  };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate", "must be > 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) fail("tau", "must be > 0");
  if (batch_size == 0) fail("batch_size", "must be > 0");
  if (dataset_size > 0 && batch_size > dataset_size) fail("batch_size", "exceeds the dataset size");
  if (eval_interval == 0) fail("eval_interval", "must be > 0");
  if (eval_episodes == 0) fail("eval_episodes", "must be > 0");
  if (!std::isfinite(init_value)) fail("init_value", "must be finite");
  if (!(exp_clip > 0.0)) fail("exp_clip", "must be > 0");
  if (!(weight_floor >= 0.0) || !(weight_floor <= 1.0)) fail("weight_floor", "must lie in [0, 1]");
  if (!(polyak >= 0.0 && polyak <= 1.0)) fail("polyak", "must lie in [0, 1]");
  if (!(bc_learning_rate > 0.0)) fail("bc_learning_rate", "must be > 0");
  if (architecture != "tabular" && architecture != "mlp") fail("architecture", "must be tabular or mlp");
  if (architecture == "mlp" && hidden.empty()) fail("hidden", "must list at least one width");
}

namespace {

std::vector<double> softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

double log_softmax_at(std::span<const double> logits, std::size_t a) {
  return logits[a] - log_sum_exp(logits);
}

std::unique_ptr<Approximator> make_net(const TrainConfig& config, std::size_t n_in,
                                       std::size_t n_out, double init, std::uint64_t stream) {
  if (config.architecture == "tabular") return std::make_unique<OneHotLinear>(n_in, n_out, init);
  std::vector<std::size_t> sizes{n_in};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(n_out);
  auto net = std::make_unique<Mlp>(sizes, config.seed * 8 + stream);
  // The output bias carries the constant initialization.
  auto& p = net->parameters();
  std::fill(p.end() - static_cast<std::ptrdiff_t>(n_out), p.end(), init);
  return net;
}

double inv(std::size_t n) { return 1.0 / static_cast<double>(n); }

}  // namespace

InACAgent::InACAgent(std::size_t n_states, std::size_t n_actions, double gamma,
                     const TrainConfig& config)
    : n_states_(n_states),
      n_actions_(n_actions),
      gamma_(gamma),
      tau_(Temperature(config.tau).value()),
      clip_(config.exp_clip),
      floor_(config.weight_floor),
      polyak_(config.polyak),
      exact_normalizer_(config.exact_normalizer),
      actor_(make_net(config, n_states, n_actions, 0.0, 0)),
      critic_(make_net(config, n_states, n_actions, config.init_value, 1)),
      baseline_(make_net(config, n_states, 1, config.init_value, 2)),
      behavior_(make_net(config, n_states, n_actions, 0.0, 3)),
      critic_target_(critic_->clone()),
      baseline_target_(baseline_->clone()),
      actor_opt_(std::make_unique<Adam>(config.learning_rate)),
      critic_opt_(std::make_unique<Adam>(config.learning_rate)),
      baseline_opt_(std::make_unique<Adam>(config.learning_rate)) {}

void InACAgent::set_behavior_table(const Policy& table) {
  if (table.n_states() != n_states_ || table.n_actions() != n_actions_) {
    throw std::invalid_argument("behavior table shape mismatch");
  }
  behavior_table_ = table;
}

double InACAgent::behavior_prob(StateId s, ActionId a) {
  if (behavior_table_) return (*behavior_table_)(s, a);
  const auto logits = behavior_->forward_onehot(s);
  return std::exp(log_softmax_at(logits, a));
}

std::vector<double> InACAgent::behavior_probs(StateId s) {
  if (behavior_table_) {
    const auto row = behavior_table_->row(s);
    return {row.begin(), row.end()};
  }
  return softmax(behavior_->forward_onehot(s));
}

std::vector<double> InACAgent::actor_probs(StateId s) { return softmax(actor_->forward_onehot(s)); }

double InACAgent::normalizer(StateId s) {
  if (!exact_normalizer_) return baseline_->forward_onehot(s)[0];
  const std::vector<double> beta = behavior_probs(s);
  const auto q_span = critic_->forward_onehot(s);
  const std::vector<double> q(q_span.begin(), q_span.end());
  std::vector<std::uint8_t> mask(n_actions_);
  for (ActionId a = 0; a < n_actions_; ++a) mask[a] = beta[a] > 0.0 ? 1 : 0;
  return insample_softmax_value(q, mask, Temperature(tau_));
}

double InACAgent::behavior_loss(Batch batch) {
  if (batch.empty()) throw std::invalid_argument("behavior_loss: empty batch");
  const double w = inv(batch.size());
  double loss = 0.0;
  std::vector<double> up(n_actions_);
  for (const Transition& t : batch) {
    const auto logits = behavior_->forward_onehot(t.state);
    const std::vector<double> p = softmax(logits);
    loss -= w * log_softmax_at(logits, t.action);
    for (ActionId a = 0; a < n_actions_; ++a) up[a] = w * (p[a] - (a == t.action ? 1.0 : 0.0));
    behavior_->backward(up);
  }
  return loss;
}

double InACAgent::critic_loss(Batch batch) {
  if (batch.empty()) throw std::invalid_argument("critic_loss: empty batch");
  const double w = inv(batch.size());
  double loss = 0.0;
  std::vector<double> up(n_actions_, 0.0);
  for (const Transition& t : batch) {
    const double target = t.reward + gamma_ * baseline_target_->forward_onehot(t.next_state)[0];
    const double q = critic_->forward_onehot(t.state)[t.action];
    const double err = q - target;
    loss += w * 0.5 * err * err;
    std::fill(up.begin(), up.end(), 0.0);
    up[t.action] = w * err;
    critic_->backward(up);
  }
  return loss;
}

double InACAgent::baseline_loss(Batch batch, std::span<const ActionId> actor_actions) {
  if (batch.empty()) throw std::invalid_argument("baseline_loss: empty batch");
  if (actor_actions.size() != batch.size()) {
    throw std::invalid_argument("baseline_loss: one actor action per batch entry required");
  }
  const double w = inv(batch.size());
  double loss = 0.0;
  std::vector<double> up(1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const StateId s = batch[i].state;
    const ActionId a = actor_actions[i];
    const double q = critic_target_->forward_onehot(s)[a];
    const double log_pi = log_softmax_at(actor_->forward_onehot(s), a);
    const double target = q - tau_ * log_pi;
    const double v = baseline_->forward_onehot(s)[0];
    const double err = v - target;
    loss += w * 0.5 * err * err;
    up[0] = w * err;
    baseline_->backward(up);
  }
  return loss;
}

double InACAgent::actor_loss(Batch batch, ActorQueryLog* log) {
  if (batch.empty()) throw std::invalid_argument("actor_loss: empty batch");
  const double w = inv(batch.size());
  double loss = 0.0;
  std::vector<double> up(n_actions_);
  for (const Transition& t : batch) {
    const StateId s = t.state;
    const ActionId a = t.action;
    const double q = critic_->forward_onehot(s)[a];
    const double v = normalizer(s);
    const double beta = behavior_prob(s, a);
    if (log) {
      log->critic.emplace_back(s, a);
      log->baseline.push_back(s);
      log->behavior.emplace_back(s, a);
      log->actor.emplace_back(s, a);
    }
    const double exponent = (q - v) / tau_ - std::log(beta);
    const double weight = std::max(std::exp(std::min(exponent, clip_)), floor_);
    const auto logits = actor_->forward_onehot(s);
    const std::vector<double> p = softmax(logits);
    loss -= w * weight * log_softmax_at(logits, a);
    for (ActionId b = 0; b < n_actions_; ++b) {
      up[b] = w * weight * (p[b] - (b == a ? 1.0 : 0.0));
    }
    actor_->backward(up);
  }
  return loss;
}

double InACAgent::behavior_cloning_update(Batch batch, Optimizer& opt) {
  behavior_->zero_grad();
  const double loss = behavior_loss(batch);
  opt.step(*behavior_);
  return loss;
}

double InACAgent::critic_update(Batch batch) {
  critic_->zero_grad();
  const double loss = critic_loss(batch);
  critic_opt_->step(*critic_);
  return loss;
}

std::vector<ActionId> InACAgent::sample_actor_actions(Batch batch, Rng& rng) {
  std::vector<ActionId> out;
  out.reserve(batch.size());
  for (const Transition& t : batch) out.push_back(sample_categorical(actor_probs(t.state), rng));
  return out;
}

double InACAgent::baseline_update(Batch batch, Rng& rng) {
  const std::vector<ActionId> actions = sample_actor_actions(batch, rng);
  baseline_->zero_grad();
  const double loss = baseline_loss(batch, actions);
  baseline_opt_->step(*baseline_);
  return loss;
}

double InACAgent::actor_update(Batch batch, ActorQueryLog* log) {
  actor_->zero_grad();
  const double loss = actor_loss(batch, log);
  actor_opt_->step(*actor_);
  return loss;
}

void InACAgent::update_targets() {
  polyak_update(*critic_target_, *critic_, polyak_);
  polyak_update(*baseline_target_, *baseline_, polyak_);
}

Policy InACAgent::actor_policy() {
  std::vector<double> probs;
  probs.reserve(n_states_ * n_actions_);
  for (StateId s = 0; s < n_states_; ++s) {
    const auto p = actor_probs(s);
    probs.insert(probs.end(), p.begin(), p.end());
  }
  return Policy(n_states_, n_actions_, std::move(probs));
}

Policy InACAgent::behavior_policy() {
  std::vector<double> probs;
  probs.reserve(n_states_ * n_actions_);
  for (StateId s = 0; s < n_states_; ++s) {
    const auto p = behavior_probs(s);
    probs.insert(probs.end(), p.begin(), p.end());
  }
  return Policy(n_states_, n_actions_, std::move(probs));
}

QTable InACAgent::critic_table() {
  std::vector<double> q;
  q.reserve(n_states_ * n_actions_);
  for (StateId s = 0; s < n_states_; ++s) {
    const auto row = critic_->forward_onehot(s);
    q.insert(q.end(), row.begin(), row.end());
  }
  return QTable(n_states_, n_actions_, std::move(q));
}

CurvePoint evaluate_policy(const FourRooms& env, const Policy& pi, std::size_t episodes,
                           std::uint64_t seed, std::size_t update) {
  if (episodes == 0) throw std::invalid_argument("evaluate_policy: episodes must be > 0");
  const VTable v = exact_policy_value(env.mdp(), pi);
  EpisodeSimulator sim(env.mdp(), env.start(), env.horizon(), seed);
  std::vector<double> returns;
  for (std::size_t e = 0; e < episodes; ++e) returns.push_back(rollout(sim, pi).ret);
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(episodes);
  double stderr_ = 0.0;
  if (episodes > 1) {
    double ss = 0.0;
    for (double r : returns) ss += (r - mean) * (r - mean);
    stderr_ = std::sqrt(ss / static_cast<double>(episodes - 1) / static_cast<double>(episodes));
  }
  return {update, v(env.start()), mean, stderr_};
}

namespace {

std::uint64_t eval_seed(std::uint64_t seed, std::size_t k) {
  return seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL * (k + 1);
}

// Evaluation schedule: update 0, every `interval`, and the final update.
bool eval_due(std::size_t u, const TrainConfig& c) {
  return u % c.eval_interval == 0 || u == c.updates;
}

void fill_batch(const OfflineDataset& data, std::size_t size, Rng& rng,
                std::vector<Transition>& batch) {
  batch.clear();
  for (std::size_t i = 0; i < size; ++i) {
    batch.push_back(data.transitions[uniform_index(rng, data.size())]);
  }
}

void check_for_env(const OfflineDataset& data, const FourRooms& env) {
  if (data.empty()) throw std::invalid_argument("training needs a non-empty dataset");
  check_dataset(data, env.mdp());
}

}  // namespace

TrainResult inac_train(const OfflineDataset& data, const TrainConfig& config, const FourRooms& env) {
  check_for_env(data, env);
  config.validate(data.size());
  const std::size_t ns = env.n_states();
  const std::size_t na = FourRooms::kNumActions;
  InACAgent agent(ns, na, env.mdp().gamma(), config);

  Rng batch_rng = make_rng(config.seed, 1);
  Rng actor_rng = make_rng(config.seed, 2);
  Rng bc_rng = make_rng(config.seed, 3);
  std::vector<Transition> batch;
  Adam bc_opt(config.bc_learning_rate);

  if (config.behavior_from_counts) {
    agent.set_behavior_table(estimate_behavior(data, ns, na).policy());
  } else {
    for (std::size_t k = 0; k < config.bc_steps; ++k) {
      fill_batch(data, config.batch_size, bc_rng, batch);
      agent.behavior_cloning_update(batch, bc_opt);
    }
  }

  TrainResult result{{}, agent.actor_policy(), {}};
  std::size_t evals = 0;
  for (std::size_t u = 0;; ++u) {
    if (eval_due(u, config)) {
      result.policy = agent.actor_policy();
      result.curve.push_back(
          evaluate_policy(env, result.policy, config.eval_episodes, eval_seed(config.seed, evals++), u));
    }
    if (u == config.updates) break;
    fill_batch(data, config.batch_size, batch_rng, batch);
    if (config.behavior_online && !config.behavior_from_counts) {
      agent.behavior_cloning_update(batch, bc_opt);
    }
    agent.critic_update(batch);
    agent.baseline_update(batch, actor_rng);
    agent.actor_update(batch);
    agent.update_targets();
  }
  result.checkpoint = checkpoint_text(agent.actor());
  return result;
}

namespace {

TrainResult q_learning_train(const OfflineDataset& data, const TrainConfig& config,
                             const FourRooms& env, bool in_sample) {
  check_for_env(data, env);
  config.validate(data.size());
  const std::size_t ns = env.n_states();
  const std::size_t na = FourRooms::kNumActions;
  const double gamma = env.mdp().gamma();
  const EmpiricalBehavior behavior = estimate_behavior(data, ns, na);
  const SupportSet full = SupportSet::full(ns, na);
  const SupportSet& support = in_sample ? behavior.support() : full;

  auto q = make_net(config, ns, na, config.init_value, 1);
  auto q_target = q->clone();
  Adam opt(config.learning_rate);
  Rng batch_rng = make_rng(config.seed, 1);
  std::vector<Transition> batch;
  std::vector<double> up(na);

  auto current_policy = [&] {
    std::vector<double> probs(ns * na, 0.0);
    for (StateId s = 0; s < ns; ++s) {
      const auto row = q->forward_onehot(s);
      const auto mask = support.empty(s) ? full.row(s) : support.row(s);
      probs[s * na + masked_argmax(row, mask)] = 1.0;
    }
    return Policy(ns, na, std::move(probs));
  };

  TrainResult result{{}, current_policy(), {}};
  std::size_t evals = 0;
  const double w = inv(config.batch_size);
  for (std::size_t u = 0;; ++u) {
    if (eval_due(u, config)) {
      result.policy = current_policy();
      result.curve.push_back(
          evaluate_policy(env, result.policy, config.eval_episodes, eval_seed(config.seed, evals++), u));
    }
    if (u == config.updates) break;
    fill_batch(data, config.batch_size, batch_rng, batch);
    q->zero_grad();
    for (const Transition& t : batch) {
      double next = 0.0;
      if (!support.empty(t.next_state)) {
        const auto row = q_target->forward_onehot(t.next_state);
        next = row[masked_argmax(row, support.row(t.next_state))];
      }
      const double target = t.reward + gamma * next;
      const double err = q->forward_onehot(t.state)[t.action] - target;
      std::fill(up.begin(), up.end(), 0.0);
      up[t.action] = w * err;
      q->backward(up);
    }
    opt.step(*q);
    polyak_update(*q_target, *q, config.polyak);
  }
  result.checkpoint = checkpoint_text(*q);
  return result;
}

}  // namespace

TrainResult oracle_max_train(const OfflineDataset& data, const TrainConfig& config,
                             const FourRooms& env) {
  return q_learning_train(data, config, env, true);
}

TrainResult fqi_train(const OfflineDataset& data, const TrainConfig& config, const FourRooms& env) {
  return q_learning_train(data, config, env, false);
}

namespace {

constexpr const char* kCurveHeader =
    "update,exact_start_value,rollout_return_mean,rollout_return_stderr";

}  // namespace

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << kCurveHeader << '\n';
  for (const CurvePoint& p : curve) {
    out << p.update << ',' << format_real(p.exact_start_value) << ','
        << format_real(p.rollout_return_mean) << ',' << format_real(p.rollout_return_stderr)
        << '\n';
  }
}

std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCurveHeader) {
    throw std::runtime_error(path.string() + ":1: expected header '" + kCurveHeader + "'");
  }
  std::vector<CurvePoint> curve;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    try {
      if (f.size() != 4) throw std::invalid_argument("expected 4 fields");
      curve.push_back({parse_unsigned(f[0]), parse_real(f[1]), parse_real(f[2]), parse_real(f[3])});
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (curve.empty()) throw std::runtime_error(path.string() + ": no curve points");
  return curve;
}

void write_policy_table(const Policy& pi, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "policy-table " << pi.n_states() << ' ' << pi.n_actions() << '\n';
  for (StateId s = 0; s < pi.n_states(); ++s) {
    for (ActionId a = 0; a < pi.n_actions(); ++a) {
      out << (a ? " " : "") << format_real(pi(s, a));
    }
    out << '\n';
  }
}

Policy read_policy_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string tag;
  std::size_t ns = 0;
  std::size_t na = 0;
  if (!(in >> tag >> ns >> na) || tag != "policy-table") {
    throw std::runtime_error(path.string() + ": not a policy-table checkpoint");
  }
  std::vector<double> probs(ns * na);
  std::string token;
  for (double& p : probs) {
    if (!(in >> token)) throw std::runtime_error(path.string() + ": truncated policy table");
    p = parse_real(token);
  }
  return Policy(ns, na, std::move(probs));
}

}  // namespace insample
