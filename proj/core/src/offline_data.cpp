#include "insample/offline_data.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <string>

#include "insample/random.hpp"
#include "insample/text.hpp"

namespace insample {

OfflineDataset collect_episodic(const TabularMDP& mdp, StateId start, std::size_t horizon,
                                const Policy& behavior, std::size_t n_transitions,
                                std::uint64_t seed) {
  if (n_transitions == 0) throw std::invalid_argument("collect_episodic: n_transitions must be > 0");
  if (behavior.n_states() != mdp.n_states() || behavior.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("collect_episodic: behavior shape mismatch");
  }
  OfflineDataset data;
  data.recipe = "episodic";
  data.seed = seed;
  data.transitions.reserve(n_transitions);
  EpisodeSimulator sim(mdp, start, horizon, seed);
  while (data.size() < n_transitions) {
    sim.reset();
    while (data.size() < n_transitions) {
      const StateId s = sim.state();
      const ActionId a = sample_categorical(behavior.row(s), sim.rng());
      const StepResult r = sim.step(a);
      data.transitions.push_back({s, a, r.reward, r.next_state});
      if (r.truncated) {
        data.truncations.push_back(data.size() - 1);
        break;
      }
    }
  }
  data.segments.push_back({data.recipe, seed, 0, data.size()});
  return data;
}

OfflineDataset collect_episodic(const FourRooms& env, const Policy& behavior,
                                std::size_t n_transitions, std::uint64_t seed) {
  OfflineDataset data =
      collect_episodic(env.mdp(), env.start(), env.horizon(), behavior, n_transitions, seed);
  data.env = "fourrooms";
  return data;
}

OfflineDataset collect_random_restart(const TabularMDP& mdp, std::size_t n_transitions,
                                      std::uint64_t seed) {
  if (n_transitions == 0) {
    throw std::invalid_argument("collect_random_restart: n_transitions must be > 0");
  }
  OfflineDataset data;
  data.recipe = "random-restart";
  data.seed = seed;
  data.transitions.reserve(n_transitions);
  Rng rng = make_rng(seed, 0x727272);
  for (std::size_t i = 0; i < n_transitions; ++i) {
    const StateId s = uniform_index(rng, mdp.n_states());
    const ActionId a = uniform_index(rng, mdp.n_actions());
    const StateId next = sample_next_state(mdp, s, a, rng);
    data.transitions.push_back({s, a, mdp.reward(s, a), next});
  }
  data.segments.push_back({data.recipe, seed, 0, data.size()});
  return data;
}

OfflineDataset collect_random_restart(const FourRooms& env, std::size_t n_transitions,
                                      std::uint64_t seed) {
  OfflineDataset data = collect_random_restart(env.mdp(), n_transitions, seed);
  data.env = "fourrooms";
  return data;
}

OfflineDataset make_mixed(const OfflineDataset& expert, const OfflineDataset& random,
                          std::size_t n_expert, std::size_t n_random) {
  if (expert.size() < n_expert) {
    throw std::invalid_argument("make_mixed: expert dataset has " + std::to_string(expert.size()) +
                                " transitions, need " + std::to_string(n_expert));
  }
  if (random.size() < n_random) {
    throw std::invalid_argument("make_mixed: random dataset has " + std::to_string(random.size()) +
                                " transitions, need " + std::to_string(n_random));
  }
  OfflineDataset out;
  out.env = expert.env;
  out.recipe = "mixed";
  out.seed = expert.seed;
  out.transitions.assign(expert.transitions.begin(),
                         expert.transitions.begin() + static_cast<std::ptrdiff_t>(n_expert));
  out.transitions.insert(out.transitions.end(), random.transitions.begin(),
                         random.transitions.begin() + static_cast<std::ptrdiff_t>(n_random));
  for (std::size_t t : expert.truncations) {
    if (t < n_expert) out.truncations.push_back(t);
  }
  for (std::size_t t : random.truncations) {
    if (t < n_random) out.truncations.push_back(n_expert + t);
  }
  out.segments.push_back({expert.recipe, expert.seed, 0, n_expert});
  out.segments.push_back({random.recipe, random.seed, n_expert, n_expert + n_random});
  return out;
}

OfflineDataset make_missing_action(const OfflineDataset& data, const std::vector<StateId>& region,
                                   ActionId removed_action) {
  std::vector<StateId> sorted(region);
  std::sort(sorted.begin(), sorted.end());
  OfflineDataset out;
  out.env = data.env;
  out.recipe = "missing-action";
  out.seed = data.seed;
  // Segment boundaries and truncation marks are remapped onto the kept rows.
  std::vector<std::size_t> new_index(data.size() + 1, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    new_index[i] = out.size();
    const Transition& t = data.transitions[i];
    const bool drop = t.action == removed_action &&
                      std::binary_search(sorted.begin(), sorted.end(), t.state);
    if (!drop) out.transitions.push_back(t);
  }
  new_index[data.size()] = out.size();
  for (const Provenance& p : data.segments) {
    out.segments.push_back({p.recipe, p.seed, new_index[p.begin], new_index[p.end]});
  }
  for (std::size_t t : data.truncations) {
    if (new_index[t + 1] > new_index[t]) out.truncations.push_back(new_index[t]);
  }
  return out;
}

namespace {

SupportSet positive_mask(std::size_t n_states, std::size_t n_actions,
                         const std::vector<std::size_t>& counts) {
  std::vector<std::uint8_t> mask(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) mask[i] = counts[i] > 0 ? 1 : 0;
  return SupportSet(n_states, n_actions, std::move(mask));
}

}  // namespace

EmpiricalBehavior::EmpiricalBehavior(std::size_t n_states, std::size_t n_actions,
                                     std::vector<std::size_t> counts)
    : n_states_(n_states),
      n_actions_(n_actions),
      counts_(std::move(counts)),
      totals_(n_states, 0),
      support_(positive_mask(n_states, n_actions, counts_)) {
  if (counts_.size() != n_states * n_actions) {
    throw std::invalid_argument("EmpiricalBehavior: counts shape mismatch");
  }
  for (StateId s = 0; s < n_states; ++s) {
    for (ActionId a = 0; a < n_actions; ++a) totals_[s] += count(s, a);
  }
}

double EmpiricalBehavior::probability(StateId s, ActionId a) const {
  if (totals_[s] == 0) return 0.0;
  return static_cast<double>(count(s, a)) / static_cast<double>(totals_[s]);
}

LiveMask EmpiricalBehavior::live_mask() const {
  LiveMask live(n_states_);
  for (StateId s = 0; s < n_states_; ++s) live[s] = visited(s) ? 1 : 0;
  return live;
}

std::vector<StateId> EmpiricalBehavior::unvisited_states() const {
  std::vector<StateId> out;
  for (StateId s = 0; s < n_states_; ++s) {
    if (!visited(s)) out.push_back(s);
  }
  return out;
}

Policy EmpiricalBehavior::policy() const {
  std::vector<double> probs(n_states_ * n_actions_);
  for (StateId s = 0; s < n_states_; ++s) {
    for (ActionId a = 0; a < n_actions_; ++a) {
      probs[s * n_actions_ + a] =
          visited(s) ? probability(s, a) : 1.0 / static_cast<double>(n_actions_);
    }
  }
  return Policy(n_states_, n_actions_, std::move(probs));
}

EmpiricalBehavior estimate_behavior(const OfflineDataset& data, std::size_t n_states,
                                    std::size_t n_actions) {
  if (data.empty()) throw std::invalid_argument("estimate_behavior: no transitions");
  std::vector<std::size_t> counts(n_states * n_actions, 0);
  for (const Transition& t : data.transitions) {
    if (t.state >= n_states || t.action >= n_actions) {
      throw std::out_of_range("estimate_behavior: transition outside the state/action range");
    }
    ++counts[t.state * n_actions + t.action];
  }
  return EmpiricalBehavior(n_states, n_actions, std::move(counts));
}

namespace {

constexpr const char* kDatasetHeader = "state,action,reward,next_state";

}  // namespace

void write_dataset(const OfflineDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << kDatasetHeader << '\n';
  for (const Transition& t : data.transitions) {
    out << t.state << ',' << t.action << ',' << format_fixed(t.reward) << ',' << t.next_state
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

OfflineDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  OfflineDataset data;
  data.recipe = "file";
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (!header_seen) {
      if (row.empty() && in.peek() == std::ifstream::traits_type::eof()) break;
      if (row != kDatasetHeader) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": expected header '" + kDatasetHeader + "'");
      }
      header_seen = true;
      continue;
    }
    if (row.empty()) continue;
    const auto fields = split(row, ',');
    try {
      if (fields.size() != 4) throw std::invalid_argument("expected 4 fields");
      data.transitions.push_back({parse_unsigned(fields[0]), parse_unsigned(fields[1]),
                                  parse_real(fields[2]), parse_unsigned(fields[3])});
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (data.empty()) throw std::runtime_error(path.string() + ": no transitions");
  data.segments.push_back({data.recipe, 0, 0, data.size()});
  return data;
}

void check_dataset(const OfflineDataset& data, const TabularMDP& mdp) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Transition& t = data.transitions[i];
    if (t.state >= mdp.n_states() || t.next_state >= mdp.n_states() ||
        t.action >= mdp.n_actions()) {
      throw std::out_of_range("transition " + std::to_string(i) + " is outside the MDP");
    }
  }
}

}  // namespace insample
