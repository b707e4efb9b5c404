#include "insample/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "insample/text.hpp"

namespace insample {

namespace {

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(v) + "'");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view v, Parse parse) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split(v, ',')) out.push_back(static_cast<T>(parse(trim(item))));
  return out;
}

template <typename T, typename Format>
std::string list_text(const std::vector<T>& xs, Format format) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + format(xs[i]);
  return out;
}

std::string uint_text(unsigned long long x) { return std::to_string(x); }

struct Field {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"env", {[](C& c, std::string_view v) { c.env = v; }, [](const C& c) { return c.env; }}},
      {"agent", {[](C& c, std::string_view v) { c.agent = v; }, [](const C& c) { return c.agent; }}},
      {"recipe",
       {[](C& c, std::string_view v) { c.recipe = v; }, [](const C& c) { return c.recipe; }}},
      {"data", {[](C& c, std::string_view v) { c.data = v; }, [](const C& c) { return c.data; }}},
      {"n", {[](C& c, std::string_view v) { c.n = parse_unsigned(v); },
             [](const C& c) { return uint_text(c.n); }}},
      {"data_seed", {[](C& c, std::string_view v) { c.data_seed = parse_unsigned(v); },
                     [](const C& c) { return uint_text(c.data_seed); }}},
      {"out", {[](C& c, std::string_view v) { c.out = v; }, [](const C& c) { return c.out; }}},
      {"learning_rate", {[](C& c, std::string_view v) { c.train.learning_rate = parse_real(v); },
                         [](const C& c) { return format_real(c.train.learning_rate); }}},
      {"tau", {[](C& c, std::string_view v) { c.train.tau = parse_real(v); },
               [](const C& c) { return format_real(c.train.tau); }}},
      {"batch_size", {[](C& c, std::string_view v) { c.train.batch_size = parse_unsigned(v); },
                      [](const C& c) { return uint_text(c.train.batch_size); }}},
      {"updates", {[](C& c, std::string_view v) { c.train.updates = parse_unsigned(v); },
                   [](const C& c) { return uint_text(c.train.updates); }}},
      {"eval_interval", {[](C& c, std::string_view v) { c.train.eval_interval = parse_unsigned(v); },
                         [](const C& c) { return uint_text(c.train.eval_interval); }}},
      {"eval_episodes", {[](C& c, std::string_view v) { c.train.eval_episodes = parse_unsigned(v); },
                         [](const C& c) { return uint_text(c.train.eval_episodes); }}},
      {"init_value", {[](C& c, std::string_view v) { c.train.init_value = parse_real(v); },
                      [](const C& c) { return format_real(c.train.init_value); }}},
      {"exp_clip", {[](C& c, std::string_view v) { c.train.exp_clip = parse_real(v); },
                    [](const C& c) { return format_real(c.train.exp_clip); }}},
      {"weight_floor", {[](C& c, std::string_view v) { c.train.weight_floor = parse_real(v); },
                        [](const C& c) { return format_real(c.train.weight_floor); }}},
      {"polyak", {[](C& c, std::string_view v) { c.train.polyak = parse_real(v); },
                  [](const C& c) { return format_real(c.train.polyak); }}},
      {"bc_steps", {[](C& c, std::string_view v) { c.train.bc_steps = parse_unsigned(v); },
                    [](const C& c) { return uint_text(c.train.bc_steps); }}},
      {"bc_learning_rate",
       {[](C& c, std::string_view v) { c.train.bc_learning_rate = parse_real(v); },
        [](const C& c) { return format_real(c.train.bc_learning_rate); }}},
      {"behavior_from_counts",
       {[](C& c, std::string_view v) { c.train.behavior_from_counts = parse_bool(v); },
        [](const C& c) { return bool_text(c.train.behavior_from_counts); }}},
      {"behavior_online",
       {[](C& c, std::string_view v) { c.train.behavior_online = parse_bool(v); },
        [](const C& c) { return bool_text(c.train.behavior_online); }}},
      {"exact_normalizer",
       {[](C& c, std::string_view v) { c.train.exact_normalizer = parse_bool(v); },
        [](const C& c) { return bool_text(c.train.exact_normalizer); }}},
      {"architecture",
       {[](C& c, std::string_view v) { c.train.architecture = v; },
        [](const C& c) { return c.train.architecture; }}},
      {"hidden",
       {[](C& c, std::string_view v) { c.train.hidden = parse_list<std::size_t>(v, parse_unsigned); },
        [](const C& c) { return list_text(c.train.hidden, uint_text); }}},
      {"learning_rates",
       {[](C& c, std::string_view v) { c.learning_rates = parse_list<double>(v, parse_real); },
        [](const C& c) { return list_text(c.learning_rates, format_real); }}},
      {"seeds",
       {[](C& c, std::string_view v) { c.seeds = parse_list<std::uint64_t>(v, parse_unsigned); },
        [](const C& c) { return list_text(c.seeds, uint_text); }}},
      {"jobs", {[](C& c, std::string_view v) { c.jobs = parse_unsigned(v); },
                [](const C& c) { return uint_text(c.jobs); }}},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, field] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  for (const auto& [name, field] : fields()) {
    if (name != key) continue;
    try {
      field.set(config, trim(value));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config key '" + name + "': " + e.what());
    }
    return;
  }
  throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(config) + "\n";
  return out;
}

}  // namespace insample
