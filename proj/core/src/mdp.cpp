#include "insample/mdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "insample/text.hpp"

namespace insample {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr std::size_t kDirectSolveLimit = 10000;

std::string coord(std::size_t s, std::size_t a) {
  return "(state " + std::to_string(s) + ", action " + std::to_string(a) + ")";
}

void check_distribution_rows(std::size_t rows, std::size_t cols, const std::vector<double>& p,
                             const char* what) {
  if (p.size() != rows * cols) {
    throw std::invalid_argument(std::string(what) + ": table has wrong size");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = p[r * cols + c];
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument(std::string(what) + ": negative or non-finite entry in row " +
                                    std::to_string(r));
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      throw std::invalid_argument(std::string(what) + ": row " + std::to_string(r) +
                                  " does not sum to 1");
    }
  }
}

}  // namespace

MdpError::MdpError(const std::string& what, std::size_t state, std::size_t action)
    : std::invalid_argument(what), state_(state), action_(action) {}

void validate_mdp(const MdpTables& t) {
  if (t.n_states == 0) throw MdpError("n_states must be positive");
  if (t.n_actions == 0) throw MdpError("n_actions must be positive");
  if (!(t.gamma >= 0.0)) throw MdpError("discount must be >= 0");
  if (!(t.gamma < 1.0)) throw MdpError("discount must be < 1");
  if (t.reward.size() != t.n_states * t.n_actions) throw MdpError("reward table has wrong size");
  if (t.transition.size() != t.n_states * t.n_actions * t.n_states) {
    throw MdpError("transition table has wrong size");
  }
  for (std::size_t s = 0; s < t.n_states; ++s) {
    for (std::size_t a = 0; a < t.n_actions; ++a) {
      if (!std::isfinite(t.reward[s * t.n_actions + a])) {
        throw MdpError("reward not finite at " + coord(s, a), s, a);
      }
      const double* row = t.transition.data() + (s * t.n_actions + a) * t.n_states;
      double sum = 0.0;
      for (std::size_t n = 0; n < t.n_states; ++n) {
        if (!(row[n] >= 0.0) || !std::isfinite(row[n])) {
          throw MdpError("negative transition probability at " + coord(s, a), s, a);
        }
        sum += row[n];
      }
      if (std::abs(sum - 1.0) > kRowTolerance) {
        throw MdpError("row not stochastic at " + coord(s, a), s, a);
      }
    }
  }
}

TabularMDP::TabularMDP(MdpTables tables) : tables_(std::move(tables)) {
  validate_mdp(tables_);
  const std::size_t rows = tables_.n_states * tables_.n_actions;
  row_begin_.reserve(rows + 1);
  row_begin_.push_back(0);
  for (std::size_t row = 0; row < rows; ++row) {
    const double* p = tables_.transition.data() + row * tables_.n_states;
    for (std::size_t n = 0; n < tables_.n_states; ++n) {
      if (p[n] > 0.0) successors_.push_back({n, p[n]});
    }
    row_begin_.push_back(successors_.size());
  }
}

void validate_mdp(const TabularMDP& mdp) { validate_mdp(mdp.tables()); }

Policy::Policy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
  if (n_states == 0 || n_actions == 0) throw std::invalid_argument("policy: empty shape");
  check_distribution_rows(n_states, n_actions, probs_, "policy");
}

QTable::QTable(std::size_t n_states, std::size_t n_actions, std::vector<double> values)
    : n_states_(n_states), n_actions_(n_actions), values_(std::move(values)) {
  if (values_.size() != n_states * n_actions) throw std::invalid_argument("q table: wrong size");
  for (double x : values_) {
    if (!std::isfinite(x)) throw std::invalid_argument("q table: non-finite entry");
  }
}

QTable QTable::constant(std::size_t n_states, std::size_t n_actions, double value) {
  return QTable(n_states, n_actions, std::vector<double>(n_states * n_actions, value));
}

VTable::VTable(std::vector<double> values) : values_(std::move(values)) {
  for (double x : values_) {
    if (!std::isfinite(x)) throw std::invalid_argument("v table: non-finite entry");
  }
}

SupportSet::SupportSet(std::size_t n_states, std::size_t n_actions, std::vector<std::uint8_t> mask)
    : n_states_(n_states), n_actions_(n_actions), mask_(std::move(mask)) {
  if (mask_.size() != n_states * n_actions) throw std::invalid_argument("support: wrong size");
  for (auto& m : mask_) m = m ? 1 : 0;
}

SupportSet SupportSet::full(std::size_t n_states, std::size_t n_actions) {
  return SupportSet(n_states, n_actions, std::vector<std::uint8_t>(n_states * n_actions, 1));
}

SupportSet SupportSet::of(const Policy& pi) {
  std::vector<std::uint8_t> mask(pi.probs().size());
  std::transform(pi.probs().begin(), pi.probs().end(), mask.begin(),
                 [](double p) { return static_cast<std::uint8_t>(p > 0.0); });
  return SupportSet(pi.n_states(), pi.n_actions(), std::move(mask));
}

bool SupportSet::empty(StateId s) const { return count(s) == 0; }

std::size_t SupportSet::count(StateId s) const {
  const auto r = row(s);
  return static_cast<std::size_t>(std::count(r.begin(), r.end(), std::uint8_t{1}));
}

std::vector<StateId> SupportSet::empty_states() const {
  std::vector<StateId> out;
  for (StateId s = 0; s < n_states_; ++s) {
    if (empty(s)) out.push_back(s);
  }
  return out;
}

Policy uniform_policy(std::size_t n_states, std::size_t n_actions) {
  if (n_actions == 0) throw std::invalid_argument("uniform_policy: n_actions must be >= 1");
  return Policy(n_states, n_actions,
                std::vector<double>(n_states * n_actions, 1.0 / static_cast<double>(n_actions)));
}

ActionId masked_argmax(std::span<const double> values, std::span<const std::uint8_t> mask) {
  ActionId best = values.size();
  for (ActionId a = 0; a < values.size(); ++a) {
    if (!mask[a]) continue;
    if (best == values.size() || values[a] > values[best]) best = a;
  }
  if (best == values.size()) throw std::invalid_argument("masked_argmax: empty mask");
  return best;
}

Policy greedy_policy(const QTable& q, const SupportSet& support) {
  if (support.n_states() != q.n_states() || support.n_actions() != q.n_actions()) {
    throw std::invalid_argument("greedy_policy: support shape mismatch");
  }
  std::vector<double> probs(q.n_states() * q.n_actions(), 0.0);
  for (StateId s = 0; s < q.n_states(); ++s) {
    if (support.empty(s)) {
      throw std::invalid_argument("greedy_policy: empty support at state " + std::to_string(s));
    }
    probs[s * q.n_actions() + masked_argmax(q.row(s), support.row(s))] = 1.0;
  }
  return Policy(q.n_states(), q.n_actions(), std::move(probs));
}

VTable exact_policy_value(const TabularMDP& mdp, const Policy& pi) {
  const std::size_t n = mdp.n_states();
  const std::size_t na = mdp.n_actions();
  if (pi.n_states() != n || pi.n_actions() != na) {
    throw std::invalid_argument("exact_policy_value: policy shape mismatch");
  }
  std::vector<double> r_pi(n, 0.0);
  for (StateId s = 0; s < n; ++s) {
    for (ActionId a = 0; a < na; ++a) r_pi[s] += pi(s, a) * mdp.reward(s, a);
  }

  if (n * na <= kDirectSolveLimit) {
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                       static_cast<Eigen::Index>(n));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (StateId s = 0; s < n; ++s) {
      rhs(static_cast<Eigen::Index>(s)) = r_pi[s];
      for (ActionId a = 0; a < na; ++a) {
        const double p = pi(s, a);
        if (p == 0.0) continue;
        for (const auto& succ : mdp.successors(s, a)) {
          system(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(succ.state)) -=
              mdp.gamma() * p * succ.prob;
        }
      }
    }
    Eigen::VectorXd v = system.partialPivLu().solve(rhs);
    return VTable(std::vector<double>(v.data(), v.data() + v.size()));
  }

  std::vector<double> v(n, 0.0), next(n, 0.0);
  for (;;) {
    double change = 0.0;
    for (StateId s = 0; s < n; ++s) {
      double acc = r_pi[s];
      for (ActionId a = 0; a < na; ++a) {
        const double p = pi(s, a);
        if (p == 0.0) continue;
        double ev = 0.0;
        for (const auto& succ : mdp.successors(s, a)) ev += succ.prob * v[succ.state];
        acc += mdp.gamma() * p * ev;
      }
      next[s] = acc;
      change = std::max(change, std::abs(acc - v[s]));
    }
    v.swap(next);
    if (change <= 1e-10 * (1.0 - mdp.gamma())) break;
  }
  return VTable(std::move(v));
}

QTable q_from_v(const TabularMDP& mdp, const VTable& v) {
  std::vector<double> q(mdp.n_states() * mdp.n_actions());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    for (ActionId a = 0; a < mdp.n_actions(); ++a) {
      double ev = 0.0;
      for (const auto& succ : mdp.successors(s, a)) ev += succ.prob * v(succ.state);
      q[s * mdp.n_actions() + a] = mdp.reward(s, a) + mdp.gamma() * ev;
    }
  }
  return QTable(mdp.n_states(), mdp.n_actions(), std::move(q));
}

void write_mdp(const TabularMDP& mdp, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto& t = mdp.tables();
  out << "n_states " << t.n_states << '\n'
      << "n_actions " << t.n_actions << '\n'
      << "gamma " << format_real(t.gamma) << '\n'
      << "reward\n";
  auto write_rows = [&](const std::vector<double>& table, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        out << (c ? " " : "") << format_real(table[r * cols + c]);
      }
      out << '\n';
    }
  };
  write_rows(t.reward, t.n_states, t.n_actions);
  out << "transition\n";
  write_rows(t.transition, t.n_states * t.n_actions, t.n_states);
}

TabularMDP read_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  // (file line number, trimmed text) of every non-blank line
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::size_t file_line = 0;
  for (std::string line; std::getline(in, line);) {
    ++file_line;
    if (!trim(line).empty()) lines.emplace_back(file_line, std::string(trim(line)));
  }
  std::size_t pos = 0;
  std::size_t at = 0;
  auto fail = [&](const std::string& what) -> std::invalid_argument {
    return std::invalid_argument(path.string() + ": line " + std::to_string(at) + ": " + what);
  };
  auto expect_line = [&]() -> const std::string& {
    if (pos >= lines.size()) throw std::invalid_argument(path.string() + ": unexpected end of file");
    at = lines[pos].first;
    return lines[pos++].second;
  };
  auto number = [&](auto parse, std::string_view tok) {
    try {
      return parse(tok);
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  };
  auto keyed = [&](const char* key) {
    const auto fields = split(expect_line(), ' ');
    if (fields.size() != 2 || fields[0] != key) {
      throw fail(std::string("expected '") + key + " <value>'");
    }
    return std::string(fields[1]);
  };
  auto real = [](std::string_view v) { return parse_real(v); };
  auto whole = [](std::string_view v) { return parse_unsigned(v); };
  MdpTables t;
  t.n_states = number(whole, keyed("n_states"));
  t.n_actions = number(whole, keyed("n_actions"));
  t.gamma = number(real, keyed("gamma"));
  auto read_block = [&](const char* name, std::size_t rows, std::size_t cols) {
    if (expect_line() != name) throw fail(std::string("expected '") + name + "'");
    std::vector<double> table;
    table.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      std::istringstream fields(expect_line());
      std::string tok;
      std::size_t c = 0;
      while (fields >> tok) {
        table.push_back(number(real, tok));
        ++c;
      }
      if (c != cols) throw fail("expected " + std::to_string(cols) + " values");
    }
    return table;
  };
  t.reward = read_block("reward", t.n_states, t.n_actions);
  t.transition = read_block("transition", t.n_states * t.n_actions, t.n_states);
  return TabularMDP(std::move(t));
}

}  // namespace insample
