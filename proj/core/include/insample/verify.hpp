#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace insample {

/// One randomized property check. `measured` is the worst value observed
/// over all trials and must satisfy `measured <relation> bound`; `seed` and
/// `worst_trial` reproduce the worst trial.
struct VerifyCheck {
  std::string suite;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  std::string relation = "<=";  // "<=" or ">="
  double bound = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::size_t worst_trial = 0;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool passed() const;
  /// One line per check.
  std::string to_text() const;
  /// CSV with header suite,check,passed,measured,relation,bound,trials,seed,worst_trial.
  void write_csv(const std::filesystem::path& path) const;
};

/// identities, contraction, monotonicity, improvement, tau-limit,
/// optimality, gradients.
const std::vector<std::string>& verify_suites();

/// Runs one suite, or every suite for "all". Throws std::invalid_argument on
/// an unknown suite name.
VerifyReport run_verify(const std::string& suite, std::uint64_t seed);

}  // namespace insample
