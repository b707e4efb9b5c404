#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "insample/mdp.hpp"
#include "insample/operators.hpp"

namespace insample {

inline constexpr double kDefaultTolerance = 1e-8;
inline constexpr std::size_t kDefaultMaxIter = 100000;

/// Outcome of a fixed-point solve. `residuals[k]` is the sup-norm change made
/// by iteration k + 1.
struct SolveReport {
  QTable q;
  std::size_t iterations = 0;
  std::vector<double> residuals;
  bool converged = false;
};

/// Sup-norm change below which an iteration with contraction factor gamma is
/// certified to lie within `tol` of its fixed point.
double certified_step(double tol, double gamma);

/// Iterates q <- backup(q) until the change certifies ||q - q*|| <= tol.
SolveReport value_iteration(const TabularMDP& mdp, const BackupKind& kind, const QTable& q0,
                            double tol = kDefaultTolerance,
                            std::size_t max_iter = kDefaultMaxIter);

/// Fixed point of the on-policy entropy-regularized operator, starting at q0
/// (zeros when absent).
SolveReport soft_policy_evaluation(const TabularMDP& mdp, const Policy& pi, Temperature tau,
                                   double tol = kDefaultTolerance,
                                   std::size_t max_iter = kDefaultMaxIter,
                                   const std::optional<QTable>& q0 = std::nullopt,
                                   const LiveMask* live = nullptr);

/// q~^pi by a direct linear solve; a test oracle for the iterative evaluation.
QTable exact_soft_q_value(const TabularMDP& mdp, const Policy& pi, Temperature tau);

struct PolicyIterationOptions {
  double tol = kDefaultTolerance;          // sup-norm change of successive policies
  double eval_tol = 1e-12;                 // inner evaluation accuracy
  std::size_t max_outer = 1000;
  std::size_t max_eval_iter = kDefaultMaxIter;
  std::optional<Policy> initial;           // defaults to beta
  const LiveMask* live = nullptr;          // states flagged 0 bootstrap with 0
  bool keep_trajectory = false;
};

struct PolicyIterationResult {
  Policy policy;
  QTable q;
  SolveReport report;                 // one residual per outer step (policy change)
  std::vector<Policy> policies;       // pi_0, pi_1, ... when keep_trajectory
  std::vector<QTable> values;         // q~^{pi_t} when keep_trajectory
};

/// Alternates exact soft evaluation with the closed-form in-sample softmax
/// improvement against beta.
PolicyIterationResult insample_soft_policy_iteration(const TabularMDP& mdp, const Policy& beta,
                                                     Temperature tau,
                                                     const PolicyIterationOptions& options = {});

/// Largest number of deterministic policies the enumeration oracle accepts.
inline constexpr std::size_t kBruteForcePolicyLimit = std::size_t{1} << 20;

/// Enumerates every deterministic support-constrained policy, evaluates each
/// exactly and returns q of the best. Throws std::length_error on instances
/// with more than 12 states, more than 4 actions or more than
/// kBruteForcePolicyLimit policies.
QTable brute_force_insample_optimum(const TabularMDP& mdp, const SupportSet& support);

struct TauGap {
  double tau;
  double gap;    // ||q~*(tau) - q*||_inf
  double bound;  // tau log|A| / (1 - gamma)
};

/// Gap between the in-sample soft and hard optima along a decreasing
/// temperature schedule. Every solve starts from zero, so on singleton
/// supports the two iterations coincide and the gap is exactly 0.
std::vector<TauGap> tau_limit_check(const TabularMDP& mdp, const SupportSet& support,
                                    const std::vector<double>& tau_schedule,
                                    double tol = 1e-10);

/// CSV with header `iteration,residual`.
void write_report_csv(const SolveReport& report, const std::filesystem::path& path);

}  // namespace insample
