#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "insample/mdp.hpp"

namespace insample {

/// Strictly positive, finite entropy temperature.
class Temperature {
 public:
  explicit Temperature(double tau);
  double value() const { return tau_; }

 private:
  double tau_;
};

/// What an in-sample backup does at a next state whose support is empty.
enum class EmptySupport {
  Reject,         // throw
  BootstrapZero,  // the state's bootstrap value is 0
};

struct HardMax {};
struct SoftMax {
  Temperature tau;
};
struct InSampleHardMax {
  SupportSet support;
  EmptySupport on_empty = EmptySupport::Reject;
};
struct InSampleSoftMax {
  SupportSet support;
  Temperature tau;
  EmptySupport on_empty = EmptySupport::Reject;
};

using BackupKind = std::variant<HardMax, SoftMax, InSampleHardMax, InSampleSoftMax>;

/// Optional per-state flag; states flagged 0 bootstrap with value 0.
using LiveMask = std::vector<std::uint8_t>;

// -- one-step operators ------------------------------------------------------

/// log sum_{i: mask_i} exp(values_i), shifted by the masked max.
double log_sum_exp(std::span<const double> values, std::span<const std::uint8_t> mask);
double log_sum_exp(std::span<const double> values);

/// tau * log sum_a exp(q(a) / tau).
double softmax_value(std::span<const double> q_row, Temperature tau);

/// tau * log sum_{a in support} exp(q(a) / tau).
double insample_softmax_value(std::span<const double> q_row, std::span<const std::uint8_t> support,
                              Temperature tau);

/// pi(a) proportional to beta(a) * exp(q(a)/tau - log beta(a)): zero off the
/// support of beta, softmax(q / tau) on it.
std::vector<double> insample_softmax_policy(std::span<const double> q_row,
                                            std::span<const double> beta_row, Temperature tau);

/// tau * log of the sample mean of exp(q(a_i)/tau - log beta(a_i)), a_i ~ beta.
double sampled_insample_softmax_value(std::span<const double> q_row,
                                      std::span<const double> beta_row,
                                      std::span<const ActionId> samples, Temperature tau);

/// sum_a pi(a|s) (q(s,a) - tau log pi(a|s)), with 0 log 0 = 0.
double soft_policy_value(const QTable& q, const Policy& pi, Temperature tau, StateId state);
double soft_policy_value(std::span<const double> q_row, std::span<const double> pi_row,
                         Temperature tau);

/// Entropy-regularized objective pi . q + tau H(pi) for a single row.
double max_entropy_objective(std::span<const double> q_row, std::span<const double> pi_row,
                             Temperature tau);

// -- Bellman operators -------------------------------------------------------

/// Per-state bootstrap value g(q(s, .)) of the chosen operator.
std::vector<double> bootstrap_values(const QTable& q, const BackupKind& kind);

/// One application of r + gamma E_{s'}[g(q(s', .))].
QTable backup(const TabularMDP& mdp, const QTable& q, const BackupKind& kind);

/// One application of the on-policy entropy-regularized operator
/// r + gamma E_{s',a'~P^pi}[q(s',a') - tau log pi(a'|s')].
QTable onpolicy_soft_backup(const TabularMDP& mdp, const QTable& q, const Policy& pi,
                            Temperature tau, const LiveMask* live = nullptr);

/// r + gamma E_{s'}[next_value(s')] for every (s, a).
QTable expected_backup(const TabularMDP& mdp, std::span<const double> next_value);

double sup_norm_diff(const QTable& a, const QTable& b);

}  // namespace insample
