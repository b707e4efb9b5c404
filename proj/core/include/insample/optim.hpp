#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "insample/approximator.hpp"

namespace insample {

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies the accumulated gradient of `approx`; does not zero it.
  virtual void step(Approximator& approx) = 0;
  virtual std::unique_ptr<Optimizer> clone() const = 0;
  double learning_rate() const { return lr_; }

 protected:
  explicit Optimizer(double lr);
  double lr_;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : Optimizer(lr) {}
  void step(Approximator& approx) override;
  std::unique_ptr<Optimizer> clone() const override { return std::make_unique<Sgd>(*this); }
};

/// Bias-corrected Adam. Moment buffers are sized on the first step and bound
/// to that parameter count afterwards.
class Adam final : public Optimizer {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Approximator& approx) override;
  std::unique_ptr<Optimizer> clone() const override { return std::make_unique<Adam>(*this); }
  std::size_t steps() const { return t_; }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
  double beta1_pow_ = 1.0;
  double beta2_pow_ = 1.0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// target <- rate * target + (1 - rate) * online.
void polyak_update(Approximator& target, const Approximator& online, double rate);

}  // namespace insample
