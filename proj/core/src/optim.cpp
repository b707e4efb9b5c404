#include "insample/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace insample {

Optimizer::Optimizer(double lr) : lr_(lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be > 0");
}

void Sgd::step(Approximator& approx) {
  auto& p = approx.parameters();
  const auto& g = approx.gradient();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr_ * g[i];
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : Optimizer(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw std::invalid_argument("Adam: invalid moment constants");
  }
}

void Adam::step(Approximator& approx) {
  auto& p = approx.parameters();
  const auto& g = approx.gradient();
  if (t_ == 0 && m_.empty()) {
    m_.assign(p.size(), 0.0);
    v_.assign(p.size(), 0.0);
  }
  if (m_.size() != p.size()) throw std::invalid_argument("Adam: parameter shape changed");
  ++t_;
  beta1_pow_ *= beta1_;
  beta2_pow_ *= beta2_;
  const double c1 = 1.0 - beta1_pow_;
  const double c2 = 1.0 - beta2_pow_;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i] * g[i];
    // Moments of rarely-touched parameters decay into subnormals, which are
    // slow and below any effect on the step.
    if (std::abs(m_[i]) < std::numeric_limits<double>::min()) m_[i] = 0.0;
    if (v_[i] < std::numeric_limits<double>::min()) v_[i] = 0.0;
    p[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void polyak_update(Approximator& target, const Approximator& online, double rate) {
  auto& t = target.parameters();
  const auto& o = online.parameters();
  if (t.size() != o.size()) throw std::invalid_argument("polyak_update: shape mismatch");
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("polyak_update: rate outside [0, 1]");
  if (rate == 1.0) return;
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rate * t[i] + (1.0 - rate) * o[i];
}

}  // namespace insample
