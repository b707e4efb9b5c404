#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace insample {

/// A differentiable map from a feature vector to an output vector with a flat
/// parameter vector and a gradient buffer of the same shape.
///
/// forward() records what backward() needs; backward() adds the gradient of
/// <upstream, output> to the buffer. Gradients accumulate until zero_grad().
class Approximator {
 public:
  virtual ~Approximator() = default;

  virtual std::unique_ptr<Approximator> clone() const = 0;
  /// Text descriptor, e.g. "onehot-linear 148 4" or "mlp 148 64 64 4".
  virtual std::string architecture() const = 0;
  virtual std::size_t input_size() const = 0;
  virtual std::size_t output_size() const = 0;

  virtual std::span<const double> forward(std::span<const double> input) = 0;
  /// forward() on the unit vector e_index.
  virtual std::span<const double> forward_onehot(std::size_t index);
  virtual void backward(std::span<const double> upstream) = 0;

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  std::vector<double>& gradient() { return grad_; }
  const std::vector<double>& gradient() const { return grad_; }
  void zero_grad();

 protected:
  std::vector<double> params_;
  std::vector<double> grad_;
};

/// Bias-free linear map, one parameter per (output, input) pair. On one-hot
/// inputs this is a lookup table.
class OneHotLinear final : public Approximator {
 public:
  OneHotLinear(std::size_t n_inputs, std::size_t n_outputs, double init_value);

  std::unique_ptr<Approximator> clone() const override;
  std::string architecture() const override;
  std::size_t input_size() const override { return n_in_; }
  std::size_t output_size() const override { return n_out_; }

  std::span<const double> forward(std::span<const double> input) override;
  std::span<const double> forward_onehot(std::size_t index) override;
  void backward(std::span<const double> upstream) override;

 private:
  std::size_t n_in_;
  std::size_t n_out_;
  std::vector<double> input_;
  std::vector<double> output_;
  std::size_t hot_ = 0;
  enum class Last { None, Dense, OneHot } last_ = Last::None;
};

/// Dense network with ReLU hidden layers and a linear output layer.
///
/// Layer l stores W_l (fan_out x fan_in, row-major) followed by b_l. Weights
/// are drawn uniformly from +-sqrt(6 / (fan_in + fan_out)), biases start at 0.
class Mlp final : public Approximator {
 public:
  Mlp(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

  std::unique_ptr<Approximator> clone() const override;
  std::string architecture() const override;
  std::size_t input_size() const override { return sizes_.front(); }
  std::size_t output_size() const override { return sizes_.back(); }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

  std::span<const double> forward(std::span<const double> input) override;
  void backward(std::span<const double> upstream) override;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;        // start of W_l in params_
  std::vector<std::vector<double>> acts_;   // acts_[0] input, acts_[l] post-activation
  bool recorded_ = false;
};

/// Builds an approximator from its architecture() string. Parameters are
/// freshly initialized (constant 0 / seed 0) and meant to be overwritten.
std::unique_ptr<Approximator> make_approximator(const std::string& architecture);

/// Checkpoint text:
///
///   architecture <descriptor>
///   parameters <count>
///   <one real per line, shortest round-trip form>
void write_checkpoint(const Approximator& approx, const std::filesystem::path& path);
std::unique_ptr<Approximator> read_checkpoint(const std::filesystem::path& path);
std::string checkpoint_text(const Approximator& approx);
std::unique_ptr<Approximator> parse_checkpoint(const std::string& text);

}  // namespace insample
