#include "insample/approximator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "insample/random.hpp"
#include "insample/text.hpp"

namespace insample {

std::span<const double> Approximator::forward_onehot(std::size_t index) {
  if (index >= input_size()) throw std::out_of_range("forward_onehot: index out of range");
  std::vector<double> x(input_size(), 0.0);
  x[index] = 1.0;
  return forward(x);
}

void Approximator::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

OneHotLinear::OneHotLinear(std::size_t n_inputs, std::size_t n_outputs, double init_value)
    : n_in_(n_inputs), n_out_(n_outputs), output_(n_outputs, 0.0) {
  if (n_inputs == 0 || n_outputs == 0) throw std::invalid_argument("OneHotLinear: empty shape");
  params_.assign(n_inputs * n_outputs, init_value);
  grad_.assign(params_.size(), 0.0);
}

std::unique_ptr<Approximator> OneHotLinear::clone() const {
  return std::make_unique<OneHotLinear>(*this);
}

std::string OneHotLinear::architecture() const {
  return "onehot-linear " + std::to_string(n_in_) + " " + std::to_string(n_out_);
}

// Parameters are stored input-major so that a one-hot forward reads a
// contiguous block: params_[i * n_out + o].
std::span<const double> OneHotLinear::forward(std::span<const double> input) {
  if (input.size() != n_in_) throw std::invalid_argument("OneHotLinear: input size mismatch");
  input_.assign(input.begin(), input.end());
  std::fill(output_.begin(), output_.end(), 0.0);
  for (std::size_t i = 0; i < n_in_; ++i) {
    if (input[i] == 0.0) continue;
    for (std::size_t o = 0; o < n_out_; ++o) output_[o] += params_[i * n_out_ + o] * input[i];
  }
  last_ = Last::Dense;
  return output_;
}

std::span<const double> OneHotLinear::forward_onehot(std::size_t index) {
  if (index >= n_in_) throw std::out_of_range("forward_onehot: index out of range");
  std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(index * n_out_), n_out_,
              output_.begin());
  hot_ = index;
  last_ = Last::OneHot;
  return output_;
}

void OneHotLinear::backward(std::span<const double> upstream) {
  if (last_ == Last::None) throw std::logic_error("backward called before forward");
  if (upstream.size() != n_out_) throw std::invalid_argument("OneHotLinear: upstream size mismatch");
  if (last_ == Last::OneHot) {
    for (std::size_t o = 0; o < n_out_; ++o) grad_[hot_ * n_out_ + o] += upstream[o];
    return;
  }
  for (std::size_t i = 0; i < n_in_; ++i) {
    if (input_[i] == 0.0) continue;
    for (std::size_t o = 0; o < n_out_; ++o) grad_[i * n_out_ + o] += upstream[o] * input_[i];
  }
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes, std::uint64_t seed) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least one layer");
  for (std::size_t n : sizes_) {
    if (n == 0) throw std::invalid_argument("Mlp: zero-width layer");
  }
  Rng rng = make_rng(seed, 0x6d6c70);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t fan_in = sizes_[l];
    const std::size_t fan_out = sizes_[l + 1];
    offsets_.push_back(params_.size());
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t k = 0; k < fan_in * fan_out; ++k) {
      params_.push_back(limit * (2.0 * uniform01(rng) - 1.0));
    }
    params_.insert(params_.end(), fan_out, 0.0);
  }
  grad_.assign(params_.size(), 0.0);
  acts_.resize(sizes_.size());
  for (std::size_t l = 0; l < sizes_.size(); ++l) acts_[l].assign(sizes_[l], 0.0);
}

std::unique_ptr<Approximator> Mlp::clone() const { return std::make_unique<Mlp>(*this); }

std::string Mlp::architecture() const {
  std::string out = "mlp";
  for (std::size_t n : sizes_) out += " " + std::to_string(n);
  return out;
}

std::span<const double> Mlp::forward(std::span<const double> input) {
  if (input.size() != sizes_.front()) throw std::invalid_argument("Mlp: input size mismatch");
  acts_[0].assign(input.begin(), input.end());
  const std::size_t n_layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t fan_in = sizes_[l];
    const std::size_t fan_out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + fan_in * fan_out;
    const auto& x = acts_[l];
    auto& y = acts_[l + 1];
    for (std::size_t o = 0; o < fan_out; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < fan_in; ++i) z += w[o * fan_in + i] * x[i];
      y[o] = (l + 1 < n_layers) ? std::max(z, 0.0) : z;
    }
  }
  recorded_ = true;
  return acts_.back();
}

void Mlp::backward(std::span<const double> upstream) {
  if (!recorded_) throw std::logic_error("backward called before forward");
  if (upstream.size() != sizes_.back()) throw std::invalid_argument("Mlp: upstream size mismatch");
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
    const std::size_t fan_in = sizes_[l];
    const std::size_t fan_out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    double* gw = grad_.data() + offsets_[l];
    double* gb = gw + fan_in * fan_out;
    const auto& x = acts_[l];
    for (std::size_t o = 0; o < fan_out; ++o) {
      gb[o] += delta[o];
      for (std::size_t i = 0; i < fan_in; ++i) gw[o * fan_in + i] += delta[o] * x[i];
    }
    if (l == 0) break;
    std::vector<double> prev(fan_in, 0.0);
    for (std::size_t i = 0; i < fan_in; ++i) {
      // ReLU derivative, taken as 0 at the kink.
      if (x[i] <= 0.0) continue;
      double g = 0.0;
      for (std::size_t o = 0; o < fan_out; ++o) g += w[o * fan_in + i] * delta[o];
      prev[i] = g;
    }
    delta = std::move(prev);
  }
}

std::unique_ptr<Approximator> make_approximator(const std::string& architecture) {
  std::istringstream in(architecture);
  std::string kind;
  in >> kind;
  std::vector<std::size_t> sizes;
  std::string token;
  while (in >> token) sizes.push_back(parse_unsigned(token));
  if (kind == "onehot-linear") {
    if (sizes.size() != 2) throw std::invalid_argument("onehot-linear needs 2 sizes");
    return std::make_unique<OneHotLinear>(sizes[0], sizes[1], 0.0);
  }
  if (kind == "mlp") return std::make_unique<Mlp>(sizes, 0);
  throw std::invalid_argument("unknown architecture '" + architecture + "'");
}

std::string checkpoint_text(const Approximator& approx) {
  std::string out = "architecture " + approx.architecture() + "\n";
  out += "parameters " + std::to_string(approx.parameters().size()) + "\n";
  for (double p : approx.parameters()) out += format_real(p) + "\n";
  return out;
}

std::unique_ptr<Approximator> parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("architecture ", 0) != 0) {
    throw std::runtime_error("checkpoint: missing architecture line");
  }
  auto approx = make_approximator(std::string(trim(line.substr(13))));
  if (!std::getline(in, line) || line.rfind("parameters ", 0) != 0) {
    throw std::runtime_error("checkpoint: missing parameters line");
  }
  const std::size_t count = parse_unsigned(line.substr(11));
  if (count != approx->parameters().size()) {
    throw std::runtime_error("checkpoint: parameter count does not match architecture");
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: truncated parameter list");
    approx->parameters()[i] = parse_real(line);
  }
  return approx;
}

void write_checkpoint(const Approximator& approx, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << checkpoint_text(approx);
}

std::unique_ptr<Approximator> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace insample
