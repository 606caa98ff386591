#pragma once

// Minimal trainable-parameter plumbing shared by the tagger and the towers:
// named tensors with gradients, dense layers with hand-written backward
// passes, Adam, and the single-file checkpoint format.

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace tunetext::nn {

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(std::string n, std::vector<std::size_t> s);

  std::size_t size() const { return value.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  std::span<const double> row(std::size_t r) const {
    return {value.data() + r * cols(), cols()};
  }
  std::span<double> grad_row(std::size_t r) {
    return {grad.data() + r * cols(), cols()};
  }
  void zero_grad();

  bool operator==(const Tensor& o) const {
    return name == o.name && shape == o.shape && value == o.value;
  }
};

using Rng = std::mt19937_64;

/// Uniform in [0, 1) from the top 53 bits; identical across standard
/// libraries, unlike std::uniform_real_distribution.
double uniform01(Rng& rng);
/// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);
double normal(Rng& rng);

/// U(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
void init_glorot(Tensor& t, Rng& rng);
void init_normal(Tensor& t, Rng& rng, double stddev);

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

// Dense layer y = W x + b, W is out x in.
void linear_forward(const Tensor& w, const Tensor& b, std::span<const double> x,
                    std::span<double> y);
// Accumulates dW, db and (when non-empty) dx += W^T dy.
void linear_backward(Tensor& w, Tensor& b, std::span<const double> x,
                     std::span<const double> dy, std::span<double> dx);

void relu_inplace(std::span<double> v);
// dv[i] = 0 where the forward output was clipped.
void relu_backward(std::span<const double> out, std::span<double> dv);

double l2_norm(std::span<const double> v);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(const std::vector<Tensor*>& params, double lr);
  std::int64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Checkpoint file: "TUNETEXT-CKPT <version>\n", one line of JSON header
// (kind, config, tensor names and shapes), then little-endian float64
// values of every tensor in header order.
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const nlohmann::json& config,
                     const std::vector<const Tensor*>& tensors);

struct LoadedCheckpoint {
  std::string kind;
  nlohmann::json config;
  std::vector<Tensor> tensors;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Copies values of `src` into same-named tensors of `dst`; shapes must
/// match and every destination tensor must be present.
void assign_tensors(const std::vector<Tensor>& src,
                    const std::vector<Tensor*>& dst);

}  // namespace tunetext::nn
