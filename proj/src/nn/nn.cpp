#include "tunetext/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>

#include "tunetext/kernels.hpp"

namespace tunetext::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

Tensor::Tensor(std::string n, std::vector<std::size_t> s)
    : name(std::move(n)), shape(std::move(s)) {
  std::size_t total = 1;
  for (auto d : shape) total *= d;
  value.assign(total, 0.0);
  grad.assign(total, 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index over empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

double normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void init_glorot(Tensor& t, Rng& rng) {
  const double fan_out = static_cast<double>(t.rows());
  const double fan_in = static_cast<double>(t.cols());
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t.value) v = (2.0 * uniform01(rng) - 1.0) * limit;
}

void init_normal(Tensor& t, Rng& rng, double stddev) {
  for (auto& v : t.value) v = normal(rng) * stddev;
}

void linear_forward(const Tensor& w, const Tensor& b, std::span<const double> x,
                    std::span<double> y) {
  kernels::matvec(w.value, w.rows(), w.cols(), x, y);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value[i];
}

void linear_backward(Tensor& w, Tensor& b, std::span<const double> x,
                     std::span<const double> dy, std::span<double> dx) {
  kernels::outer_acc(1.0, dy, x, w.grad);
  for (std::size_t i = 0; i < dy.size(); ++i) b.grad[i] += dy[i];
  if (!dx.empty()) {
    kernels::matvec_transposed_acc(w.value, w.rows(), w.cols(), dy, dx);
  }
}

void relu_inplace(std::span<double> v) {
  for (auto& x : v) x = x > 0.0 ? x : 0.0;
}

void relu_backward(std::span<const double> out, std::span<double> dv) {
  for (std::size_t i = 0; i < dv.size(); ++i) {
    if (out[i] <= 0.0) dv[i] = 0.0;
  }
}

double l2_norm(std::span<const double> v) {
  return std::sqrt(kernels::dot(v, v));
}

void Adam::step(const std::vector<Tensor*>& params, double lr) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw std::logic_error("Adam parameter list changed between steps");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const nlohmann::json& config,
                     const std::vector<const Tensor*>& tensors) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["kind"] = kind;
  header["config"] = config;
  nlohmann::json list = nlohmann::json::array();
  for (const auto* t : tensors) list.push_back({{"name", t->name}, {"shape", t->shape}});
  header["tensors"] = list;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << "TUNETEXT-CKPT " << kCheckpointVersion << '\n' << header.dump() << '\n';
  for (const auto* t : tensors) {
    out.write(reinterpret_cast<const char*>(t->value.data()),
              static_cast<std::streamsize>(t->value.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open checkpoint");
  std::string magic;
  std::getline(in, magic);
  if (magic.rfind("TUNETEXT-CKPT ", 0) != 0) {
    throw std::runtime_error(path.string() + ": not a checkpoint file");
  }
  const int version = std::stoi(magic.substr(14));
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " +
                             std::to_string(version));
  }
  std::string header_line;
  std::getline(in, header_line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": corrupt checkpoint header");
  }
  LoadedCheckpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.config = header.at("config");
  for (const auto& entry : header.at("tensors")) {
    Tensor t(entry.at("name").get<std::string>(),
             entry.at("shape").get<std::vector<std::size_t>>());
    in.read(reinterpret_cast<char*>(t.value.data()),
            static_cast<std::streamsize>(t.value.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path.string() + ": truncated tensor " + t.name);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

void assign_tensors(const std::vector<Tensor>& src,
                    const std::vector<Tensor*>& dst) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& t : src) by_name[t.name] = &t;
  for (Tensor* d : dst) {
    auto it = by_name.find(d->name);
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint is missing tensor '" + d->name + "'");
    }
    if (it->second->shape != d->shape) {
      throw std::runtime_error("shape mismatch for tensor '" + d->name + "'");
    }
    d->value = it->second->value;
  }
}

}  // namespace tunetext::nn
