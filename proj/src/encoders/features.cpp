#include "tunetext/features.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

#include "tunetext/kernels.hpp"

namespace tunetext::encoders {

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

std::size_t FeatureConfig::window_samples() const {
  return static_cast<std::size_t>(std::lround(window_ms * sample_rate / 1000.0));
}

std::size_t FeatureConfig::hop_samples() const {
  return static_cast<std::size_t>(std::lround(hop_ms * sample_rate / 1000.0));
}

std::size_t FeatureConfig::fft_size() const {
  std::size_t n = 1;
  while (n < window_samples()) n <<= 1;
  return n;
}

nlohmann::json FeatureConfig::to_json() const {
  return {{"sample_rate", sample_rate}, {"n_bands", n_bands},
          {"window_ms", window_ms},     {"hop_ms", hop_ms},
          {"log_floor", log_floor},     {"fmin_hz", fmin_hz},
          {"fmax_hz", fmax_hz}};
}

FeatureConfig FeatureConfig::from_json(const nlohmann::json& j) {
  FeatureConfig c;
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.n_bands = j.value("n_bands", c.n_bands);
  c.window_ms = j.value("window_ms", c.window_ms);
  c.hop_ms = j.value("hop_ms", c.hop_ms);
  c.log_floor = j.value("log_floor", c.log_floor);
  c.fmin_hz = j.value("fmin_hz", c.fmin_hz);
  c.fmax_hz = j.value("fmax_hz", c.fmax_hz);
  return c;
}

struct Featurizer::Plan {
  fftw_plan plan = nullptr;
  std::size_t n_fft = 0;

  explicit Plan(std::size_t n) : n_fft(n) {
    std::lock_guard lock(planner_mutex());
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (plan == nullptr) throw std::runtime_error("FFTW planning failed");
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
};

Featurizer::Featurizer(FeatureConfig config) : config_(config) {
  if (config_.sample_rate <= 0) throw std::invalid_argument("sample_rate must be positive");
  if (config_.n_bands == 0) throw std::invalid_argument("n_bands must be positive");
  if (config_.window_samples() == 0 || config_.hop_samples() == 0) {
    throw std::invalid_argument("window and hop must span at least one sample");
  }
  if (!(config_.log_floor > 0.0)) throw std::invalid_argument("log_floor must be positive");

  const std::size_t win = config_.window_samples();
  const std::size_t n_fft = config_.fft_size();
  window_.resize(win);
  for (std::size_t i = 0; i < win; ++i) {
    window_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(win));
  }

  const double nyquist = config_.sample_rate / 2.0;
  const double fmax = config_.fmax_hz > 0.0 ? std::min(config_.fmax_hz, nyquist) : nyquist;
  const double mel_lo = hz_to_mel(config_.fmin_hz);
  const double mel_hi = hz_to_mel(fmax);
  const std::size_t n_bins = n_fft / 2 + 1;
  std::vector<double> edges(config_.n_bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(config_.n_bands + 1));
  }
  bands_.resize(config_.n_bands);
  for (std::size_t b = 0; b < config_.n_bands; ++b) {
    const double lo = edges[b];
    const double mid = edges[b + 1];
    const double hi = edges[b + 2];
    std::vector<double> w(n_bins, 0.0);
    std::size_t first = n_bins;
    std::size_t last = 0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * config_.sample_rate / static_cast<double>(n_fft);
      double v = 0.0;
      if (f > lo && f <= mid) v = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) v = (hi - f) / (hi - mid);
      if (v > 0.0) {
        w[k] = v;
        first = std::min(first, k);
        last = k;
      }
    }
    if (first < n_bins) {
      bands_[b].first_bin = first;
      bands_[b].weights.assign(w.begin() + static_cast<std::ptrdiff_t>(first),
                               w.begin() + static_cast<std::ptrdiff_t>(last + 1));
    }
  }
  plan_ = std::make_shared<Plan>(n_fft);
}

std::size_t Featurizer::frame_count(std::size_t samples) const {
  const std::size_t win = config_.window_samples();
  const std::size_t hop = config_.hop_samples();
  if (samples <= win) return 1;
  return 1 + (samples - win) / hop;
}

FeatureSequence Featurizer::operator()(const AudioClip& clip) const {
  if (clip.empty()) throw AudioError("cannot featurize an empty clip");
  if (clip.sample_rate != config_.sample_rate) {
    throw AudioError("clip sample rate " + std::to_string(clip.sample_rate) +
                     " Hz does not match feature sample rate " +
                     std::to_string(config_.sample_rate) + " Hz");
  }
  const std::size_t win = config_.window_samples();
  const std::size_t hop = config_.hop_samples();
  const std::size_t n_fft = plan_->n_fft;
  const std::size_t n_bins = n_fft / 2 + 1;

  FeatureSequence out;
  out.frames = frame_count(clip.samples.size());
  out.bands = config_.n_bands;
  out.values.resize(out.frames * out.bands);

  struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
  };
  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(n_fft));
  std::unique_ptr<fftw_complex, FftwDeleter> spec(fftw_alloc_complex(n_bins));
  std::vector<double> power(n_bins);
  const double log_floor = std::log(config_.log_floor);

  for (std::size_t t = 0; t < out.frames; ++t) {
    double* buf = in.get();
    std::fill(buf, buf + n_fft, 0.0);
    const std::size_t offset = t * hop;
    for (std::size_t i = 0; i < win; ++i) {
      const std::size_t s = offset + i;
      if (s < clip.samples.size()) buf[i] = clip.samples[s] * window_[i];
    }
    fftw_execute_dft_r2c(plan_->plan, buf, spec.get());
    for (std::size_t k = 0; k < n_bins; ++k) {
      power[k] = spec.get()[k][0] * spec.get()[k][0] + spec.get()[k][1] * spec.get()[k][1];
    }
    for (std::size_t b = 0; b < out.bands; ++b) {
      const auto& band = bands_[b];
      double energy = 0.0;
      if (!band.weights.empty()) {
        energy = kernels::dot(band.weights,
                              std::span<const double>(power).subspan(
                                  band.first_bin, band.weights.size()));
      }
      out.values[t * out.bands + b] =
          energy > config_.log_floor ? std::log(energy) : log_floor;
    }
  }
  return out;
}

}  // namespace tunetext::encoders
