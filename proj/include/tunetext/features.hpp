#pragma once

#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "tunetext/audio.hpp"

namespace tunetext::encoders {

struct FeatureConfig {
  int sample_rate = 16000;
  std::size_t n_bands = 64;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  double log_floor = 1e-10;
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;  // 0 means Nyquist

  std::size_t window_samples() const;
  std::size_t hop_samples() const;
  std::size_t fft_size() const;  // next power of two >= window

  nlohmann::json to_json() const;
  static FeatureConfig from_json(const nlohmann::json& j);
  bool operator==(const FeatureConfig&) const = default;
};

/// Time-major T x F matrix.
struct FeatureSequence {
  std::size_t frames = 0;
  std::size_t bands = 0;
  std::vector<double> values;

  std::span<const double> frame(std::size_t t) const {
    return {values.data() + t * bands, bands};
  }
  bool operator==(const FeatureSequence&) const = default;
};

/// Log mel-band energies: Hann window, power spectrum, triangular HTK-mel
/// filterbank, natural log with a floor. Copies share the FFT plan; calls
/// are safe from multiple threads.
class Featurizer {
 public:
  explicit Featurizer(FeatureConfig config = {});

  const FeatureConfig& config() const { return config_; }

  /// Number of frames produced for a clip of `samples` samples.
  std::size_t frame_count(std::size_t samples) const;

  /// Throws AudioError for an empty clip or a sample-rate mismatch.
  FeatureSequence operator()(const AudioClip& clip) const;

 private:
  struct Band {
    std::size_t first_bin = 0;
    std::vector<double> weights;
  };
  struct Plan;

  FeatureConfig config_;
  std::vector<double> window_;
  std::vector<Band> bands_;
  std::shared_ptr<Plan> plan_;
};

}  // namespace tunetext::encoders
