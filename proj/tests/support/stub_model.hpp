#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tunetext/encoders.hpp"

namespace tunetext::testing {

/// Embedding model whose outputs come from caller-supplied functions.
class StubModel : public encoders::EmbeddingModel {
 public:
  using AudioFn = std::function<encoders::Embedding(const AudioClip&)>;
  using TextFn = std::function<encoders::Embedding(std::string_view)>;

  StubModel(AudioFn audio, TextFn text, double seconds = 10.0, int rate = 100)
      : audio_(std::move(audio)), text_(std::move(text)), seconds_(seconds), rate_(rate) {}

  encoders::Embedding embed_audio(const AudioClip& clip) const override {
    if (clip.samples.size() != input_samples()) throw AudioError("stub: wrong input length");
    return audio_(clip);
  }
  encoders::Embedding embed_text(std::string_view text) const override {
    if (text.empty()) throw std::invalid_argument("stub: empty text");
    return text_(text);
  }
  double input_seconds() const override { return seconds_; }
  int sample_rate() const override { return rate_; }

 private:
  AudioFn audio_;
  TextFn text_;
  double seconds_;
  int rate_;
};

/// Unit vector in the first two coordinates at angle `theta`.
inline encoders::Embedding planar(double theta) {
  std::vector<double> v(encoders::kEmbeddingDim, 0.0);
  v[0] = std::cos(theta);
  v[1] = std::sin(theta);
  return {v};
}

/// Clip of `seconds` whose samples are all `value`.
inline AudioClip constant_clip(double seconds, double value, int rate = 100) {
  AudioClip c;
  c.sample_rate = rate;
  c.samples.assign(static_cast<std::size_t>(seconds * rate + 0.5), value);
  return c;
}

}  // namespace tunetext::testing
