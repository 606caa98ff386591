#pragma once

// Finite-difference checks for the two-tower model and the loss.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tunetext/contrastive.hpp"
#include "tunetext/encoders.hpp"
#include "tunetext/nn.hpp"

namespace tunetext::testing {

/// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central difference with one Richardson step: error O(h^4) instead of
/// O(h^2), so a coarser h keeps cancellation noise well below tiny entries.
template <class F>
double richardson_derivative(F&& f, double h = 1e-3) {
  const double d1 = (f(h) - f(-h)) / (2 * h);
  const double d2 = (f(2 * h) - f(-2 * h)) / (4 * h);
  return (4 * d1 - d2) / 3;
}

/// Small tower configuration that keeps a full gradient check fast.
inline encoders::TowerConfig tiny_tower(encoders::TextEncoderKind text = encoders::TextEncoderKind::kBag) {
  encoders::TowerConfig c;
  c.features.sample_rate = 800;
  c.features.n_bands = 8;
  c.input_seconds = 0.5;
  c.frame_stride = 4;
  c.audio_dim = 6;
  c.text_dim = 5;
  c.oov_buckets = 3;
  c.text_encoder = text;
  return c;
}

struct TinyBatch {
  std::vector<encoders::FeatureSequence> audio;
  std::vector<std::vector<std::size_t>> texts;
};

inline TinyBatch tiny_batch(const encoders::TowerModel& model, std::size_t n, std::uint64_t seed) {
  nn::Rng rng(seed);
  TinyBatch b;
  const std::vector<std::string> words{"warm", "bright", "slow", "fast", "dark", "zzz"};
  for (std::size_t i = 0; i < n; ++i) {
    AudioClip c;
    c.sample_rate = model.sample_rate();
    c.samples.resize(model.input_samples());
    const double f = 40.0 + 60.0 * static_cast<double>(i);
    for (std::size_t t = 0; t < c.samples.size(); ++t) {
      c.samples[t] = std::sin(2 * 3.14159265358979 * f * static_cast<double>(t) / c.sample_rate) +
                     0.1 * nn::normal(rng);
    }
    b.audio.push_back(model.featurize(c));
    std::string text;
    const std::size_t len = 1 + nn::uniform_index(rng, 3);
    for (std::size_t k = 0; k < len; ++k) {
      if (k) text += " ";
      text += words[nn::uniform_index(rng, words.size())];
    }
    b.texts.push_back(model.token_ids(text));
  }
  return b;
}

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t kinks = 0;  // skipped: a ReLU kink lies inside the stencil
  double worst = 0.0;
  std::string worst_tensor;
};

/// Moves every parameter off its initial value so that no pre-activation
/// sits exactly on a ReLU kink (zero-initialised biases otherwise do).
inline void jitter_parameters(encoders::TowerModel& model, double scale, std::uint64_t seed) {
  nn::Rng rng(seed);
  for (auto* p : model.parameters()) {
    for (auto& v : p->value) v += scale * nn::normal(rng);
  }
}

/// Compares every parameter gradient entry (or `per_tensor` random entries
/// of tensors larger than that, when non-zero) with Richardson-extrapolated
/// central differences of the batch loss. When the estimates at h and h/2
/// disagree the stencil straddles a kink and h/4 is used instead; entries
/// still off after that are counted in `kinks`, not scored.
inline GradCheckResult check_tower_gradients(encoders::TowerModel& model, const TinyBatch& batch,
                                             const contrastive::LossConfig& cfg,
                                             std::size_t per_tensor, std::uint64_t seed,
                                             double h = 1e-4) {
  contrastive::batch_loss_and_gradients(model, batch.audio, batch.texts, cfg);
  std::vector<std::vector<double>> analytic;
  for (auto* p : model.parameters()) analytic.push_back(p->grad);

  nn::Rng rng(seed);
  GradCheckResult res;
  auto params = model.parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto* p = params[t];
    std::vector<std::size_t> idx;
    if (per_tensor == 0 || per_tensor >= p->size()) {
      for (std::size_t i = 0; i < p->size(); ++i) idx.push_back(i);
    } else {
      for (std::size_t k = 0; k < per_tensor; ++k) idx.push_back(nn::uniform_index(rng, p->size()));
    }
    for (std::size_t i : idx) {
      const double orig = p->value[i];
      auto loss_at = [&](double d) {
        p->value[i] = orig + d;
        const double l = contrastive::batch_loss_and_gradients(model, batch.audio, batch.texts, cfg);
        p->value[i] = orig;
        return l;
      };
      const double coarse = richardson_derivative(loss_at, h);
      double err = relative_error(analytic[t][i], coarse);
      if (err >= 1e-4) {
        // A smooth loss gives the same estimate at h and h/2 to ~1e-8; a
        // larger gap means a kink inside the stencil, so shrink it further.
        const double half = richardson_derivative(loss_at, h / 2);
        if (relative_error(coarse, half) > 1e-5) {
          err = relative_error(analytic[t][i], richardson_derivative(loss_at, h / 4));
          if (err >= 1e-4) {
            ++res.kinks;
            continue;
          }
        }
      }
      ++res.checked;
      if (err > res.worst) {
        res.worst = err;
        res.worst_tensor = p->name;
      }
    }
  }
  return res;
}

}  // namespace tunetext::testing
