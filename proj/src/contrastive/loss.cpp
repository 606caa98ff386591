#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tunetext/contrastive.hpp"

namespace tunetext::contrastive {

namespace {

void check(const SimilarityMatrix& s, const LossConfig& cfg) {
  if (s.rows != s.cols) throw std::invalid_argument("similarity matrix must be square");
  if (s.rows == 0) throw std::invalid_argument("similarity matrix is empty");
  if (s.values.size() != s.rows * s.cols) {
    throw std::invalid_argument("similarity matrix storage does not match its shape");
  }
  if (!(cfg.temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
}

// One direction: anchors along rows when `by_rows`, along columns otherwise.
// Adds grad_scale * dL/ds into `grad` and returns the mean anchor loss.
double directional(const SimilarityMatrix& s, double tau, bool by_rows,
                   double grad_scale, SimilarityMatrix* grad) {
  const std::size_t n = s.rows;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> logits(n);
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    double m = -INFINITY;
    for (std::size_t b = 0; b < n; ++b) {
      logits[b] = (by_rows ? s.at(a, b) : s.at(b, a)) / tau;
      m = std::max(m, logits[b]);
    }
    double z = 0.0;
    for (std::size_t b = 0; b < n; ++b) z += std::exp(logits[b] - m);
    const double lse = m + std::log(z);
    total += lse - logits[a];
    if (grad) {
      for (std::size_t b = 0; b < n; ++b) {
        const double p = std::exp(logits[b] - lse);
        const double g = grad_scale * inv_n * (p - (a == b ? 1.0 : 0.0)) / tau;
        if (by_rows) grad->at(a, b) += g;
        else grad->at(b, a) += g;
      }
    }
  }
  return total * inv_n;
}

}  // namespace

double nt_xent_loss(const SimilarityMatrix& s, const LossConfig& cfg) {
  check(s, cfg);
  if (cfg.direction == LossDirection::kAudioToText) {
    return directional(s, cfg.temperature, true, 1.0, nullptr);
  }
  return 0.5 * (directional(s, cfg.temperature, true, 1.0, nullptr) +
                directional(s, cfg.temperature, false, 1.0, nullptr));
}

LossAndGrad nt_xent_loss_and_grad(const SimilarityMatrix& s, const LossConfig& cfg) {
  check(s, cfg);
  LossAndGrad out;
  out.grad = SimilarityMatrix(s.rows, s.cols);
  if (cfg.direction == LossDirection::kAudioToText) {
    out.loss = directional(s, cfg.temperature, true, 1.0, &out.grad);
  } else {
    out.loss = 0.5 * (directional(s, cfg.temperature, true, 0.5, &out.grad) +
                      directional(s, cfg.temperature, false, 0.5, &out.grad));
  }
  return out;
}

}  // namespace tunetext::contrastive
