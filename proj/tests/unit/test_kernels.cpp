#include <doctest.h>

#include <cmath>
#include <vector>

#include "tunetext/kernels.hpp"
#include "tunetext/nn.hpp"

using namespace tunetext;

namespace {

std::vector<double> random_vec(nn::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = nn::normal(rng);
  return v;
}

bool close(double a, double b, double tol = 1e-12) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_CASE("scalar and avx2 dot agree for every length up to 67") {
  if (!kernels::isa_supported(kernels::Isa::kAvx2)) return;
  nn::Rng rng(1);
  for (std::size_t n = 0; n <= 67; ++n) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    const double s = kernels::scalar::dot(a.data(), b.data(), n);
    const double v = kernels::avx2::dot(a.data(), b.data(), n);
    CHECK(close(s, v));
  }
}

TEST_CASE("scalar and avx2 axpy agree") {
  if (!kernels::isa_supported(kernels::Isa::kAvx2)) return;
  nn::Rng rng(2);
  for (std::size_t n = 0; n <= 37; ++n) {
    auto x = random_vec(rng, n);
    auto y1 = random_vec(rng, n);
    auto y2 = y1;
    kernels::scalar::axpy(0.37, x.data(), y1.data(), n);
    kernels::avx2::axpy(0.37, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i]));
  }
}

TEST_CASE("dispatching kernels match naive loops under both variants") {
  nn::Rng rng(3);
  const std::size_t rows = 7, cols = 13;
  auto w = random_vec(rng, rows * cols);
  auto x = random_vec(rng, cols);
  auto xr = random_vec(rng, rows);
  const auto prev = kernels::active_isa();
  for (auto isa : {kernels::Isa::kScalar, kernels::Isa::kAvx2}) {
    kernels::set_active_isa(isa);
    std::vector<double> y(rows);
    kernels::matvec(w, rows, cols, x, y);
    for (std::size_t r = 0; r < rows; ++r) {
      double ref = 0;
      for (std::size_t c = 0; c < cols; ++c) ref += w[r * cols + c] * x[c];
      CHECK(close(y[r], ref));
    }
    std::vector<double> yt(cols, 1.0);
    kernels::matvec_transposed_acc(w, rows, cols, xr, yt);
    for (std::size_t c = 0; c < cols; ++c) {
      double ref = 1.0;
      for (std::size_t r = 0; r < rows; ++r) ref += w[r * cols + c] * xr[r];
      CHECK(close(yt[c], ref));
    }
    auto w2 = w;
    kernels::outer_acc(0.5, xr, x, w2);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        CHECK(close(w2[r * cols + c], w[r * cols + c] + 0.5 * xr[r] * x[c]));
      }
    }
  }
  kernels::set_active_isa(prev);
}

TEST_CASE("unsupported variant falls back to scalar") {
  const auto prev = kernels::active_isa();
  kernels::set_active_isa(kernels::Isa::kAvx2);
  if (kernels::isa_supported(kernels::Isa::kAvx2)) {
    CHECK(kernels::active_isa() == kernels::Isa::kAvx2);
  } else {
    CHECK(kernels::active_isa() == kernels::Isa::kScalar);
  }
  CHECK(kernels::isa_name(kernels::Isa::kScalar) == "scalar");
  kernels::set_active_isa(prev);
}
