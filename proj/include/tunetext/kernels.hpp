#pragma once

// Dense inner-loop kernels used by the towers, the tagger and the mel
// filterbank. Every kernel has a scalar reference implementation and, on
// x86-64, an AVX2+FMA variant. The variant is chosen once at startup from
// CPUID; TUNETEXT_KERNELS=scalar forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace tunetext::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

/// True when the running CPU can execute the given variant.
bool isa_supported(Isa isa);

/// Variant used by the dispatching entry points below.
Isa active_isa();

/// Overrides the dispatch choice (tests and benchmarks). Falls back to
/// scalar when the requested variant is not supported.
void set_active_isa(Isa isa);

// Dispatching entry points.

double dot(std::span<const double> a, std::span<const double> b);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// y = W x, W row-major rows x cols.
void matvec(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);

// y += W^T x, W row-major rows x cols, x has `rows` entries.
void matvec_transposed_acc(std::span<const double> w, std::size_t rows,
                           std::size_t cols, std::span<const double> x,
                           std::span<double> y);

// W += alpha * x y^T (rank-one update), W row-major |x| x |y|.
void outer_acc(double alpha, std::span<const double> x,
               std::span<const double> y, std::span<double> w);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

}  // namespace tunetext::kernels
