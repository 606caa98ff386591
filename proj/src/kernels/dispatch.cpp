#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

#include "tunetext/kernels.hpp"

namespace tunetext::kernels {

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t);
using AxpyFn = void (*)(double, const double*, double*, std::size_t);

struct Table {
  Isa isa;
  DotFn dot;
  AxpyFn axpy;
};

constexpr Table kScalarTable{Isa::kScalar, &scalar::dot, &scalar::axpy};
constexpr Table kAvx2Table{Isa::kAvx2, &avx2::dot, &avx2::axpy};

const Table* pick_initial() {
  if (const char* env = std::getenv("TUNETEXT_KERNELS")) {
    if (std::string(env) == "scalar") return &kScalarTable;
  }
  return isa_supported(Isa::kAvx2) ? &kAvx2Table : &kScalarTable;
}

std::atomic<const Table*>& table() {
  static std::atomic<const Table*> t{pick_initial()};
  return t;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  if (isa == Isa::kScalar) return true;
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return table().load()->isa; }

void set_active_isa(Isa isa) {
  if (isa == Isa::kAvx2 && isa_supported(Isa::kAvx2)) {
    table().store(&kAvx2Table);
  } else {
    table().store(&kScalarTable);
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return table().load(std::memory_order_relaxed)->dot(a.data(), b.data(),
                                                      a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  table().load(std::memory_order_relaxed)->axpy(alpha, x.data(), y.data(),
                                                x.size());
}

void matvec(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  assert(w.size() == rows * cols && x.size() == cols && y.size() == rows);
  const DotFn fn = table().load(std::memory_order_relaxed)->dot;
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = fn(w.data() + r * cols, x.data(), cols);
  }
}

void matvec_transposed_acc(std::span<const double> w, std::size_t rows,
                           std::size_t cols, std::span<const double> x,
                           std::span<double> y) {
  assert(w.size() == rows * cols && x.size() == rows && y.size() == cols);
  const AxpyFn fn = table().load(std::memory_order_relaxed)->axpy;
  for (std::size_t r = 0; r < rows; ++r) {
    if (x[r] != 0.0) fn(x[r], w.data() + r * cols, y.data(), cols);
  }
}

void outer_acc(double alpha, std::span<const double> x,
               std::span<const double> y, std::span<double> w) {
  assert(w.size() == x.size() * y.size());
  const AxpyFn fn = table().load(std::memory_order_relaxed)->axpy;
  const std::size_t cols = y.size();
  for (std::size_t r = 0; r < x.size(); ++r) {
    const double a = alpha * x[r];
    if (a != 0.0) fn(a, y.data(), w.data() + r * cols, cols);
  }
}

}  // namespace tunetext::kernels
