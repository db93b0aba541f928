#pragma once

// Dense inner-loop kernels. Every kernel has a scalar reference version and,
// when the build and the CPU allow, an AVX2/FMA version. The active table is
// chosen once at startup and may be overridden (tests, --isa flag).

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace caged::simd {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  Isa isa;
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] = alpha * x[i]
  void (*scale)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

const KernelTable& active();
// Returns false (and leaves the selection unchanged) if `isa` is unavailable.
bool select(Isa isa);
void select_best();
std::optional<Isa> parse_isa(std::string_view name);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(double alpha, std::span<const double> x, std::span<double> y) {
  active().scale(alpha, x.data(), y.data(), x.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace caged::simd
