#include <atomic>

#include "caged/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace caged::simd {
namespace {

constexpr KernelTable kScalar{Isa::kScalar, "scalar", &scalar::dot, &scalar::axpy, &scalar::scale,
                              &scalar::squared_distance};

#if defined(CAGED_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::kAvx2, "avx2", &avx2::dot, &avx2::axpy, &avx2::scale, &avx2::squared_distance};

bool cpu_has_avx2() {
#if defined(__GNUC__) || defined(__clang__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
#endif

const KernelTable* best() {
  const KernelTable* v = avx2_kernels();
  return v != nullptr ? v : &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{best()};
  return table;
}

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

const KernelTable* avx2_kernels() {
#if defined(CAGED_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) {
  const KernelTable* t = isa == Isa::kScalar ? &kScalar : avx2_kernels();
  if (t == nullptr) return false;
  current().store(t, std::memory_order_relaxed);
  return true;
}

void select_best() { current().store(best(), std::memory_order_relaxed); }

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::kScalar;
  if (name == "avx2") return Isa::kAvx2;
  return std::nullopt;
}

}  // namespace caged::simd
