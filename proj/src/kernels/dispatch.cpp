#include <atomic>
#include <stdexcept>
#include <string>

#include "rankalign/kernels.hpp"

namespace rankalign::kernels {
namespace {

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{detect_isa()};
  return slot;
}

}  // namespace

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(RANKALIGN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(RANKALIGN_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

Isa detect_isa() noexcept {
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  if (isa_supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

Isa active_isa() noexcept { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel ISA not supported here: " + std::string(isa_name(isa)));
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

const KernelTable& table(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel ISA not supported here: " + std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(RANKALIGN_HAVE_AVX2)
    case Isa::avx2:
      return detail::avx2_table();
#endif
#if defined(RANKALIGN_HAVE_NEON)
    case Isa::neon:
      return detail::neon_table();
#endif
    default:
      return detail::scalar_table();
  }
}

const KernelTable& active_table() noexcept {
  switch (active_isa()) {
#if defined(RANKALIGN_HAVE_AVX2)
    case Isa::avx2:
      return detail::avx2_table();
#endif
#if defined(RANKALIGN_HAVE_NEON)
    case Isa::neon:
      return detail::neon_table();
#endif
    default:
      return detail::scalar_table();
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  return active_table().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_table().axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

GradHess grad_hess(LossShape shape, double eps, std::span<const double> col,
                   std::span<const double> r) {
  return active_table().grad_hess(shape, eps, col.data(), r.data(),
                                  col.size() < r.size() ? col.size() : r.size());
}

double loss_sum(LossShape shape, double eps, std::span<const double> r) {
  return active_table().loss_sum(shape, eps, r.data(), r.size());
}

double loss_delta(LossShape shape, double eps, std::span<const double> col,
                  std::span<const double> r, double step) {
  return active_table().loss_delta(shape, eps, col.data(), r.data(), step,
                                   col.size() < r.size() ? col.size() : r.size());
}

}  // namespace rankalign::kernels
