#pragma once
// Inner-loop kernels for the coordinate-descent solver and scoring.
//
// Every kernel has a scalar reference implementation plus SIMD variants
// (AVX2+FMA on x86-64, NEON on AArch64). The variant is chosen once at
// startup from the CPU's capabilities and can be overridden for testing.
// SIMD variants reorder floating-point sums, so results agree with the
// scalar reference to rounding, not bit for bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace rankalign::kernels {

enum class Isa { scalar, avx2, neon };

// Shape of a squared piecewise-quadratic loss psi(r) in the residual r.
//   one_sided: psi(r) = max(0, r)^2                (squared hinge, r = 1 - y f)
//   two_sided: psi(r) = max(0, |r| - eps)^2        (squared / eps-insensitive)
// phi(r) = psi'(r) / 2 is the "excess" that drives the gradient.
enum class LossShape { one_sided, two_sided };

struct GradHess {
  double grad = 0.0;  // sum_p col[p] * phi(r[p])
  double hess = 0.0;  // sum_p col[p]^2 over samples where psi'' = 2
};

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  GradHess (*grad_hess)(LossShape shape, double eps, const double* col, const double* r,
                        std::size_t n);
  double (*loss_sum)(LossShape shape, double eps, const double* r, std::size_t n);
  // sum_p psi(r[p] - step * col[p]) - psi(r[p])
  double (*loss_delta)(LossShape shape, double eps, const double* col, const double* r,
                       double step, std::size_t n);
};

bool isa_supported(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

// Best supported ISA for this CPU.
Isa detect_isa() noexcept;

Isa active_isa() noexcept;
// Throws std::invalid_argument if the ISA is not available on this build/CPU.
void set_active_isa(Isa isa);

const KernelTable& table(Isa isa);
const KernelTable& active_table() noexcept;

// Convenience wrappers over the active table.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
GradHess grad_hess(LossShape shape, double eps, std::span<const double> col,
                   std::span<const double> r);
double loss_sum(LossShape shape, double eps, std::span<const double> r);
double loss_delta(LossShape shape, double eps, std::span<const double> col,
                  std::span<const double> r, double step);

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(RANKALIGN_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(RANKALIGN_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif
}  // namespace detail

}  // namespace rankalign::kernels
