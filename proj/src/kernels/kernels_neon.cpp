// AArch64 NEON kernels (two doubles per lane group). NEON is part of the
// AArch64 baseline, so no runtime check is needed beyond the build gate.

#include <arm_neon.h>

#include "rankalign/kernels.hpp"
#include "loss_shape.hpp"

namespace rankalign::kernels {
namespace {

inline float64x2_t excess2(LossShape shape, float64x2_t eps, float64x2_t r,
                           uint64x2_t* curved_mask) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  if (shape == LossShape::one_sided) {
    *curved_mask = vcgtq_f64(r, zero);
    return vmaxq_f64(r, zero);
  }
  const float64x2_t abs_r = vabsq_f64(r);
  *curved_mask = vcgeq_f64(abs_r, eps);
  const float64x2_t ex = vmaxq_f64(vsubq_f64(abs_r, eps), zero);
  const uint64x2_t sign = vandq_u64(vreinterpretq_u64_f64(r), vdupq_n_u64(0x8000000000000000ULL));
  return vreinterpretq_f64_u64(vorrq_u64(vreinterpretq_u64_f64(ex), sign));
}

inline float64x2_t masked(uint64x2_t mask, float64x2_t v) {
  return vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(v)));
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

GradHess grad_hess_neon(LossShape shape, double eps, const double* col, const double* r,
                        std::size_t n) {
  const float64x2_t veps = vdupq_n_f64(eps);
  float64x2_t g = vdupq_n_f64(0.0);
  float64x2_t h = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t mask;
    const float64x2_t c = vld1q_f64(col + i);
    const float64x2_t e = excess2(shape, veps, vld1q_f64(r + i), &mask);
    g = vfmaq_f64(g, c, e);
    h = vaddq_f64(h, masked(mask, vmulq_f64(c, c)));
  }
  GradHess out{vaddvq_f64(g), vaddvq_f64(h)};
  for (; i < n; ++i) {
    out.grad += col[i] * excess(shape, eps, r[i]);
    if (curved(shape, eps, r[i])) out.hess += col[i] * col[i];
  }
  return out;
}

double loss_sum_neon(LossShape shape, double eps, const double* r, std::size_t n) {
  const float64x2_t veps = vdupq_n_f64(eps);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t mask;
    const float64x2_t e = excess2(shape, veps, vld1q_f64(r + i), &mask);
    acc = vfmaq_f64(acc, e, e);
  }
  double out = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double e = excess(shape, eps, r[i]);
    out += e * e;
  }
  return out;
}

double loss_delta_neon(LossShape shape, double eps, const double* col, const double* r,
                       double step, std::size_t n) {
  const float64x2_t veps = vdupq_n_f64(eps);
  const float64x2_t vstep = vdupq_n_f64(step);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t mask;
    const float64x2_t rv = vld1q_f64(r + i);
    const float64x2_t before = excess2(shape, veps, rv, &mask);
    const float64x2_t moved = vsubq_f64(rv, vmulq_f64(vstep, vld1q_f64(col + i)));
    const float64x2_t after = excess2(shape, veps, moved, &mask);
    acc = vfmaq_f64(acc, vsubq_f64(after, before), vaddq_f64(after, before));
  }
  double out = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double before = excess(shape, eps, r[i]);
    const double after = excess(shape, eps, r[i] - step * col[i]);
    out += (after - before) * (after + before);
  }
  return out;
}

}  // namespace

namespace detail {
const KernelTable& neon_table() noexcept {
  static const KernelTable table{dot_neon, axpy_neon, grad_hess_neon, loss_sum_neon,
                                 loss_delta_neon};
  return table;
}
}  // namespace detail

}  // namespace rankalign::kernels
