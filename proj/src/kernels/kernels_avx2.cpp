// AVX2 + FMA kernels. Compiled with -mavx2 -mfma; only reached through the
// dispatcher after a CPUID check.

#include <immintrin.h>

#include "rankalign/kernels.hpp"
#include "loss_shape.hpp"

namespace rankalign::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Signed excess and curvature mask for four residuals.
inline __m256d excess4(LossShape shape, __m256d eps, __m256d r, __m256d* curved_mask) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  if (shape == LossShape::one_sided) {
    *curved_mask = _mm256_cmp_pd(r, zero, _CMP_GT_OQ);
    return _mm256_max_pd(r, zero);
  }
  const __m256d abs_r = _mm256_andnot_pd(sign_mask, r);
  *curved_mask = _mm256_cmp_pd(abs_r, eps, _CMP_GE_OQ);
  const __m256d ex = _mm256_max_pd(_mm256_sub_pd(abs_r, eps), zero);
  return _mm256_or_pd(ex, _mm256_and_pd(r, sign_mask));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

GradHess grad_hess_avx2(LossShape shape, double eps, const double* col, const double* r,
                        std::size_t n) {
  const __m256d veps = _mm256_set1_pd(eps);
  __m256d g = _mm256_setzero_pd();
  __m256d h = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask;
    const __m256d c = _mm256_loadu_pd(col + i);
    const __m256d e = excess4(shape, veps, _mm256_loadu_pd(r + i), &mask);
    g = _mm256_fmadd_pd(c, e, g);
    h = _mm256_add_pd(h, _mm256_and_pd(mask, _mm256_mul_pd(c, c)));
  }
  GradHess out{hsum(g), hsum(h)};
  for (; i < n; ++i) {
    out.grad += col[i] * excess(shape, eps, r[i]);
    if (curved(shape, eps, r[i])) out.hess += col[i] * col[i];
  }
  return out;
}

double loss_sum_avx2(LossShape shape, double eps, const double* r, std::size_t n) {
  const __m256d veps = _mm256_set1_pd(eps);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask;
    const __m256d e = excess4(shape, veps, _mm256_loadu_pd(r + i), &mask);
    acc = _mm256_fmadd_pd(e, e, acc);
  }
  double out = hsum(acc);
  for (; i < n; ++i) {
    const double e = excess(shape, eps, r[i]);
    out += e * e;
  }
  return out;
}

double loss_delta_avx2(LossShape shape, double eps, const double* col, const double* r,
                       double step, std::size_t n) {
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vstep = _mm256_set1_pd(step);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask;
    const __m256d rv = _mm256_loadu_pd(r + i);
    const __m256d before = excess4(shape, veps, rv, &mask);
    const __m256d moved = _mm256_sub_pd(rv, _mm256_mul_pd(vstep, _mm256_loadu_pd(col + i)));
    const __m256d after = excess4(shape, veps, moved, &mask);
    acc = _mm256_fmadd_pd(_mm256_sub_pd(after, before), _mm256_add_pd(after, before), acc);
  }
  double out = hsum(acc);
  for (; i < n; ++i) {
    const double before = excess(shape, eps, r[i]);
    const double after = excess(shape, eps, r[i] - step * col[i]);
    out += (after - before) * (after + before);
  }
  return out;
}

}  // namespace

namespace detail {
const KernelTable& avx2_table() noexcept {
  static const KernelTable table{dot_avx2, axpy_avx2, grad_hess_avx2, loss_sum_avx2,
                                 loss_delta_avx2};
  return table;
}
}  // namespace detail

}  // namespace rankalign::kernels
