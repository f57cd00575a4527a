// Scalar reference kernels. These define the semantics the SIMD variants
// are tested against.

#include <cmath>

#include "rankalign/kernels.hpp"
#include "loss_shape.hpp"

namespace rankalign::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

GradHess grad_hess_scalar(LossShape shape, double eps, const double* col, const double* r,
                          std::size_t n) {
  GradHess out;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = excess(shape, eps, r[i]);
    out.grad += col[i] * e;
    if (curved(shape, eps, r[i])) out.hess += col[i] * col[i];
  }
  return out;
}

double loss_sum_scalar(LossShape shape, double eps, const double* r, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = excess(shape, eps, r[i]);
    acc += e * e;
  }
  return acc;
}

double loss_delta_scalar(LossShape shape, double eps, const double* col, const double* r,
                         double step, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double before = excess(shape, eps, r[i]);
    const double after = excess(shape, eps, r[i] - step * col[i]);
    acc += (after - before) * (after + before);
  }
  return acc;
}

}  // namespace

namespace detail {
const KernelTable& scalar_table() noexcept {
  static const KernelTable table{dot_scalar, axpy_scalar, grad_hess_scalar, loss_sum_scalar,
                                 loss_delta_scalar};
  return table;
}
}  // namespace detail

}  // namespace rankalign::kernels
