#pragma once

#include <cmath>

#include "rankalign/kernels.hpp"

namespace rankalign::kernels {
// Internal linkage: this header is compiled under different -m flags per
// variant and must not be merged across translation units.
namespace {

// Signed excess phi(r): the part of the residual outside the flat region.
inline double excess(LossShape shape, double eps, double r) {
  if (shape == LossShape::one_sided) return r > 0.0 ? r : 0.0;
  if (r > eps) return r - eps;
  if (r < -eps) return r + eps;
  return 0.0;
}

// Whether psi has curvature 2 at r (generalized Hessian). For the two-sided
// shape with eps = 0 this is every sample, matching plain squared loss.
inline bool curved(LossShape shape, double eps, double r) {
  if (shape == LossShape::one_sided) return r > 0.0;
  return std::fabs(r) >= eps;
}

}  // namespace
}  // namespace rankalign::kernels
