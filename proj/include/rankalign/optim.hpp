#pragma once
// L1-regularized linear models fitted by coordinate descent.
//
// Minimizes   ||w||_1 + c * sum_p loss(y_p, w.x_p + b)
// with one of three squared piecewise-quadratic losses:
//   squared_hinge       max(0, 1 - y f)^2          y in {-1, +1}
//   squared             (y - f)^2
//   epsilon_insensitive max(0, |y - f| - eps)^2
//
// An epoch forms the exact local quadratic model of the data term (gradient
// and generalized Hessian at the current residuals) and minimizes it plus the
// L1 term by cyclic soft-thresholded coordinate Newton steps. An Armijo line
// search on the true objective accepts the step; if it cannot, one plain
// coordinate epoch with per-coordinate line search runs instead. Coordinates
// that land on zero are exactly zero. The intercept is unpenalized.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rankalign/matrix.hpp"

namespace rankalign {

enum class Loss { squared_hinge, squared, epsilon_insensitive };

std::string_view loss_name(Loss loss) noexcept;

struct SolverConfig {
  double c = 1.0;
  Loss loss = Loss::squared_hinge;
  double epsilon = 1.0;  // tube half-width, epsilon_insensitive only
  bool fit_intercept = false;
  double tol = 1e-6;
  int max_epochs = 10000;
  std::uint64_t seed = 0;  // coordinate order

  // Throws std::invalid_argument on c <= 0, tol <= 0, max_epochs < 1, eps < 0.
  void validate() const;
};

struct FitResult {
  std::vector<double> weights;
  double intercept = 0.0;
  int epochs_run = 0;
  double objective = 0.0;
  bool converged = false;
  double kkt_residual = 0.0;
};

// Starting point for warm starts along a regularization path.
struct WarmStart {
  std::vector<double> weights;
  double intercept = 0.0;
};

// Called after every epoch with the current iterate; the objective never
// increases between calls.
using EpochObserver = std::function<void(int epoch, std::span<const double> weights, double intercept)>;

// X is P x m. For squared_hinge, y must be +-1. Throws DataError on
// non-finite input, bad labels, or shape mismatch.
FitResult fit_l1_linear(const Matrix& X, std::span<const double> y, const SolverConfig& cfg,
                        const WarmStart* warm = nullptr, const EpochObserver& observer = {});

// ||w||_1 + c * sum loss.
double objective(const Matrix& X, std::span<const double> y, std::span<const double> w,
                 double intercept, const SolverConfig& cfg);

// Partial derivatives of the data-fit term c * sum loss. Entries 0..m-1 are
// the weights; entry m is the intercept.
std::vector<double> data_gradient(const Matrix& X, std::span<const double> y,
                                  std::span<const double> w, double intercept,
                                  const SolverConfig& cfg);

// Largest violation of the L1 optimality conditions:
//   w_j == 0:  max(0, |g_j| - 1);   w_j != 0:  |g_j + sign(w_j)|
// plus |g_b| for the intercept when cfg.fit_intercept is set.
double kkt_residual(const Matrix& X, std::span<const double> y, std::span<const double> w,
                    double intercept, const SolverConfig& cfg);

// Soft-threshold operator S(z, t) = sign(z) max(|z| - t, 0).
double soft_threshold(double z, double t) noexcept;

}  // namespace rankalign
