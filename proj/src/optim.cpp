#include "rankalign/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "rankalign/error.hpp"
#include "rankalign/kernels.hpp"

namespace rankalign {
namespace {

using kernels::LossShape;

constexpr double kArmijo = 0.01;
constexpr int kMaxLineSearch = 30;
constexpr int kMaxInnerSweeps = 1000;
constexpr double kInnerForcing = 0.1;
constexpr double kRidge = 1e-12;

LossShape shape_of(Loss loss) {
  return loss == Loss::squared_hinge ? LossShape::one_sided : LossShape::two_sided;
}

double eps_of(const SolverConfig& cfg) {
  return cfg.loss == Loss::epsilon_insensitive ? cfg.epsilon : 0.0;
}

void check_problem(const Matrix& X, std::span<const double> y, const SolverConfig& cfg) {
  cfg.validate();
  if (X.rows() != y.size()) {
    throw DataError("fit_l1_linear: X has " + std::to_string(X.rows()) + " rows but y has " +
                    std::to_string(y.size()));
  }
  for (double v : X.values()) {
    if (!std::isfinite(v)) throw DataError("fit_l1_linear: non-finite value in X");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("fit_l1_linear: non-finite value in y");
    if (cfg.loss == Loss::squared_hinge && v != 1.0 && v != -1.0) {
      throw DataError("fit_l1_linear: squared_hinge needs labels in {-1,+1}");
    }
  }
}

void check_shapes(const Matrix& X, std::span<const double> y, std::span<const double> w) {
  if (X.rows() != y.size() || X.cols() != w.size()) {
    throw DataError("shape mismatch: X is " + std::to_string(X.rows()) + "x" +
                    std::to_string(X.cols()) + ", y has " + std::to_string(y.size()) +
                    ", w has " + std::to_string(w.size()));
  }
}

// Residual in the loss's own coordinate: 1 - y f for hinge, y - f otherwise.
double residual(Loss loss, double y, double f) {
  return loss == Loss::squared_hinge ? 1.0 - y * f : y - f;
}

double signed_excess(Loss loss, double eps, double r) {
  if (loss == Loss::squared_hinge) return r > 0.0 ? r : 0.0;
  if (r > eps) return r - eps;
  if (r < -eps) return r + eps;
  return 0.0;
}

// Whether psi has curvature 2 at r (generalized Hessian). With eps = 0 the
// two-sided loss is plain squared loss and every sample is curved.
bool curved(Loss loss, double eps, double r) {
  if (loss == Loss::squared_hinge) return r > 0.0;
  return std::fabs(r) >= eps;
}

// Column-major working copy of the problem. For the hinge loss each column
// is pre-multiplied by y so that r = 1 - y f moves by -d * col.
class Workspace {
 public:
  Workspace(const Matrix& X, std::span<const double> y, const SolverConfig& cfg)
      : rows_(X.rows()), cols_(X.cols()), loss_(cfg.loss), y_(y.begin(), y.end()),
        data_((X.cols() + 1) * X.rows()), col_sq_(X.cols() + 1), r_(X.rows()) {
    const bool fold = cfg.loss == Loss::squared_hinge;
    for (std::size_t j = 0; j < cols_; ++j) {
      double* col = data_.data() + j * rows_;
      for (std::size_t p = 0; p < rows_; ++p) col[p] = fold ? y[p] * X(p, j) : X(p, j);
    }
    double* icol = data_.data() + cols_ * rows_;
    for (std::size_t p = 0; p < rows_; ++p) icol[p] = fold ? y[p] : 1.0;
    for (std::size_t j = 0; j <= cols_; ++j) {
      const auto c = column(j);
      col_sq_[j] = std::inner_product(c.begin(), c.end(), c.begin(), 0.0);
    }
  }

  // Column j < m is a weight; column m is the intercept.
  std::span<const double> column(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
  double col_sq(std::size_t j) const { return col_sq_[j]; }
  std::span<double> residuals() { return r_; }
  std::span<const double> residuals() const { return r_; }

  void refresh(std::span<const double> w, double b) {
    for (std::size_t p = 0; p < rows_; ++p) r_[p] = loss_ == Loss::squared_hinge ? 1.0 : y_[p];
    // The folded columns give r = base - sum_j w_j col_j for both residual kinds.
    for (std::size_t j = 0; j < cols_; ++j) {
      if (w[j] != 0.0) kernels::axpy(-w[j], column(j), r_);
    }
    if (b != 0.0) kernels::axpy(-b, column(cols_), r_);
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  Loss loss_;
  std::vector<double> y_;
  std::vector<double> data_;
  std::vector<double> col_sq_;
  std::vector<double> r_;
};

class CoordinateDescent {
 public:
  CoordinateDescent(Workspace& ws, const SolverConfig& cfg)
      : ws_(ws), c_(cfg.c), shape_(shape_of(cfg.loss)), eps_(eps_of(cfg)) {}

  static double violation(double g, double value, bool penalized) {
    if (!penalized) return std::fabs(g);
    if (value == 0.0) return std::max(0.0, std::fabs(g) - 1.0);
    return std::fabs(g + (value > 0.0 ? 1.0 : -1.0));
  }

  // One Newton/soft-threshold step on coordinate j with line search.
  void update(std::size_t j, double& value, bool penalized) {
    const auto col = ws_.column(j);
    const auto gh = kernels::grad_hess(shape_, eps_, col, ws_.residuals());
    const double g = -2.0 * c_ * gh.grad;
    const double h_max = 2.0 * c_ * ws_.col_sq(j);
    if (h_max <= 0.0) {
      // Column of zeros: the data term ignores this coordinate.
      if (penalized) value = 0.0;
      return;
    }
    const double h = std::max(2.0 * c_ * gh.hess, 1e-12 * h_max);

    double d;
    if (penalized) {
      if (g + 1.0 <= h * value) {
        d = -(g + 1.0) / h;
      } else if (g - 1.0 >= h * value) {
        d = -(g - 1.0) / h;
      } else {
        d = -value;
      }
    } else {
      d = -g / h;
    }
    if (d == 0.0 || !std::isfinite(d)) return;

    auto l1_change = [&](double step) {
      return penalized ? std::fabs(value + step) - std::fabs(value) : 0.0;
    };
    const double predicted = l1_change(d) + g * d;
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < kMaxLineSearch; ++ls) {
      const double l1 = l1_change(d);
      // Quadratic majorizer of the data term: psi'' <= 2 everywhere.
      const double bound = l1 + g * d + 0.5 * h_max * d * d;
      if (bound <= kArmijo * alpha * predicted) {
        accepted = true;
        break;
      }
      const double actual = l1 + c_ * kernels::loss_delta(shape_, eps_, col, ws_.residuals(), d);
      if (actual <= kArmijo * alpha * predicted) {
        accepted = true;
        break;
      }
      d *= 0.5;
      alpha *= 0.5;
    }
    if (!accepted) {
      // Proximal step on the majorizer always decreases the objective.
      const double target =
          penalized ? soft_threshold(value - g / h_max, 1.0 / h_max) : value - g / h_max;
      d = target - value;
      if (d == 0.0) return;
    }
    kernels::axpy(-d, col, ws_.residuals());
    value += d;
  }

 private:

  Workspace& ws_;
  double c_;
  LossShape shape_;
  double eps_;
};

}  // namespace

std::string_view loss_name(Loss loss) noexcept {
  switch (loss) {
    case Loss::squared_hinge:
      return "squared_hinge";
    case Loss::squared:
      return "squared";
    case Loss::epsilon_insensitive:
      return "epsilon_insensitive";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("SolverConfig: c must be > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be > 0");
  if (max_epochs < 1) throw std::invalid_argument("SolverConfig: max_epochs must be >= 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("SolverConfig: epsilon must be >= 0");
}

double soft_threshold(double z, double t) noexcept {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double objective(const Matrix& X, std::span<const double> y, std::span<const double> w,
                 double intercept, const SolverConfig& cfg) {
  check_shapes(X, y, w);
  const double eps = eps_of(cfg);
  double l1 = 0.0;
  for (double v : w) l1 += std::fabs(v);
  double loss = 0.0;
  for (std::size_t p = 0; p < X.rows(); ++p) {
    const auto x = X.row(p);
    double f = intercept;
    for (std::size_t j = 0; j < x.size(); ++j) f += w[j] * x[j];
    const double e = signed_excess(cfg.loss, eps, residual(cfg.loss, y[p], f));
    loss += e * e;
  }
  return l1 + cfg.c * loss;
}

std::vector<double> data_gradient(const Matrix& X, std::span<const double> y,
                                  std::span<const double> w, double intercept,
                                  const SolverConfig& cfg) {
  check_shapes(X, y, w);
  const double eps = eps_of(cfg);
  const std::size_t m = X.cols();
  std::vector<double> grad(m + 1, 0.0);
  for (std::size_t p = 0; p < X.rows(); ++p) {
    const auto x = X.row(p);
    double f = intercept;
    for (std::size_t j = 0; j < m; ++j) f += w[j] * x[j];
    const double e = signed_excess(cfg.loss, eps, residual(cfg.loss, y[p], f));
    // d psi / d f; the residual moves as -y (hinge) or -1 (regression) per unit f.
    const double dpsi_df = cfg.loss == Loss::squared_hinge ? -2.0 * e * y[p] : -2.0 * e;
    for (std::size_t j = 0; j < m; ++j) grad[j] += dpsi_df * x[j];
    grad[m] += dpsi_df;
  }
  for (double& g : grad) g *= cfg.c;
  return grad;
}

double kkt_residual(const Matrix& X, std::span<const double> y, std::span<const double> w,
                    double intercept, const SolverConfig& cfg) {
  const auto grad = data_gradient(X, y, w, intercept, cfg);
  double worst = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double v = w[j] == 0.0 ? std::max(0.0, std::fabs(grad[j]) - 1.0)
                                 : std::fabs(grad[j] + (w[j] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  if (cfg.fit_intercept) worst = std::max(worst, std::fabs(grad[w.size()]));
  return worst;
}

FitResult fit_l1_linear(const Matrix& X, std::span<const double> y, const SolverConfig& cfg,
                        const WarmStart* warm, const EpochObserver& observer) {
  check_problem(X, y, cfg);
  if (X.rows() == 0) throw DataError("fit_l1_linear: need at least one sample");
  const std::size_t m = X.cols();
  const std::size_t P = X.rows();

  FitResult result;
  result.weights.assign(m, 0.0);
  if (warm) {
    if (warm->weights.size() != m) throw DataError("fit_l1_linear: warm start has wrong size");
    result.weights = warm->weights;
    if (cfg.fit_intercept) result.intercept = warm->intercept;
  }

  Workspace ws(X, y, cfg);
  CoordinateDescent cd(ws, cfg);
  const std::size_t total = cfg.fit_intercept ? m + 1 : m;
  // Coordinate m stands for the intercept; only coordinates < m are penalized.
  std::vector<double> x(total);
  std::copy(result.weights.begin(), result.weights.end(), x.begin());
  if (cfg.fit_intercept) x[m] = result.intercept;
  auto sync = [&] {
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m), result.weights.begin());
    if (cfg.fit_intercept) result.intercept = x[m];
  };
  auto write_back = [&] {
    sync();
    ws.refresh(result.weights, result.intercept);
  };

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);

  std::vector<std::size_t> active_rows;
  std::vector<double> excess_active;
  std::vector<double> compact;  // column-major, total x |active|
  std::vector<double> grad(total), hess(total * total), target(total), model_grad(total);
  std::vector<double> direction(P);

  ws.refresh(result.weights, result.intercept);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    // Exact local model: gradient and generalized Hessian of the data term
    // from freshly recomputed residuals. Inactive rows contribute to neither.
    const auto r = ws.residuals();
    active_rows.clear();
    excess_active.clear();
    for (std::size_t p = 0; p < P; ++p) {
      if (curved(cfg.loss, eps_of(cfg), r[p])) {
        active_rows.push_back(p);
        excess_active.push_back(signed_excess(cfg.loss, eps_of(cfg), r[p]));
      }
    }
    const std::size_t A = active_rows.size();
    compact.resize(total * A);
    for (std::size_t j = 0; j < total; ++j) {
      const auto col = ws.column(j);
      double* dst = compact.data() + j * A;
      for (std::size_t k = 0; k < A; ++k) dst[k] = col[active_rows[k]];
    }
    auto compact_col = [&](std::size_t j) {
      return std::span<const double>(compact.data() + j * A, A);
    };
    double kkt = 0.0;
    for (std::size_t j = 0; j < total; ++j) {
      grad[j] = -2.0 * cfg.c * kernels::dot(compact_col(j), excess_active);
      kkt = std::max(kkt, CoordinateDescent::violation(grad[j], x[j], j < m));
    }
    // At least one step is always taken: at tiny c an unpenalized intercept
    // can sit far from its optimum with a gradient already below tol.
    if (kkt <= cfg.tol && epoch > 1) break;
    result.epochs_run = epoch;

    for (std::size_t j = 0; j < total; ++j) {
      for (std::size_t k = j; k < total; ++k) {
        const double h = 2.0 * cfg.c * kernels::dot(compact_col(j), compact_col(k));
        hess[j * total + k] = h;
        hess[k * total + j] = h;
      }
      // A vanishing diagonal would make the model unbounded along j; an all-zero
      // column gets the smallest positive curvature, which zeroes its weight.
      double& diag = hess[j * total + j];
      diag += kRidge * 2.0 * cfg.c * ws.col_sq(j);
      if (!(diag > 0.0)) diag = std::numeric_limits<double>::min();
    }

    // Inner cyclic coordinate descent on the local model
    //   g.d + d'Hd/2 + sum_{j<m} |x_j + d_j|,
    // tracked through target = x + d so that zeroed coordinates are exact.
    target = x;
    model_grad = grad;
    const double inner_tol = std::max(kInnerForcing * kkt, 0.1 * cfg.tol);
    for (int sweep = 0; sweep < kMaxInnerSweeps; ++sweep) {
      std::shuffle(order.begin(), order.end(), rng);
      double worst = 0.0;
      for (std::size_t j : order) {
        const double h = hess[j * total + j];
        const double g = model_grad[j];
        worst = std::max(worst, CoordinateDescent::violation(g, target[j], j < m));
        const double z = target[j];
        const double t = j < m ? soft_threshold(z - g / h, 1.0 / h) : z - g / h;
        const double step = t - z;
        if (step == 0.0) continue;
        target[j] = t;
        const double* hj = hess.data() + j * total;
        for (std::size_t k = 0; k < total; ++k) model_grad[k] += step * hj[k];
      }
      if (worst <= inner_tol) break;
    }

    double predicted = 0.0;
    std::fill(direction.begin(), direction.end(), 0.0);
    bool moved = false;
    for (std::size_t j = 0; j < total; ++j) {
      const double d = target[j] - x[j];
      if (d == 0.0) continue;
      moved = true;
      predicted += grad[j] * d;
      if (j < m) predicted += std::fabs(target[j]) - std::fabs(x[j]);
      kernels::axpy(d, ws.column(j), direction);
    }

    bool accepted = false;
    if (moved && predicted < 0.0) {
      double alpha = 1.0;
      for (int ls = 0; ls < kMaxLineSearch; ++ls) {
        double l1 = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          l1 += std::fabs(x[j] + alpha * (target[j] - x[j])) - std::fabs(x[j]);
        }
        const double actual = l1 + cfg.c * kernels::loss_delta(shape_of(cfg.loss), eps_of(cfg),
                                                               direction, ws.residuals(), alpha);
        if (actual <= kArmijo * alpha * predicted) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (accepted) {
        if (alpha == 1.0) {
          x = target;
        } else {
          for (std::size_t j = 0; j < total; ++j) x[j] += alpha * (target[j] - x[j]);
        }
      }
    }
    if (!accepted) {
      // The model step failed to descend (rounding near the optimum or a
      // degenerate Hessian): fall back to one plain coordinate epoch.
      sync();
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t k : order) {
        double& v = k < m ? result.weights[k] : result.intercept;
        cd.update(k, v, k < m);
      }
      std::copy(result.weights.begin(), result.weights.end(), x.begin());
      if (cfg.fit_intercept) x[m] = result.intercept;
    }
    write_back();
    if (observer) observer(epoch, result.weights, result.intercept);
  }
  sync();

  result.objective = objective(X, y, result.weights, result.intercept, cfg);
  result.kkt_residual = kkt_residual(X, y, result.weights, result.intercept, cfg);
  result.converged = result.kkt_residual <= cfg.tol;
  return result;
}

}  // namespace rankalign
