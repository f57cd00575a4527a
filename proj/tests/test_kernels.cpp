#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rankalign/kernels.hpp"

using namespace rankalign::kernels;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

std::vector<Isa> simd_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (isa_supported(isa)) out.push_back(isa);
  }
  return out;
}

bool close(double a, double b, double rel = 1e-12, double abs = 1e-12) {
  return std::fabs(a - b) <= abs + rel * std::max(std::fabs(a), std::fabs(b));
}

// Straight-from-definition psi.
double psi(LossShape shape, double eps, double r) {
  if (shape == LossShape::one_sided) return r > 0.0 ? r * r : 0.0;
  const double e = std::max(0.0, std::fabs(r) - eps);
  return e * e;
}

}  // namespace

TEST_CASE("scalar kernels match their definitions") {
  const auto& t = table(Isa::scalar);
  std::mt19937_64 rng(1);
  const auto a = random_vector(rng, 37), b = random_vector(rng, 37);
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  CHECK(close(t.dot(a.data(), b.data(), a.size()), dot));

  auto y = b;
  t.axpy(-0.5, a.data(), y.data(), y.size());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(b[i] - 0.5 * a[i]).epsilon(1e-15));

  for (LossShape shape : {LossShape::one_sided, LossShape::two_sided}) {
    const double eps = 0.3;
    const auto col = random_vector(rng, 29), r = random_vector(rng, 29);
    double grad = 0.0, hess = 0.0, sum = 0.0, after = 0.0;
    const double step = 0.7;
    for (std::size_t i = 0; i < r.size(); ++i) {
      double phi = 0.0;
      bool curved = false;
      if (shape == LossShape::one_sided) {
        curved = r[i] > 0.0;
        phi = curved ? r[i] : 0.0;
      } else {
        curved = std::fabs(r[i]) >= eps;
        phi = r[i] > eps ? r[i] - eps : (r[i] < -eps ? r[i] + eps : 0.0);
      }
      grad += col[i] * phi;
      if (curved) hess += col[i] * col[i];
      sum += psi(shape, eps, r[i]);
      after += psi(shape, eps, r[i] - step * col[i]);
    }
    const auto gh = t.grad_hess(shape, eps, col.data(), r.data(), r.size());
    CHECK(close(gh.grad, grad));
    CHECK(close(gh.hess, hess));
    CHECK(close(t.loss_sum(shape, eps, r.data(), r.size()), sum));
    CHECK(close(t.loss_delta(shape, eps, col.data(), r.data(), step, r.size()), after - sum, 1e-12, 1e-12));
  }
}

TEST_CASE("SIMD kernels agree with the scalar reference for every length and tail") {
  const auto simd = simd_isas();
  if (simd.empty()) {
    MESSAGE("no SIMD variant available on this CPU; equivalence not exercised");
    return;
  }
  const auto& ref = table(Isa::scalar);
  std::mt19937_64 rng(2);
  for (Isa isa : simd) {
    CAPTURE(isa_name(isa));
    const auto& t = table(isa);
    for (std::size_t n = 0; n <= 67; ++n) {
      CAPTURE(n);
      const auto a = random_vector(rng, n), b = random_vector(rng, n, 2.0);
      CHECK(close(t.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), 1e-12, 1e-12));

      auto y1 = b, y2 = b;
      t.axpy(1.25, a.data(), y1.data(), n);
      ref.axpy(1.25, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], 1e-15, 1e-15));

      for (LossShape shape : {LossShape::one_sided, LossShape::two_sided}) {
        for (double eps : {0.0, 0.5}) {
          const auto g1 = t.grad_hess(shape, eps, a.data(), b.data(), n);
          const auto g2 = ref.grad_hess(shape, eps, a.data(), b.data(), n);
          CHECK(close(g1.grad, g2.grad, 1e-12, 1e-12));
          CHECK(close(g1.hess, g2.hess, 1e-12, 1e-12));
          CHECK(close(t.loss_sum(shape, eps, b.data(), n), ref.loss_sum(shape, eps, b.data(), n), 1e-12,
                      1e-12));
          CHECK(close(t.loss_delta(shape, eps, a.data(), b.data(), -0.3, n),
                      ref.loss_delta(shape, eps, a.data(), b.data(), -0.3, n), 1e-12, 1e-12));
        }
      }
    }
  }
}

TEST_CASE("SIMD kernels classify boundary residuals like the scalar reference") {
  // Residuals sitting exactly on the kinks: 0 for one_sided, +-eps for two_sided.
  std::vector<double> r{0.0, -0.0, 0.5, -0.5, 0.5, 1e-300, -1e-300, 0.49999999999999994, 2.0};
  std::vector<double> col(r.size(), 1.0);
  const auto& ref = table(Isa::scalar);
  for (Isa isa : simd_isas()) {
    const auto& t = table(isa);
    for (LossShape shape : {LossShape::one_sided, LossShape::two_sided}) {
      const auto g1 = t.grad_hess(shape, 0.5, col.data(), r.data(), r.size());
      const auto g2 = ref.grad_hess(shape, 0.5, col.data(), r.data(), r.size());
      CHECK(g1.hess == g2.hess);
      CHECK(close(g1.grad, g2.grad));
    }
  }
}

TEST_CASE("ISA selection can be overridden and restored") {
  const Isa original = active_isa();
  CHECK(isa_supported(Isa::scalar));
  CHECK(isa_supported(detect_isa()));
  set_active_isa(Isa::scalar);
  CHECK(active_isa() == Isa::scalar);
  CHECK(&active_table() == &table(Isa::scalar));
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (!isa_supported(isa)) CHECK_THROWS_AS(set_active_isa(isa), std::invalid_argument);
  }
  set_active_isa(original);
  CHECK(active_isa() == original);
  CHECK(isa_name(Isa::scalar) == "scalar");
}
