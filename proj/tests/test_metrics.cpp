#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rankalign/error.hpp"
#include "rankalign/metrics.hpp"

using namespace rankalign;

TEST_CASE("hand-computed metric values") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1};
  CHECK(pearson(a, b) == doctest::Approx(1.0));
  CHECK(pearson(a, c) == doctest::Approx(-1.0));
  CHECK(pearson(a, b) <= 1.0);
  CHECK(spearman(a, std::vector<double>{1, 10, 100, 1000}) == doctest::Approx(1.0));
  CHECK(average_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});

  const std::vector<int> labels{0, 0, 1, 1};
  CHECK(roc_auc(a, labels) == 1.0);
  CHECK(roc_auc(c, labels) == 0.0);
  CHECK(roc_auc(std::vector<double>{1, 1, 1, 1}, labels) == 0.5);
  // One tie between a positive and a negative: (3 + 0.5) / 4.
  CHECK(roc_auc(std::vector<double>{1, 2, 2, 3}, labels) == 0.875);
}

TEST_CASE("metric error cases") {
  const std::vector<double> a{1, 2, 3};
  CHECK_THROWS_AS(pearson(a, std::vector<double>{1, 1, 1}), DataError);
  CHECK_THROWS_AS(pearson(a, std::vector<double>{1, 2}), DataError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{2}), DataError);
  CHECK_THROWS_AS(spearman(a, std::vector<double>{5, 5, 5}), DataError);
  CHECK_THROWS_AS(roc_auc(a, std::vector<int>{1, 1, 1}), DataError);
  CHECK_THROWS_AS(roc_auc(a, std::vector<int>{0, 1, 2}), DataError);
  CHECK_THROWS_AS(roc_auc(a, std::vector<int>{0, 1}), DataError);
}

TEST_CASE("roc_auc equals Mann-Whitney enumeration exactly, with ties") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 150;
    std::vector<double> s(n);
    std::vector<int> y(n);
    const int levels = 1 + static_cast<int>(rng() % 10);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = t % 2 ? static_cast<double>(rng() % levels) : std::normal_distribution<double>()(rng);
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(roc_auc(s, y) == oracle::mann_whitney_auc(s, y));
  }
}

TEST_CASE("pearson and spearman match textbook formulas") {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + rng() % 200;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = t % 3 == 0 ? static_cast<double>(rng() % 7) : std::normal_distribution<double>(5.0, 3.0)(rng);
      y[i] = 0.5 * x[i] + std::normal_distribution<double>()(rng);
    }
    if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end())) continue;
    CHECK(std::fabs(pearson(x, y) - oracle::textbook_pearson(x, y)) <= 1e-12);
    CHECK(std::fabs(spearman(x, y) - oracle::textbook_spearman(x, y)) <= 1e-12);
    CHECK(average_ranks(x) == oracle::counting_ranks(x));
  }
}

TEST_CASE("metrics are invariant under strictly increasing maps of the score") {
  std::mt19937_64 rng(43);
  std::vector<double> s(80), r(80), mapped(80);
  std::vector<int> y(80);
  for (std::size_t i = 0; i < 80; ++i) {
    s[i] = std::normal_distribution<double>()(rng);
    r[i] = s[i] + std::normal_distribution<double>()(rng);
    y[i] = r[i] > 0.0 ? 1 : 0;
    mapped[i] = 3.0 * std::exp(s[i]) - 7.0;
  }
  CHECK(roc_auc(mapped, y) == roc_auc(s, y));
  CHECK(spearman(mapped, r) == doctest::Approx(spearman(s, r)).epsilon(1e-15));
  std::vector<double> affine(80);
  for (std::size_t i = 0; i < 80; ++i) affine[i] = 2.5 * s[i] + 40.0;
  CHECK(pearson(affine, r) == doctest::Approx(pearson(s, r)).epsilon(1e-12));
}
