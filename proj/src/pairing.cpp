#include "rankalign/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rankalign/error.hpp"

namespace rankalign {

PairSet PairSet::subset(std::span<const std::size_t> positions) const {
  PairSet out;
  out.delta = delta;
  out.diffs = diffs.select_rows(positions);
  out.signs.reserve(positions.size());
  out.index_pairs.reserve(positions.size());
  for (std::size_t p : positions) {
    out.signs.push_back(signs[p]);
    out.index_pairs.push_back(index_pairs[p]);
  }
  return out;
}

PairSet build_pairs(const Cohort& cohort, std::span<const std::size_t> rows, double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw DataError("build_pairs: delta must be a finite value >= 0");
  }
  if (rows.size() < 2) throw DataError("build_pairs: need at least 2 rows");

  RowIndices sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DataError("build_pairs: duplicate row index");
  }
  if (sorted.back() >= cohort.size()) throw DataError("build_pairs: row index out of range");

  const auto& y = cohort.rating;
  std::vector<std::pair<std::size_t, std::size_t>> kept;
  std::vector<int> signs;
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    const std::size_t i = sorted[a];
    for (std::size_t b = a + 1; b < sorted.size(); ++b) {
      const std::size_t j = sorted[b];
      const double diff = y[i] - y[j];
      if (diff == 0.0 || std::fabs(diff) < delta) continue;
      kept.emplace_back(i, j);
      signs.push_back(diff > 0.0 ? 1 : -1);
    }
  }
  if (kept.empty()) {
    throw EmptyPairSetError("no pair of the " + std::to_string(rows.size()) +
                                " rows has a rating difference >= delta=" +
                                format_double(delta) + " (delta too large)",
                            delta);
  }

  const std::size_t m = cohort.num_features();
  PairSet pairs;
  pairs.delta = delta;
  pairs.diffs = Matrix(kept.size(), m);
  for (std::size_t p = 0; p < kept.size(); ++p) {
    const auto xi = cohort.features.row(kept[p].first);
    const auto xj = cohort.features.row(kept[p].second);
    auto d = pairs.diffs.row(p);
    for (std::size_t c = 0; c < m; ++c) d[c] = xi[c] - xj[c];
  }
  pairs.signs = std::move(signs);
  pairs.index_pairs = std::move(kept);
  return pairs;
}

PairSet subsample_pairs(const PairSet& pairs, std::size_t cap, std::uint64_t seed) {
  if (cap == 0) throw DataError("subsample_pairs: cap must be >= 1");
  if (pairs.size() <= cap) return pairs;
  std::vector<std::size_t> positions(pairs.size());
  std::iota(positions.begin(), positions.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `cap` slots become a uniform sample.
  for (std::size_t k = 0; k < cap; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, positions.size() - 1);
    std::swap(positions[k], positions[pick(rng)]);
  }
  positions.resize(cap);
  std::sort(positions.begin(), positions.end());
  return pairs.subset(positions);
}

}  // namespace rankalign
