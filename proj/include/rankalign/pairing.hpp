#pragma once
// δ-thresholded pairwise training set: for every pair of patients whose
// ratings differ by at least δ, the feature difference x_i - x_j labelled
// with sign(y_i - y_j).

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rankalign/cohort.hpp"

namespace rankalign {

inline constexpr double kDefaultDelta = 15.0;
inline constexpr std::size_t kDefaultPairCap = 200000;

struct PairSet {
  Matrix diffs;                                          // P x m, row p = x_i - x_j
  std::vector<int> signs;                                // +1 / -1, never 0
  std::vector<std::pair<std::size_t, std::size_t>> index_pairs;  // cohort rows, i < j
  double delta = 0.0;

  std::size_t size() const noexcept { return signs.size(); }
  bool empty() const noexcept { return signs.empty(); }

  // Pairs at the given positions, in the order given.
  PairSet subset(std::span<const std::size_t> positions) const;

  friend bool operator==(const PairSet&, const PairSet&) = default;
};

// All pairs (i, j), i < j, drawn from `rows` with |y_i - y_j| >= delta and
// y_i != y_j, in lexicographic (i, j) order. Throws DataError for fewer than
// two rows and EmptyPairSetError when nothing qualifies.
PairSet build_pairs(const Cohort& cohort, std::span<const std::size_t> rows, double delta);

// Identity when size() <= cap; otherwise a uniform random subset of `cap`
// pairs chosen from `seed`, kept in the original order.
PairSet subsample_pairs(const PairSet& pairs, std::size_t cap, std::uint64_t seed);

}  // namespace rankalign
