#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace rankalign::detail {

// Shuffled round-robin assignment of `count` items to `folds` folds. With
// labels, positives are dealt first so each fold keeps the class balance.
inline std::vector<std::size_t> assign_folds(std::size_t count, std::size_t folds,
                                             std::uint64_t seed,
                                             const std::vector<int>* labels = nullptr) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  if (labels) {
    std::stable_partition(order.begin(), order.end(),
                          [&](std::size_t i) { return (*labels)[i] == 1; });
  }
  std::vector<std::size_t> fold_of(count);
  for (std::size_t k = 0; k < order.size(); ++k) fold_of[order[k]] = k % folds;
  return fold_of;
}

}  // namespace rankalign::detail
