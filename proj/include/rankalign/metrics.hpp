#pragma once
// Agreement metrics between a score and the rating or the binary label.

#include <span>
#include <vector>

namespace rankalign {

// Pearson correlation. Throws DataError on length mismatch, fewer than two
// points, or a constant input.
double pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of average ranks (ties share the mean rank).
double spearman(std::span<const double> a, std::span<const double> b);

// 1-based average ranks.
std::vector<double> average_ranks(std::span<const double> values);

// Mann-Whitney AUC: fraction of (positive, negative) pairs where the positive
// scores higher, ties counting one half. Labels are 0/1; both classes must
// be present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace rankalign
