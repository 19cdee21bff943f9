#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mcghd {

// Label vectors hold 0-based class indices; kUnlabeled (-1) marks positions
// without a label. File formats use 1-based labels.

/// Row-wise arg max; ties go to the lowest index.
std::vector<int> map_labels(const Eigen::MatrixXd& zhat);

/// Pair-counting adjusted Rand index over positions labeled in both vectors.
/// Returns 1 when both partitions are trivial and identical.
double ari(std::span<const int> a, std::span<const int> b);

struct Confusion {
  std::vector<int> row_labels;  ///< distinct labels of a, ascending
  std::vector<int> col_labels;  ///< distinct labels of b, ascending
  Eigen::MatrixXi counts;
  /// Share of positions outside the greedily matched cells.
  double misclassification = 0.0;
  /// Matched column for each row, or -1.
  std::vector<int> matching;
};

/// Contingency table of a against b. The one-to-one matching repeatedly picks
/// the largest remaining cell (first in row-major order on ties).
Confusion confusion(std::span<const int> a, std::span<const int> b);

}  // namespace mcghd
