#include "mcghd/labels.hpp"

#include <algorithm>
#include <map>

#include "mcghd/error.hpp"
#include "mcghd/inference.hpp"

namespace mcghd {
namespace {

void check_lengths(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw InputError("label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
}

double choose2(double k) { return 0.5 * k * (k - 1.0); }

std::vector<int> distinct(std::span<const int> v, const std::vector<bool>& keep) {
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (keep[i]) out.push_back(v[i]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<bool> both_labeled(std::span<const int> a, std::span<const int> b) {
  std::vector<bool> keep(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) keep[i] = a[i] != kUnlabeled && b[i] != kUnlabeled;
  return keep;
}

Eigen::MatrixXi tally(std::span<const int> a, std::span<const int> b,
                      const std::vector<bool>& keep, const std::vector<int>& rows,
                      const std::vector<int>& cols) {
  std::map<int, int> ri, ci;
  for (std::size_t k = 0; k < rows.size(); ++k) ri[rows[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < cols.size(); ++k) ci[cols[k]] = static_cast<int>(k);
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(rows.size()),
                                                 static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (keep[i]) ++counts(ri[a[i]], ci[b[i]]);
  }
  return counts;
}

}  // namespace

std::vector<int> map_labels(const Eigen::MatrixXd& zhat) {
  std::vector<int> out(static_cast<std::size_t>(zhat.rows()), 0);
  for (Eigen::Index i = 0; i < zhat.rows(); ++i) {
    int best = 0;
    for (Eigen::Index g = 1; g < zhat.cols(); ++g) {
      if (zhat(i, g) > zhat(i, best)) best = static_cast<int>(g);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double ari(std::span<const int> a, std::span<const int> b) {
  check_lengths(a, b);
  const std::vector<bool> keep = both_labeled(a, b);
  const Eigen::MatrixXi counts =
      tally(a, b, keep, distinct(a, keep), distinct(b, keep));
  const double n = counts.sum();
  double index = 0.0;
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    for (Eigen::Index c = 0; c < counts.cols(); ++c) index += choose2(counts(r, c));
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (Eigen::Index r = 0; r < counts.rows(); ++r) sum_a += choose2(counts.row(r).sum());
  for (Eigen::Index c = 0; c < counts.cols(); ++c) sum_b += choose2(counts.col(c).sum());
  const double total = choose2(n);
  if (total <= 0.0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

Confusion confusion(std::span<const int> a, std::span<const int> b) {
  check_lengths(a, b);
  const std::vector<bool> keep = both_labeled(a, b);
  Confusion out;
  out.row_labels = distinct(a, keep);
  out.col_labels = distinct(b, keep);
  out.counts = tally(a, b, keep, out.row_labels, out.col_labels);
  out.matching.assign(out.row_labels.size(), -1);

  const int n = out.counts.sum();
  std::vector<bool> row_used(out.row_labels.size()), col_used(out.col_labels.size());
  int matched = 0;
  while (true) {
    int br = -1, bc = -1, best = -1;
    for (Eigen::Index r = 0; r < out.counts.rows(); ++r) {
      if (row_used[r]) continue;
      for (Eigen::Index c = 0; c < out.counts.cols(); ++c) {
        if (!col_used[c] && out.counts(r, c) > best) {
          best = out.counts(r, c);
          br = static_cast<int>(r);
          bc = static_cast<int>(c);
        }
      }
    }
    if (br < 0) break;
    row_used[br] = true;
    col_used[bc] = true;
    out.matching[br] = bc;
    matched += best;
  }
  out.misclassification = n > 0 ? 1.0 - static_cast<double>(matched) / n : 0.0;
  return out;
}

}  // namespace mcghd
