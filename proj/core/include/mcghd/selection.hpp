#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "mcghd/inference.hpp"
#include "mcghd/model.hpp"

namespace mcghd {

/// Free parameters of a G-component mixture in p dimensions. The rotation
/// counts p(p-1)/2 angles; MGHD counts an unstructured scale matrix instead.
int count_free_params(Family family, int G, int p);

/// 2 loglik - rho log n (larger is better).
double bic(double loglik, int rho, std::size_t n);
double bic(const FitResult& fit, std::size_t n);

struct ModelScore {
  Family family = Family::MCGHD;
  int G = 1;
  double loglik = 0.0;
  int rho = 0;
  double bic = 0.0;
  bool failed = false;
  std::string status;  ///< "ok", "max_iter" or the failure message
};

struct SelectionResult {
  std::vector<ModelScore> scores;  ///< ordered by (G, family)
  std::optional<std::size_t> best; ///< index into scores
  std::optional<FitResult> best_fit;
};

/// Fits every (G, family) pair with `base` as template and keeps the BIC
/// maximizer. Failed fits are recorded and skipped. Ties go to the smaller
/// G, then to the earlier family in MGHD, MMSGHD, McMSGHD, MCGHD order.
SelectionResult select(const Eigen::MatrixXd& data, const std::vector<int>& G_range,
                       const std::vector<Family>& families, const FitConfig& base);

/// Index of the preferred score under the tie rules, ignoring failures.
std::optional<std::size_t> best_score(const std::vector<ModelScore>& scores);

}  // namespace mcghd
