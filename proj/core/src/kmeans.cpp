#include <limits>
#include <random>
#include <sstream>

#include "mcghd/error.hpp"
#include "mcghd/gig.hpp"
#include "mcghd/inference.hpp"

namespace mcghd {
namespace {

constexpr int kRestarts = 10;
constexpr int kMaxAttempts = 20;
constexpr int kMaxLloydIter = 100;

struct Partition {
  std::vector<int> assign;
  double wcss = std::numeric_limits<double>::infinity();
};

Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& data, int G, Rng& rng) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd centers(G, data.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = data.row(pick(rng));
  Eigen::VectorXd dist2 = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < G; ++k) {
    const double total = dist2.sum();
    Eigen::Index chosen = pick(rng);
    if (total > 0.0) {
      std::uniform_real_distribution<double> unif(0.0, total);
      double target = unif(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= dist2(i);
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.row(k) = data.row(chosen);
    dist2 = dist2.cwiseMin((data.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }
  return centers;
}

// Returns an empty assignment when a cluster empties.
Partition lloyd(const Eigen::MatrixXd& data, Eigen::MatrixXd centers) {
  const Eigen::Index n = data.rows();
  const int G = static_cast<int>(centers.rows());
  Partition part;
  part.assign.assign(n, -1);
  for (int iter = 0; iter < kMaxLloydIter; ++iter) {
    bool changed = false;
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < G; ++k) {
        const double d = (data.row(i) - centers.row(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (part.assign[i] != best) changed = true;
      part.assign[i] = best;
      wcss += best_d;
    }
    part.wcss = wcss;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(G, data.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(G);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(part.assign[i]) += data.row(i);
      ++counts(part.assign[i]);
    }
    if ((counts.array() == 0).any()) return {};
    for (int k = 0; k < G; ++k) centers.row(k) = sums.row(k) / counts(k);
    if (!changed) break;
  }
  return part;
}

}  // namespace

Eigen::MatrixXd kmeans_init(const Eigen::MatrixXd& data, int G, std::uint64_t seed) {
  const Eigen::Index n = data.rows();
  if (G < 1 || n <= G) {
    std::ostringstream msg;
    msg << "k-means needs n > G >= 1 (n=" << n << ", G=" << G << ")";
    throw InputError(msg.str());
  }
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, G);
  if (G == 1) {
    resp.col(0).setOnes();
    return resp;
  }

  Rng rng(seed);
  Partition best;
  int successes = 0;
  for (int attempt = 0; attempt < kMaxAttempts && successes < kRestarts; ++attempt) {
    Partition part = lloyd(data, seed_centers(data, G, rng));
    if (part.assign.empty()) continue;
    ++successes;
    if (part.wcss < best.wcss) best = std::move(part);
  }
  if (best.assign.empty()) {
    throw DegenerateFitError("k-means left a cluster empty in every attempt", {});
  }
  for (Eigen::Index i = 0; i < n; ++i) resp(i, best.assign[i]) = 1.0;
  return resp;
}

}  // namespace mcghd
