#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <vector>

#include "mcghd/model.hpp"

namespace mcghd {

/// Draws from the GHD part (omega0, lambda0) of `comp`: Gamma(mu + W beta + sqrt(W) Z)
/// with Z ~ N(0, Phi). Rows are observations in ambient coordinates.
Eigen::MatrixXd sample_ghd(const CGHDComponent& comp, std::size_t n, std::uint64_t seed);

/// Draws from the multiple-scaled part: independent W_j per rotated coordinate.
Eigen::MatrixXd sample_msghd(const CGHDComponent& comp, std::size_t n, std::uint64_t seed);

/// Draws from the coalesced law: a GHD draw with probability varpi, else an
/// MSGHD draw. With varpi at 0 or 1 the stream matches the pure sampler.
/// `from_ghd`, when given, receives 1 for rows drawn from the GHD part.
Eigen::MatrixXd sample_cghd(const CGHDComponent& comp, std::size_t n, std::uint64_t seed,
                            std::vector<int>* from_ghd = nullptr);

enum class Generator { kGaussian, kSkewNormal, kGHD, kMSGHD };

std::string_view generator_name(Generator g);
Generator parse_generator(std::string_view name);

struct ScenarioSpec {
  Generator generator = Generator::kGaussian;
  int p = 2;
  int G = 2;
  int n_per_component = 200;
  double hypercube_side = 50.0;
  double corr_min = 0.0;
  double corr_max = 0.6;
  double skew_min = -6.0;
  double skew_max = 6.0;
  double omega_fixed = 1.0;
  double lambda_fixed = -0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Scenario {
  Eigen::MatrixXd data;
  std::vector<int> labels;  ///< 0-based component of each row
};

/// Component-blocked synthetic data: centres uniform in the hypercube,
/// unit-diagonal correlation-like scales, skewness uniform per coordinate.
Scenario generate_scenario(const ScenarioSpec& spec);

/// Symmetric matrix with unit diagonal and off-diagonals uniform in
/// [lo, hi], pushed to positive definite by eigenvalue clipping when needed.
Eigen::MatrixXd random_correlation(int p, double lo, double hi, std::uint64_t seed);

}  // namespace mcghd
