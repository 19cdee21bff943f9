#pragma once

#include <Eigen/Dense>

#include "mcghd/model.hpp"

namespace mcghd {

/// delta(x, mu | Sigma) with Sigma = Gamma Phi Gamma' and mu in rotated
/// coordinates: sum_j ([Gamma' x]_j - mu_j)^2 / phi_j.
double mahalanobis(const Eigen::Ref<const Eigen::VectorXd>& x, const CGHDComponent& comp);

/// Log-density of the p-variate GHD part (omega0, lambda0) of `comp`.
double ghd_log_density(const Eigen::Ref<const Eigen::VectorXd>& x, const CGHDComponent& comp);

/// Log-density of the multiple-scaled GHD part: a product over rotated
/// coordinates of univariate GHD densities with (mu_j, phi_j, beta_j, omega_j, lambda_j).
double msghd_log_density(const Eigen::Ref<const Eigen::VectorXd>& x, const CGHDComponent& comp);

/// log[varpi f_GH + (1 - varpi) f_MSGH].
double cghd_log_density(const Eigen::Ref<const Eigen::VectorXd>& x, const CGHDComponent& comp);

/// Component log-density as the family sees it: GHD for MGHD, MSGHD for the
/// multiple-scaled families, the coalesced density for MCGHD.
double component_log_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const CGHDComponent& comp, Family family);

/// log sum_g pi_g f_g(x).
double mixture_log_density(const Eigen::Ref<const Eigen::VectorXd>& x, const MixtureModel& model);

/// Row-wise mixture log-density of an n x p data matrix.
Eigen::VectorXd mixture_log_density_rows(const Eigen::MatrixXd& data, const MixtureModel& model);

/// Univariate GHD log-density at y with location mu, scale phi, skewness beta.
double univariate_ghd_log_density(double y, double mu, double phi, double beta, double omega,
                                  double lambda);

/// log(exp(a) + exp(b)) without overflow; handles -inf operands.
double log_sum_exp(double a, double b);

}  // namespace mcghd
