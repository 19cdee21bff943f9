#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mcghd/model.hpp"

namespace mcghd {

/// Marks an observation without a known class in label vectors.
inline constexpr int kUnlabeled = -1;

enum class InitMethod { kKmeans, kLabels, kRandom };

struct FitConfig {
  Family family = Family::MCGHD;
  int G = 1;
  int max_iter = 500;
  double epsilon = 0.01;
  InitMethod init = InitMethod::kKmeans;
  std::uint64_t seed = 1;
  /// Lower bound on the MSGHD indices. Defaults to 1 + 1e-4 under McMSGHD.
  std::optional<double> lambda_floor;
  /// Standardize columns before fitting; the fitted model lives on that scale.
  bool scale_data = false;
  int n_restarts = 1;
  /// Hold every inner weight at this value (MCGHD only).
  std::optional<double> freeze_varpi;
  /// n x G starting responsibilities for InitMethod::kLabels.
  Eigen::MatrixXd initial_responsibilities;

  std::optional<double> effective_lambda_floor() const;
  void validate() const;
};

/// Posterior quantities of one E-step. Matrices are n x G; the MSGHD moments
/// hold one n x p matrix per component.
struct EStepCache {
  Eigen::MatrixXd zhat;
  Eigen::MatrixXd uhat;
  Eigen::MatrixXd a, b, c;
  std::vector<Eigen::MatrixXd> e1, e2, e3;
  /// log f_g(x_i) for the component density the family uses.
  Eigen::MatrixXd log_density;
  double loglik = 0.0;
};

/// Weighted averages of the E-step moments. The hyperparameter averages are
/// taken over the branch that owns the latent weight: A, B, C with weights
/// zhat * uhat and Ebar1..3 with weights zhat * (1 - uhat). Under MGHD and the
/// multiple-scaled families these reduce to plain zhat-weighted means.
struct SufficientStats {
  Eigen::VectorXd n_g;
  Eigen::VectorXd A, B, C;
  Eigen::MatrixXd Ebar1, Ebar2, Ebar3;  ///< G x p
  Eigen::MatrixXd s1bar, s2bar;         ///< G x p
  Eigen::VectorXd ghd_weight;           ///< sum_i zhat * uhat
  Eigen::VectorXd msghd_weight;         ///< sum_i zhat * (1 - uhat)
};

struct FitDiagnostics {
  int phi_floored = 0;
  int mu_beta_fallbacks = 0;
  int gamma_rejected = 0;
  int hyper_rejected = 0;
};

/// Per-column standardization applied before a fit.
struct Scaling {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& data) const;
  static Scaling from_data(const Eigen::MatrixXd& data);
};

struct FitResult {
  MixtureModel model;
  std::vector<double> loglik_trace;
  double loglik = 0.0;
  double bic = 0.0;
  std::vector<int> map_labels;  ///< 0-based component indices
  Eigen::MatrixXd zhat;
  bool converged = false;
  int n_iter = 0;
  std::uint64_t seed = 0;
  FitDiagnostics diagnostics;
  std::optional<Scaling> scaling;
};

/// Hard k-means responsibilities (Lloyd, k-means++ seeding, 10 restarts).
Eigen::MatrixXd kmeans_init(const Eigen::MatrixXd& data, int G, std::uint64_t seed);

/// Model parameters from responsibilities: weighted means, eigendecomposed
/// covariances, zero skewness and default latent hyperparameters.
MixtureModel initial_model(const Eigen::MatrixXd& data, const Eigen::MatrixXd& resp,
                           Family family, std::optional<double> lambda_floor = std::nullopt);

/// E-step. `labels` (empty, or one entry per row) pins labeled rows of zhat
/// to their indicator; kUnlabeled rows stay free.
EStepCache e_step(const Eigen::MatrixXd& data, const MixtureModel& model,
                  std::span<const int> labels = {});

SufficientStats compute_stats(const EStepCache& cache);

struct MixingUpdate {
  Eigen::VectorXd pi;
  Eigen::VectorXd varpi;
};

MixingUpdate m_step_mixing(const EStepCache& cache, const MixtureModel& model);

struct LocationUpdate {
  Eigen::MatrixXd mu;    ///< G x p
  Eigen::MatrixXd beta;  ///< G x p
  int fallbacks = 0;
};

LocationUpdate m_step_location_skewness(const Eigen::MatrixXd& data, const EStepCache& cache,
                                        const MixtureModel& model);

struct PhiUpdate {
  Eigen::MatrixXd phi;  ///< G x p
  int floored = 0;
};

PhiUpdate m_step_phi(const Eigen::MatrixXd& data, const EStepCache& cache,
                     const MixtureModel& model);

/// Objective the eigenvector update minimizes for component g, as a
/// function of a candidate rotation (the terms of the expected complete-data
/// log-likelihood that depend on it, negated, up to an additive constant).
double gamma_objective(const Eigen::MatrixXd& data, const EStepCache& cache,
                       const MixtureModel& model, int g, const Eigen::MatrixXd& gamma);

struct GammaUpdate {
  std::vector<Eigen::MatrixXd> gamma;
  int rejected = 0;
};

/// Two MM sub-iterations per component (one per majorizer); the result is
/// kept only if the objective does not increase.
GammaUpdate m_step_gamma(const Eigen::MatrixXd& data, const EStepCache& cache,
                         const MixtureModel& model);

/// Flips eigenvector columns so their largest-magnitude entry is positive,
/// flipping the matching location and skewness coordinates with them.
void fix_eigenvector_signs(CGHDComponent& comp);

/// q(omega, lambda) = -log K_lambda(omega) + (lambda - 1) E[log W] - omega/2 (E[W] + E[1/W]).
double gig_hyper_objective(double omega, double lambda, double mean_w, double mean_winv,
                           double mean_logw);

struct HyperStep {
  double omega;
  double lambda;
  bool rejected = false;
};

/// One update of (omega, lambda) for a GIG mixing law: the multiplicative
/// index update, then one Newton step in omega. Each move is kept only if q
/// does not decrease.
HyperStep gig_hyper_step(double omega, double lambda, double mean_w, double mean_winv,
                         double mean_logw, std::optional<double> lambda_floor);

struct HyperUpdate {
  std::vector<CGHDComponent> components;
  int rejected = 0;
};

HyperUpdate m_step_gig_hyper(const SufficientStats& stats, const MixtureModel& model,
                             std::optional<double> lambda_floor);

/// Aitken stopping rule on the last three log-likelihoods.
bool aitken_converged(std::span<const double> trace, double epsilon);

FitResult fit(const Eigen::MatrixXd& data, const FitConfig& config);

/// Semi-supervised fit. `labels` holds 0-based classes or kUnlabeled.
FitResult fit_classification(const Eigen::MatrixXd& data, std::span<const int> labels,
                             const FitConfig& config);

/// Posterior responsibilities of new data under a fitted model.
Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& data, const MixtureModel& model);

/// arg max_g pi_g f_g(x) per row; ties go to the lower index.
std::vector<int> predict(const Eigen::MatrixXd& data, const MixtureModel& model);

struct DiscriminantResult {
  FitResult fit;
  std::vector<int> test_labels;
};

/// Fits one joint mixture on fully labeled training data, then classifies
/// the test rows.
DiscriminantResult fit_discriminant(const Eigen::MatrixXd& train, std::span<const int> labels,
                                    const Eigen::MatrixXd& test, const FitConfig& config);

}  // namespace mcghd
