#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "mcghd/model.hpp"

namespace mcghd {

using Rng = std::mt19937_64;

/// GIG law in the (concentration, scale, index) parametrization:
///   h(w) = (w/eta)^(lambda-1) / (2 eta K_lambda(omega)) exp(-omega/2 (w/eta + eta/w)).
struct GIGParams {
  double omega = 1.0;
  double eta = 1.0;
  double lambda = -0.5;
};

/// GIG law in the classic (psi, chi, lambda) parametrization:
///   h(w) = (psi/chi)^(lambda/2) w^(lambda-1) / (2 K_lambda(sqrt(psi chi))) exp(-(psi w + chi/w)/2).
struct GIGClassicParams {
  double psi = 1.0;
  double chi = 1.0;
  double lambda = -0.5;
};

GIGParams to_scale_form(const GIGClassicParams& classic);
GIGClassicParams to_classic_form(const GIGParams& params);

/// Smallest concentration accepted; smaller inputs are clamped and counted.
inline constexpr double kMinOmega = 1e-6;

/// Number of times any GIG routine clamped omega up to kMinOmega.
std::uint64_t gig_omega_clamp_count();
void reset_gig_omega_clamp_count();

double gig_log_density(double w, const GIGParams& params);
double gig_log_density(double w, const GIGClassicParams& params);

struct GIGMoments {
  double e_w;     ///< E[W]
  double e_winv;  ///< E[1/W]
  double e_logw;  ///< E[log W]
};

GIGMoments gig_expectations(const GIGParams& params);
GIGMoments gig_expectations(const GIGClassicParams& params);

/// Moments plus log K_lambda(sqrt(psi chi)), sharing one Bessel evaluation.
/// This is the form the E-step consumes.
struct GIGEvaluation {
  double log_bessel;
  GIGMoments moments;
};

GIGEvaluation gig_evaluate(const GIGClassicParams& params);

/// Posterior law of the GHD latent weight of x under the GHD part of `comp`:
/// GIG(omega0 + beta' Sigma^-1 beta, omega0 + delta(x, mu | Sigma), lambda0 - p/2).
GIGClassicParams ghd_latent_posterior(const Eigen::Ref<const Eigen::VectorXd>& x,
                                      const CGHDComponent& comp);

/// Draws from one GIG law. Setup is done once; each call consumes the RNG.
/// Uses ratio-of-uniforms with mode shift for lambda > 2 or omega > 3,
/// ratio-of-uniforms without shift for moderate parameters, and a
/// three-piece rejection hat when both |lambda| < 1 and omega is small.
class GIGSampler {
 public:
  explicit GIGSampler(const GIGParams& params);

  double operator()(Rng& rng) const;

 private:
  enum class Method { kRouShift, kRouNoShift, kRejection };

  double draw_standard(Rng& rng) const;

  Method method_;
  double lambda_;   // |lambda| of the standardized law
  bool invert_;     // original lambda < 0: return eta / X
  double omega_;
  double eta_;
  // ratio-of-uniforms constants
  double t_ = 0.0, s_ = 0.0, mode_ = 0.0, log_norm_ = 0.0;
  double u_min_ = 0.0, u_max_ = 0.0;
  // rejection hat constants
  double x0_ = 0.0, k0_ = 0.0, k1_ = 0.0, k2_ = 0.0;
  double area_[3] = {0.0, 0.0, 0.0};
  double area_total_ = 0.0;
};

/// n i.i.d. draws; deterministic given the seed.
std::vector<double> gig_sample(const GIGParams& params, std::size_t n, std::uint64_t seed);

}  // namespace mcghd
