#include "mcghd/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "mcghd/densities.hpp"
#include "mcghd/error.hpp"
#include "mcghd/gig.hpp"
#include "mcghd/labels.hpp"
#include "mcghd/selection.hpp"
#include "mcghd/specfun.hpp"

namespace mcghd {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kMaxOmega = 500.0;
constexpr double kRespFloor = 1e-300;
constexpr double kPhiFloor = 1e-10;
constexpr double kDenomFloor = 1e-10;
constexpr double kGammaSlack = 1e-8;
constexpr double kBranchWeightFloor = 1e-8;
constexpr int kMaxHalvings = 30;

bool uses_ghd(Family f) { return f == Family::MGHD || f == Family::MCGHD; }
bool uses_msghd(Family f) { return f != Family::MGHD; }

// s1 = u a + (1 - u) E1 and s2 = u b + (1 - u) E2, n x p.
Eigen::MatrixXd blend(const Eigen::VectorXd& u, const Eigen::VectorXd& ghd,
                      const Eigen::MatrixXd& msghd) {
  Eigen::MatrixXd out = msghd.array().colwise() * (1.0 - u.array());
  out.array().colwise() += u.array() * ghd.array();
  return out;
}

Eigen::MatrixXd blend_s1(const EStepCache& cache, int g) {
  return blend(cache.uhat.col(g), cache.a.col(g), cache.e1[g]);
}

Eigen::MatrixXd blend_s2(const EStepCache& cache, int g) {
  return blend(cache.uhat.col(g), cache.b.col(g), cache.e2[g]);
}

void check_labels(std::span<const int> labels, Eigen::Index n, int G) {
  if (labels.empty()) return;
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw InputError("label vector length does not match the number of observations");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kUnlabeled && (labels[i] < 0 || labels[i] >= G)) {
      std::ostringstream msg;
      msg << "label " << labels[i] + 1 << " of observation " << i + 1 << " outside 1.." << G;
      throw InputError(msg.str());
    }
  }
}

std::vector<int> first_maxima(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index g = 1; g < scores.cols(); ++g) {
      if (scores(i, g) > scores(i, best)) best = static_cast<int>(g);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

// Expected W of GIG(omega, 1, lambda), used to set the initial scale.
double gig_mean(double omega, double lambda) {
  return gig_expectations(GIGParams{omega, 1.0, lambda}).e_w;
}

Eigen::MatrixXd random_responsibilities(Eigen::Index n, int G, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, G - 1);
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, G);
  for (Eigen::Index i = 0; i < n; ++i) resp(i, pick(rng)) = 1.0;
  return resp;
}

Eigen::MatrixXd label_responsibilities(std::span<const int> labels, int G) {
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), G);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kUnlabeled) resp(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return resp;
}

}  // namespace

std::optional<double> FitConfig::effective_lambda_floor() const {
  if (lambda_floor) return lambda_floor;
  if (family == Family::McMSGHD) return 1.0 + 1e-4;
  return std::nullopt;
}

void FitConfig::validate() const {
  if (G < 1) throw InputError("number of components must be at least 1");
  if (max_iter < 2) throw InputError("max_iter must be at least 2");
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (n_restarts < 1) throw InputError("restarts must be at least 1");
  if (freeze_varpi) {
    if (family != Family::MCGHD) throw InputError("freeze_varpi applies to MCGHD only");
    if (!(*freeze_varpi >= 0.0 && *freeze_varpi <= 1.0)) {
      throw InputError("frozen inner weight must lie in [0, 1]");
    }
  }
}

Scaling Scaling::from_data(const Eigen::MatrixXd& data) {
  Scaling s;
  const double n = static_cast<double>(data.rows());
  s.mean = data.colwise().mean().transpose();
  s.sd.resize(data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double ss = (data.col(j).array() - s.mean(j)).square().sum();
    const double sd = n > 1.0 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.sd(j) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Scaling::apply(const Eigen::MatrixXd& data) const {
  if (data.cols() != mean.size()) throw InputError("scaling record does not match data width");
  return ((data.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array())
      .matrix();
}

MixtureModel initial_model(const Eigen::MatrixXd& data, const Eigen::MatrixXd& resp,
                           Family family, std::optional<double> lambda_floor) {
  const Eigen::Index n = data.rows();
  const int p = static_cast<int>(data.cols());
  const int G = static_cast<int>(resp.cols());
  if (resp.rows() != n) throw InputError("initial responsibilities do not match the data");

  MixtureModel model;
  model.family = family;
  model.pi.resize(G);
  const double lambda_init = lambda_floor ? std::max(1.5, *lambda_floor + 0.5) : -0.5;
  const double msghd_mean = uses_msghd(family) && !uses_ghd(family) ? gig_mean(1.0, lambda_init)
                                                                    : 1.0;
  const double fixed = fixed_varpi(family);

  for (int g = 0; g < G; ++g) {
    const Eigen::VectorXd w = resp.col(g);
    const double ng = w.sum();
    if (!(ng > 0.0)) {
      throw DegenerateFitError("component " + std::to_string(g + 1) + " starts with no members",
                               {});
    }
    const Eigen::VectorXd mean = data.transpose() * w / ng;
    const Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = centered.transpose() * w.asDiagonal() * centered / ng;
    if (!(cov.trace() > 0.0)) {
      const Eigen::MatrixXd all = data.rowwise() - data.colwise().mean();
      cov = all.transpose() * all / static_cast<double>(n);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const double floor = std::max(1e-6 * cov.trace() / p, kPhiFloor);

    CGHDComponent comp;
    comp.gamma = eig.eigenvectors();
    comp.phi = eig.eigenvalues().cwiseMax(floor) / msghd_mean;
    comp.mu = comp.gamma.transpose() * mean;
    comp.beta = Eigen::VectorXd::Zero(p);
    comp.omega = Eigen::VectorXd::Ones(p);
    comp.lambda = Eigen::VectorXd::Constant(p, lambda_init);
    comp.omega0 = 1.0;
    comp.lambda0 = -0.5;
    comp.varpi = fixed >= 0.0 ? fixed : 0.5;
    fix_eigenvector_signs(comp);
    model.components.push_back(std::move(comp));
    model.pi(g) = ng;
  }
  model.pi /= model.pi.sum();
  return model;
}

EStepCache e_step(const Eigen::MatrixXd& data, const MixtureModel& model,
                  std::span<const int> labels) {
  const Eigen::Index n = data.rows();
  const int p = model.dim();
  const int G = model.num_components();
  if (data.cols() != p) throw InputError("data width does not match the model dimension");
  check_labels(labels, n, G);
  const bool ghd = uses_ghd(model.family);
  const bool msghd = uses_msghd(model.family);

  EStepCache cache;
  cache.zhat.resize(n, G);
  cache.uhat.resize(n, G);
  cache.a = Eigen::MatrixXd::Ones(n, G);
  cache.b = Eigen::MatrixXd::Ones(n, G);
  cache.c = Eigen::MatrixXd::Zero(n, G);
  cache.log_density.resize(n, G);
  Eigen::MatrixXd log_weighted(n, G);

  for (int g = 0; g < G; ++g) {
    const CGHDComponent& comp = model.components[g];
    const Eigen::MatrixXd centered =
        (data * comp.gamma).rowwise() - comp.mu.transpose();
    const Eigen::ArrayXd inv_phi = comp.phi.array().inverse();
    Eigen::VectorXd log_gh = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd log_ms = Eigen::VectorXd::Zero(n);

    if (ghd) {
      const double psi = comp.omega0 + (comp.beta.array().square() * inv_phi).sum();
      const double order = comp.lambda0 - 0.5 * p;
      const double constant = -0.5 * p * kLogTwoPi - 0.5 * comp.phi.array().log().sum() -
                              log_bessel_k(comp.lambda0, comp.omega0);
      const Eigen::ArrayXd beta_scaled = comp.beta.array() * inv_phi;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::ArrayXd r = centered.row(i).transpose().array();
        const double chi = comp.omega0 + (r.square() * inv_phi).sum();
        const GIGEvaluation ev = gig_evaluate({psi, chi, order});
        log_gh(i) = 0.5 * order * (std::log(chi) - std::log(psi)) + ev.log_bessel + constant +
                    (r * beta_scaled).sum();
        cache.a(i, g) = ev.moments.e_w;
        cache.b(i, g) = ev.moments.e_winv;
        cache.c(i, g) = ev.moments.e_logw;
      }
    }

    Eigen::MatrixXd e1 = Eigen::MatrixXd::Ones(n, p);
    Eigen::MatrixXd e2 = Eigen::MatrixXd::Ones(n, p);
    Eigen::MatrixXd e3 = Eigen::MatrixXd::Zero(n, p);
    if (msghd) {
      for (int j = 0; j < p; ++j) {
        const double psi = comp.omega(j) + comp.beta(j) * comp.beta(j) * inv_phi(j);
        const double order = comp.lambda(j) - 0.5;
        const double constant = -0.5 * kLogTwoPi - 0.5 * std::log(comp.phi(j)) -
                                log_bessel_k(comp.lambda(j), comp.omega(j));
        const double log_psi = std::log(psi);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double r = centered(i, j);
          const double chi = comp.omega(j) + r * r * inv_phi(j);
          const GIGEvaluation ev = gig_evaluate({psi, chi, order});
          log_ms(i) += 0.5 * order * (std::log(chi) - log_psi) + ev.log_bessel + constant +
                       r * comp.beta(j) * inv_phi(j);
          e1(i, j) = ev.moments.e_w;
          e2(i, j) = ev.moments.e_winv;
          e3(i, j) = ev.moments.e_logw;
        }
      }
    }
    cache.e1.push_back(std::move(e1));
    cache.e2.push_back(std::move(e2));
    cache.e3.push_back(std::move(e3));

    const double varpi = ghd && msghd ? comp.varpi : (ghd ? 1.0 : 0.0);
    const double log_pi = std::log(model.pi(g));
    for (Eigen::Index i = 0; i < n; ++i) {
      double log_f = 0.0;
      double u = 0.0;
      if (varpi >= 1.0) {
        log_f = log_gh(i);
        u = 1.0;
      } else if (varpi <= 0.0) {
        log_f = log_ms(i);
        u = 0.0;
      } else {
        const double gh_part = std::log(varpi) + log_gh(i);
        log_f = log_sum_exp(gh_part, std::log1p(-varpi) + log_ms(i));
        u = std::exp(gh_part - log_f);
      }
      if (!std::isfinite(log_f) || !std::isfinite(u)) {
        std::ostringstream msg;
        msg << "non-finite density for observation " << i + 1 << " in component " << g + 1;
        throw NumericError(msg.str());
      }
      cache.log_density(i, g) = log_f;
      cache.uhat(i, g) = u;
      log_weighted(i, g) = log_pi + log_f;
    }
  }

  double loglik = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = labels.empty() ? kUnlabeled : labels[static_cast<std::size_t>(i)];
    if (label != kUnlabeled) {
      cache.zhat.row(i).setZero();
      cache.zhat(i, label) = 1.0;
      loglik += log_weighted(i, label);
      continue;
    }
    const double m = log_weighted.row(i).maxCoeff();
    double total = 0.0;
    for (int g = 0; g < G; ++g) {
      const double z = std::max(std::exp(log_weighted(i, g) - m), kRespFloor);
      cache.zhat(i, g) = z;
      total += z;
    }
    cache.zhat.row(i) /= total;
    loglik += m + std::log(total);
  }
  if (!std::isfinite(loglik)) throw NumericError("non-finite log-likelihood");
  cache.loglik = loglik;
  return cache;
}

SufficientStats compute_stats(const EStepCache& cache) {
  const Eigen::Index G = cache.zhat.cols();
  const Eigen::Index p = cache.e1.empty() ? 0 : cache.e1.front().cols();
  SufficientStats s;
  s.n_g = cache.zhat.colwise().sum().transpose();
  s.A = s.B = s.C = Eigen::VectorXd::Zero(G);
  s.ghd_weight = s.msghd_weight = Eigen::VectorXd::Zero(G);
  s.Ebar1 = s.Ebar2 = s.Ebar3 = Eigen::MatrixXd::Zero(G, p);
  s.s1bar = s.s2bar = Eigen::MatrixXd::Zero(G, p);
  for (Eigen::Index g = 0; g < G; ++g) {
    const Eigen::VectorXd z = cache.zhat.col(g);
    const Eigen::VectorXd zu = z.cwiseProduct(cache.uhat.col(g));
    const Eigen::VectorXd zv = z - zu;
    s.ghd_weight(g) = zu.sum();
    s.msghd_weight(g) = zv.sum();
    if (s.ghd_weight(g) > 0.0) {
      s.A(g) = zu.dot(cache.a.col(g)) / s.ghd_weight(g);
      s.B(g) = zu.dot(cache.b.col(g)) / s.ghd_weight(g);
      s.C(g) = zu.dot(cache.c.col(g)) / s.ghd_weight(g);
    }
    if (s.msghd_weight(g) > 0.0) {
      s.Ebar1.row(g) = zv.transpose() * cache.e1[g] / s.msghd_weight(g);
      s.Ebar2.row(g) = zv.transpose() * cache.e2[g] / s.msghd_weight(g);
      s.Ebar3.row(g) = zv.transpose() * cache.e3[g] / s.msghd_weight(g);
    }
    if (s.n_g(g) > 0.0) {
      s.s1bar.row(g) = z.transpose() * blend_s1(cache, static_cast<int>(g)) / s.n_g(g);
      s.s2bar.row(g) = z.transpose() * blend_s2(cache, static_cast<int>(g)) / s.n_g(g);
    }
  }
  return s;
}

MixingUpdate m_step_mixing(const EStepCache& cache, const MixtureModel& model) {
  const Eigen::Index n = cache.zhat.rows();
  const int G = static_cast<int>(cache.zhat.cols());
  const int p = model.dim();
  MixingUpdate out;
  const Eigen::VectorXd n_g = cache.zhat.colwise().sum().transpose();
  out.pi = n_g / static_cast<double>(n);
  out.varpi.resize(G);
  for (int g = 0; g < G; ++g) {
    if (n_g(g) < p + 1) {
      std::ostringstream msg;
      msg << "component " << g + 1 << " starved (effective size " << n_g(g) << " < " << p + 1
          << ")";
      throw DegenerateFitError(msg.str(), {});
    }
    if (model.family == Family::MCGHD) {
      const double v = cache.zhat.col(g).dot(cache.uhat.col(g)) / n_g(g);
      out.varpi(g) = std::clamp(v, 0.0, 1.0);
    } else {
      out.varpi(g) = fixed_varpi(model.family);
    }
  }
  out.pi /= out.pi.sum();
  return out;
}

LocationUpdate m_step_location_skewness(const Eigen::MatrixXd& data, const EStepCache& cache,
                                        const MixtureModel& model) {
  const int G = model.num_components();
  const int p = model.dim();
  LocationUpdate out;
  out.mu.resize(G, p);
  out.beta.resize(G, p);
  for (int g = 0; g < G; ++g) {
    const Eigen::MatrixXd y = data * model.components[g].gamma;
    const Eigen::VectorXd z = cache.zhat.col(g);
    const double ng = z.sum();
    const Eigen::MatrixXd s1 = blend_s1(cache, g);
    const Eigen::MatrixXd s2 = blend_s2(cache, g);
    for (int j = 0; j < p; ++j) {
      const double s1bar = z.dot(s1.col(j)) / ng;
      const double s2bar = z.dot(s2.col(j)) / ng;
      const Eigen::ArrayXd wmu = s1bar * s2.col(j).array() - 1.0;
      const Eigen::ArrayXd wbeta = s2bar - s2.col(j).array();
      const double denom = (z.array() * wmu).sum();
      if (std::abs(denom) < kDenomFloor) {
        out.mu(g, j) = z.dot(y.col(j)) / ng;
        out.beta(g, j) = 0.0;
        ++out.fallbacks;
        continue;
      }
      out.mu(g, j) = (z.array() * y.col(j).array() * wmu).sum() / denom;
      out.beta(g, j) = (z.array() * y.col(j).array() * wbeta).sum() / denom;
    }
  }
  return out;
}

PhiUpdate m_step_phi(const Eigen::MatrixXd& data, const EStepCache& cache,
                     const MixtureModel& model) {
  const int G = model.num_components();
  const int p = model.dim();
  PhiUpdate out;
  out.phi.resize(G, p);
  for (int g = 0; g < G; ++g) {
    const CGHDComponent& comp = model.components[g];
    const Eigen::MatrixXd r = (data * comp.gamma).rowwise() - comp.mu.transpose();
    const Eigen::VectorXd z = cache.zhat.col(g);
    const double ng = z.sum();
    const Eigen::MatrixXd s1 = blend_s1(cache, g);
    const Eigen::MatrixXd s2 = blend_s2(cache, g);
    for (int j = 0; j < p; ++j) {
      const double bj = comp.beta(j);
      const Eigen::ArrayXd terms = s2.col(j).array() * r.col(j).array().square() -
                                   2.0 * bj * r.col(j).array() + bj * bj * s1.col(j).array();
      const double value = (z.array() * terms).sum() / ng;
      if (!(value > kPhiFloor)) {
        out.phi(g, j) = kPhiFloor;
        ++out.floored;
      } else {
        out.phi(g, j) = value;
      }
    }
  }
  return out;
}

namespace {

// Per-observation pieces of the rotation objective for component g:
// D_ij = s2_ij / phi_j and c_ij = (s2_ij mu_j + beta_j) / phi_j.
struct GammaTerms {
  Eigen::VectorXd z;
  Eigen::MatrixXd d;
  Eigen::MatrixXd c;
};

GammaTerms gamma_terms(const EStepCache& cache, const CGHDComponent& comp, int g) {
  GammaTerms t;
  t.z = cache.zhat.col(g);
  const Eigen::MatrixXd s2 = blend_s2(cache, g);
  const Eigen::RowVectorXd inv_phi = comp.phi.cwiseInverse().transpose();
  t.d = s2.array().rowwise() * inv_phi.array();
  t.c = (s2.array().rowwise() * comp.mu.transpose().array()).rowwise() +
        comp.beta.transpose().array();
  t.c.array().rowwise() *= inv_phi.array();
  return t;
}

// Sum of z_i (1/2 y'D_i y - c_i'y) with the square completed: 1/2 D (y - c/D)^2.
// The dropped constant does not depend on the rotation, and the completed form
// avoids cancellation when some phi_j is tiny and the expanded terms are huge.
double objective(const Eigen::MatrixXd& data, const GammaTerms& t, const Eigen::MatrixXd& m) {
  const Eigen::ArrayXXd r = (data * m).array() - t.c.array() / t.d.array();
  const Eigen::ArrayXd per_obs = (0.5 * t.d.array() * r.square()).rowwise().sum();
  return (t.z.array() * per_obs).sum();
}

// Orthogonal maximizer of <-grad, M>: M = P R' for -grad = P S R'.
Eigen::MatrixXd procrustes(const Eigen::MatrixXd& grad) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(-grad, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

double gamma_objective(const Eigen::MatrixXd& data, const EStepCache& cache,
                       const MixtureModel& model, int g, const Eigen::MatrixXd& gamma) {
  return objective(data, gamma_terms(cache, model.components[g], g), gamma);
}

GammaUpdate m_step_gamma(const Eigen::MatrixXd& data, const EStepCache& cache,
                         const MixtureModel& model) {
  const int G = model.num_components();
  const int p = model.dim();
  GammaUpdate out;
  for (int g = 0; g < G; ++g) {
    const CGHDComponent& comp = model.components[g];
    if (p == 1) {
      out.gamma.push_back(Eigen::MatrixXd::Ones(1, 1));
      continue;
    }
    const GammaTerms t = gamma_terms(cache, comp, g);
    // Linear part of the objective's gradient: -sum_i z_i x_i c_i'.
    const Eigen::MatrixXd linear =
        -(data.transpose() * (t.c.array().colwise() * t.z.array()).matrix());
    const Eigen::VectorXd alpha1 = t.d.rowwise().maxCoeff();
    const Eigen::VectorXd alpha2 = data.rowwise().squaredNorm();
    const Eigen::RowVectorXd zd_alpha2 =
        (t.d.array().colwise() * (t.z.array() * alpha2.array())).colwise().sum();

    Eigen::MatrixXd current = comp.gamma;
    const double start = objective(data, t, current);
    double best = start;
    bool moved = false;
    for (int route = 0; route < 2; ++route) {
      const Eigen::MatrixXd y = data * current;
      Eigen::MatrixXd grad;
      if (route == 0) {
        // Majorize the quadratic through D_i - alpha1_i I <= 0.
        const Eigen::MatrixXd w =
            ((t.d.array().colwise() - alpha1.array()) * y.array()).colwise() * t.z.array();
        grad = data.transpose() * w + linear;
      } else {
        // Majorize through x_i x_i' - alpha2_i I <= 0.
        const Eigen::MatrixXd w = (t.d.array() * y.array()).colwise() * t.z.array();
        grad = data.transpose() * w - current * zd_alpha2.asDiagonal() + linear;
      }
      const Eigen::MatrixXd candidate = procrustes(grad);
      const double value = objective(data, t, candidate);
      if (std::isfinite(value) && value <= best) {
        best = value;
        current = candidate;
        moved = true;
      }
    }
    if (!moved || best > start + kGammaSlack) {
      current = comp.gamma;
      ++out.rejected;
    }
    out.gamma.push_back(std::move(current));
  }
  return out;
}

void fix_eigenvector_signs(CGHDComponent& comp) {
  for (Eigen::Index j = 0; j < comp.gamma.cols(); ++j) {
    Eigen::Index k = 0;
    comp.gamma.col(j).cwiseAbs().maxCoeff(&k);
    if (comp.gamma(k, j) < 0.0) {
      comp.gamma.col(j) *= -1.0;
      comp.mu(j) = -comp.mu(j);
      comp.beta(j) = -comp.beta(j);
    }
  }
}

double gig_hyper_objective(double omega, double lambda, double mean_w, double mean_winv,
                           double mean_logw) {
  return -log_bessel_k(lambda, omega) + (lambda - 1.0) * mean_logw -
         0.5 * omega * (mean_w + mean_winv);
}

HyperStep gig_hyper_step(double omega, double lambda, double mean_w, double mean_winv,
                         double mean_logw, std::optional<double> lambda_floor) {
  auto q = [&](double om, double la) {
    return gig_hyper_objective(om, la, mean_w, mean_winv, mean_logw);
  };
  auto floor_lambda = [&](double la) { return lambda_floor ? std::max(la, *lambda_floor) : la; };
  HyperStep out{omega, lambda, false};
  bool lambda_moved = false;
  bool omega_moved = false;

  // Index: multiplicative update, with a damped Newton step as fallback.
  const double q0 = q(omega, lambda);
  const double dlogk = dlog_bessel_k_dnu(lambda, omega);
  if (std::abs(dlogk) >= 1e-12) {
    const double candidate = floor_lambda(mean_logw * lambda / dlogk);
    if (std::isfinite(candidate) && q(omega, candidate) > q0) {
      out.lambda = candidate;
      lambda_moved = true;
    }
  }
  if (!lambda_moved) {
    const double h = 1e-3 * std::max(1.0, std::abs(lambda));
    const double curvature =
        -(log_bessel_k(lambda + h, omega) - 2.0 * log_bessel_k(lambda, omega) +
          log_bessel_k(lambda - h, omega)) /
        (h * h);
    const double slope = mean_logw - dlogk;
    if (curvature < 0.0 && std::isfinite(slope)) {
      double step = -slope / curvature;
      for (int k = 0; k < kMaxHalvings && !lambda_moved; ++k, step *= 0.5) {
        const double candidate = floor_lambda(lambda + step);
        if (candidate != lambda && q(omega, candidate) > q0) {
          out.lambda = candidate;
          lambda_moved = true;
        }
      }
    }
  }

  // Concentration: one Newton step, halved until q does not drop.
  const double la = out.lambda;
  const double q1 = q(omega, la);
  const double ratio = std::exp(log_bessel_k_ratio(la, omega));
  const double slope = -(la / omega - ratio) - 0.5 * (mean_w + mean_winv);
  const double dratio = ratio * ratio - (2.0 * la + 1.0) * ratio / omega - 1.0;
  const double curvature = la / (omega * omega) + dratio;
  if (curvature < 0.0 && std::isfinite(slope) && slope != 0.0) {
    double step = -slope / curvature;
    for (int k = 0; k < kMaxHalvings && !omega_moved; ++k, step *= 0.5) {
      const double candidate = std::clamp(omega + step, kMinOmega, kMaxOmega);
      if (candidate != omega && q(candidate, la) > q1) {
        out.omega = candidate;
        omega_moved = true;
      }
    }
  }
  out.rejected = !lambda_moved && !omega_moved;
  return out;
}

HyperUpdate m_step_gig_hyper(const SufficientStats& stats, const MixtureModel& model,
                             std::optional<double> lambda_floor) {
  HyperUpdate out;
  out.components = model.components;
  for (int g = 0; g < model.num_components(); ++g) {
    CGHDComponent& comp = out.components[g];
    if (uses_ghd(model.family) && stats.ghd_weight(g) > kBranchWeightFloor) {
      const HyperStep s =
          gig_hyper_step(comp.omega0, comp.lambda0, stats.A(g), stats.B(g), stats.C(g), {});
      comp.omega0 = s.omega;
      comp.lambda0 = s.lambda;
      out.rejected += s.rejected;
    }
    if (uses_msghd(model.family) && stats.msghd_weight(g) > kBranchWeightFloor) {
      for (int j = 0; j < comp.dim(); ++j) {
        const HyperStep s = gig_hyper_step(comp.omega(j), comp.lambda(j), stats.Ebar1(g, j),
                                           stats.Ebar2(g, j), stats.Ebar3(g, j), lambda_floor);
        comp.omega(j) = s.omega;
        comp.lambda(j) = s.lambda;
        out.rejected += s.rejected;
      }
    }
  }
  return out;
}

bool aitken_converged(std::span<const double> trace, double epsilon) {
  if (trace.size() < 3) return false;
  const double l0 = trace[trace.size() - 3];
  const double l1 = trace[trace.size() - 2];
  const double l2 = trace[trace.size() - 1];
  const double tol = 1e-12 * std::max(1.0, std::abs(l2));
  const double d1 = l1 - l0;
  const double d2 = l2 - l1;
  if (std::abs(d1) <= tol) return std::abs(d2) <= tol;
  const double a = d2 / d1;
  if (a == 1.0) return false;
  const double l_inf = l1 + d2 / (1.0 - a);
  const double gap = l_inf - l2;
  return gap >= 0.0 && gap < epsilon;
}

namespace {

FitResult run_em(const Eigen::MatrixXd& data, const FitConfig& config,
                 std::span<const int> labels, const Eigen::MatrixXd& start,
                 std::uint64_t seed) {
  const std::optional<double> floor = config.effective_lambda_floor();
  FitResult result;
  result.seed = seed;
  MixtureModel model = initial_model(data, start, config.family, floor);
  if (config.freeze_varpi) {
    for (auto& comp : model.components) comp.varpi = *config.freeze_varpi;
  }

  std::vector<double>& trace = result.loglik_trace;
  EStepCache cache;
  try {
    for (int iter = 0; iter < config.max_iter; ++iter) {
      cache = e_step(data, model, labels);
      trace.push_back(cache.loglik);
      if (aitken_converged(trace, config.epsilon)) {
        result.converged = true;
        break;
      }
      if (iter + 1 == config.max_iter) break;

      const MixingUpdate mix = m_step_mixing(cache, model);
      model.pi = mix.pi;
      if (model.family == Family::MCGHD && !config.freeze_varpi) {
        for (int g = 0; g < model.num_components(); ++g) {
          model.components[g].varpi = mix.varpi(g);
        }
      }

      const LocationUpdate loc = m_step_location_skewness(data, cache, model);
      result.diagnostics.mu_beta_fallbacks += loc.fallbacks;
      for (int g = 0; g < model.num_components(); ++g) {
        model.components[g].mu = loc.mu.row(g).transpose();
        model.components[g].beta = loc.beta.row(g).transpose();
      }

      const PhiUpdate phi = m_step_phi(data, cache, model);
      result.diagnostics.phi_floored += phi.floored;
      for (int g = 0; g < model.num_components(); ++g) {
        model.components[g].phi = phi.phi.row(g).transpose();
      }

      GammaUpdate gam = m_step_gamma(data, cache, model);
      result.diagnostics.gamma_rejected += gam.rejected;
      for (int g = 0; g < model.num_components(); ++g) {
        model.components[g].gamma = std::move(gam.gamma[g]);
        fix_eigenvector_signs(model.components[g]);
      }

      HyperUpdate hyper = m_step_gig_hyper(compute_stats(cache), model, floor);
      result.diagnostics.hyper_rejected += hyper.rejected;
      model.components = std::move(hyper.components);
    }
  } catch (const DegenerateFitError& e) {
    throw DegenerateFitError(e.what(), trace);
  } catch (const NumericError& e) {
    throw DegenerateFitError(std::string("numeric failure: ") + e.what(), trace);
  } catch (const DomainError& e) {
    throw DegenerateFitError(std::string("numeric failure: ") + e.what(), trace);
  }

  result.model = std::move(model);
  result.zhat = cache.zhat;
  result.map_labels = map_labels(cache.zhat);
  result.loglik = trace.back();
  result.n_iter = static_cast<int>(trace.size());
  result.bic = bic(result.loglik,
                   count_free_params(config.family, config.G, static_cast<int>(data.cols())),
                   static_cast<std::size_t>(data.rows()));
  return result;
}

void check_data(const Eigen::MatrixXd& data, const FitConfig& config) {
  config.validate();
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  if (p < 1) throw InputError("data has no columns");
  if (!data.allFinite()) throw InputError("data contains non-finite values");
  if (n <= config.G * (p + 1)) {
    std::ostringstream msg;
    msg << "need more than G*(p+1) = " << config.G * (p + 1) << " observations, got " << n;
    throw InputError(msg.str());
  }
}

FitResult fit_with_restarts(const Eigen::MatrixXd& raw, const FitConfig& config,
                            std::span<const int> labels) {
  check_data(raw, config);
  std::optional<Scaling> scaling;
  if (config.scale_data) scaling = Scaling::from_data(raw);
  const Eigen::MatrixXd data = scaling ? scaling->apply(raw) : raw;

  std::optional<FitResult> best;
  std::optional<DegenerateFitError> first_error;
  for (int r = 0; r < config.n_restarts; ++r) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
    Eigen::MatrixXd start;
    if (!labels.empty()) {
      start = label_responsibilities(labels, config.G);
    } else {
      switch (config.init) {
        case InitMethod::kKmeans:
          start = kmeans_init(data, config.G, seed);
          break;
        case InitMethod::kRandom:
          start = random_responsibilities(data.rows(), config.G, seed);
          break;
        case InitMethod::kLabels:
          if (config.initial_responsibilities.rows() != data.rows() ||
              config.initial_responsibilities.cols() != config.G) {
            throw InputError("initial responsibilities must be n x G");
          }
          start = config.initial_responsibilities;
          break;
      }
    }
    try {
      FitResult result = run_em(data, config, labels, start, seed);
      if (!best || result.loglik > best->loglik) best = std::move(result);
    } catch (const DegenerateFitError& e) {
      if (!first_error) first_error = e;
    }
  }
  if (!best) throw *first_error;
  best->scaling = scaling;
  return std::move(*best);
}

}  // namespace

FitResult fit(const Eigen::MatrixXd& data, const FitConfig& config) {
  return fit_with_restarts(data, config, {});
}

FitResult fit_classification(const Eigen::MatrixXd& data, std::span<const int> labels,
                             const FitConfig& config) {
  check_labels(labels, data.rows(), config.G);
  if (labels.empty()) throw InputError("classification needs a label vector");
  std::vector<int> present(config.G, 0);
  for (int label : labels) {
    if (label != kUnlabeled) ++present[label];
  }
  for (int g = 0; g < config.G; ++g) {
    if (present[g] == 0) {
      throw InputError("class " + std::to_string(g + 1) + " has no labeled observations");
    }
  }
  return fit_with_restarts(data, config, labels);
}

Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& data, const MixtureModel& model) {
  if (data.cols() != model.dim()) throw InputError("data width does not match the model");
  const int G = model.num_components();
  Eigen::MatrixXd out(data.rows(), G);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    Eigen::RowVectorXd logw(G);
    for (int g = 0; g < G; ++g) {
      logw(g) = std::log(model.pi(g)) +
                component_log_density(data.row(i).transpose(), model.components[g], model.family);
    }
    const double m = logw.maxCoeff();
    out.row(i) = (logw.array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

std::vector<int> predict(const Eigen::MatrixXd& data, const MixtureModel& model) {
  if (data.cols() != model.dim()) throw InputError("data width does not match the model");
  const int G = model.num_components();
  Eigen::MatrixXd logw(data.rows(), G);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (int g = 0; g < G; ++g) {
      logw(i, g) = std::log(model.pi(g)) +
                   component_log_density(data.row(i).transpose(), model.components[g],
                                         model.family);
    }
  }
  return first_maxima(logw);
}

DiscriminantResult fit_discriminant(const Eigen::MatrixXd& train, std::span<const int> labels,
                                    const Eigen::MatrixXd& test, const FitConfig& config) {
  for (int label : labels) {
    if (label == kUnlabeled) {
      throw InputError("discriminant analysis needs every training row labeled");
    }
  }
  if (test.cols() != train.cols()) {
    throw InputError("test data width does not match the training data");
  }
  DiscriminantResult out;
  out.fit = fit_classification(train, labels, config);
  const Eigen::MatrixXd scaled = out.fit.scaling ? out.fit.scaling->apply(test) : test;
  out.test_labels = predict(scaled, out.fit.model);
  return out;
}

}  // namespace mcghd
