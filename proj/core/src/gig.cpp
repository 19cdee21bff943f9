#include "mcghd/gig.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mcghd/error.hpp"
#include "mcghd/specfun.hpp"

namespace mcghd {
namespace {

std::atomic<std::uint64_t> g_omega_clamps{0};

double floor_omega(double omega) {
  if (omega < kMinOmega) {
    g_omega_clamps.fetch_add(1, std::memory_order_relaxed);
    return kMinOmega;
  }
  return omega;
}

void check_params(const GIGParams& p) {
  if (!(std::isfinite(p.omega) && std::isfinite(p.eta) && std::isfinite(p.lambda)) ||
      p.omega <= 0.0 || p.eta <= 0.0) {
    std::ostringstream msg;
    msg << "invalid GIG parameters omega=" << p.omega << ", eta=" << p.eta
        << ", lambda=" << p.lambda;
    throw DomainError(msg.str());
  }
}

double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  while (u == 0.0) u = unif(rng);
  return u;
}

// Mode of the standardized density x^(lambda-1) exp(-omega/2 (x + 1/x)), lambda >= 0.
double standard_mode(double lambda, double omega) {
  if (lambda >= 1.0) {
    return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) /
           omega;
  }
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

}  // namespace

std::uint64_t gig_omega_clamp_count() { return g_omega_clamps.load(); }
void reset_gig_omega_clamp_count() { g_omega_clamps.store(0); }

GIGParams to_scale_form(const GIGClassicParams& c) {
  return {std::sqrt(c.psi * c.chi), std::sqrt(c.chi / c.psi), c.lambda};
}

GIGClassicParams to_classic_form(const GIGParams& p) {
  return {p.omega / p.eta, p.omega * p.eta, p.lambda};
}

double gig_log_density(double w, const GIGParams& params) {
  check_params(params);
  if (!(w > 0.0) || !std::isfinite(w)) {
    std::ostringstream msg;
    msg << "gig_log_density: w must be positive, got " << w;
    throw DomainError(msg.str());
  }
  const double omega = floor_omega(params.omega);
  const double ratio = w / params.eta;
  return (params.lambda - 1.0) * std::log(ratio) - std::log(2.0 * params.eta) -
         log_bessel_k(params.lambda, omega) - 0.5 * omega * (ratio + 1.0 / ratio);
}

double gig_log_density(double w, const GIGClassicParams& params) {
  if (!(params.psi > 0.0) || !(params.chi > 0.0)) {
    throw DomainError("gig_log_density: psi and chi must be positive");
  }
  if (!(w > 0.0) || !std::isfinite(w)) {
    std::ostringstream msg;
    msg << "gig_log_density: w must be positive, got " << w;
    throw DomainError(msg.str());
  }
  const double omega = std::sqrt(params.psi * params.chi);
  return 0.5 * params.lambda * std::log(params.psi / params.chi) +
         (params.lambda - 1.0) * std::log(w) - std::log(2.0) -
         log_bessel_k(params.lambda, floor_omega(omega)) -
         0.5 * (params.psi * w + params.chi / w);
}

namespace {

GIGEvaluation evaluate(double omega, double eta, double lambda) {
  GIGEvaluation out{};
  GIGMoments& m = out.moments;
  if (lambda > 0.0) {
    // E[1/W] = K_{lambda-1}/K_lambda / eta: take the ratio directly, since the
    // three-term identity subtracts two nearly equal terms here.
    const detail::LogBesselPair pair = detail::log_bessel_k_pair(lambda - 1.0, omega);
    const double q = std::exp(pair.log_k_next - pair.log_k);  // K_lambda/K_{lambda-1}
    out.log_bessel = pair.log_k_next;
    m.e_winv = 1.0 / (q * eta);
    m.e_w = eta * (1.0 / q + 2.0 * lambda / omega);
  } else {
    const detail::LogBesselPair pair = detail::log_bessel_k_pair(lambda, omega);
    const double r = std::exp(pair.log_k_next - pair.log_k);  // K_{lambda+1}/K_lambda
    out.log_bessel = pair.log_k;
    m.e_w = eta * r;
    m.e_winv = (r - 2.0 * lambda / omega) / eta;
  }
  m.e_logw = std::log(eta) + dlog_bessel_k_dnu(lambda, omega);
  return out;
}

}  // namespace

GIGMoments gig_expectations(const GIGParams& params) {
  check_params(params);
  return evaluate(floor_omega(params.omega), params.eta, params.lambda).moments;
}

GIGEvaluation gig_evaluate(const GIGClassicParams& params) {
  if (!(params.psi > 0.0) || !(params.chi > 0.0) || !std::isfinite(params.psi) ||
      !std::isfinite(params.chi) || !std::isfinite(params.lambda)) {
    std::ostringstream msg;
    msg << "invalid GIG parameters psi=" << params.psi << ", chi=" << params.chi
        << ", lambda=" << params.lambda;
    throw DomainError(msg.str());
  }
  return evaluate(floor_omega(std::sqrt(params.psi * params.chi)),
                  std::sqrt(params.chi / params.psi), params.lambda);
}

GIGMoments gig_expectations(const GIGClassicParams& params) {
  if (!(params.psi > 0.0) || !(params.chi > 0.0)) {
    throw DomainError("gig_expectations: psi and chi must be positive");
  }
  return gig_expectations(to_scale_form(params));
}

GIGClassicParams ghd_latent_posterior(const Eigen::Ref<const Eigen::VectorXd>& x,
                                      const CGHDComponent& comp) {
  const int p = comp.dim();
  if (x.size() != p) throw InputError("ghd_latent_posterior: dimension mismatch");
  if ((comp.phi.array() <= 0.0).any()) {
    throw NumericError("ghd_latent_posterior: scale matrix is not positive definite");
  }
  const Eigen::VectorXd y = comp.gamma.transpose() * x;
  const double delta = ((y - comp.mu).array().square() / comp.phi.array()).sum();
  const double skew = (comp.beta.array().square() / comp.phi.array()).sum();
  return {comp.omega0 + skew, comp.omega0 + delta, comp.lambda0 - 0.5 * p};
}

// Ratio-of-uniforms (Dagpunar 1989; Lehner 1989) and the constant-hat
// rejection method of Hoermann & Leydold (2014), on the standardized law.
GIGSampler::GIGSampler(const GIGParams& params) {
  check_params(params);
  omega_ = floor_omega(params.omega);
  eta_ = params.eta;
  invert_ = params.lambda < 0.0;
  lambda_ = std::abs(params.lambda);

  const double lambda = lambda_;
  const double omega = omega_;
  if (lambda > 2.0 || omega > 3.0) {
    method_ = Method::kRouShift;
    t_ = 0.5 * (lambda - 1.0);
    s_ = 0.25 * omega;
    mode_ = standard_mode(lambda, omega);
    log_norm_ = t_ * std::log(mode_) - s_ * (mode_ + 1.0 / mode_);
    // Extremes of (x - m) sqrt(f(x)) from the cubic y^3 + a y^2 + b y + c = 0.
    const double a = -(2.0 * (lambda + 1.0) / omega + mode_);
    const double b = 2.0 * (lambda - 1.0) * mode_ / omega - 1.0;
    const double c = mode_;
    const double pp = b - a * a / 3.0;
    const double qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const double fi = std::acos(-qq / (2.0 * std::sqrt(-(pp * pp * pp) / 27.0)));
    const double fak = 2.0 * std::sqrt(-pp / 3.0);
    const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
    const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
    u_max_ = (y1 - mode_) * std::exp(t_ * std::log(y1) - s_ * (y1 + 1.0 / y1) - log_norm_);
    u_min_ = (y2 - mode_) * std::exp(t_ * std::log(y2) - s_ * (y2 + 1.0 / y2) - log_norm_);
  } else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    method_ = Method::kRouNoShift;
    t_ = 0.5 * (lambda - 1.0);
    s_ = 0.25 * omega;
    mode_ = standard_mode(lambda, omega);
    log_norm_ = t_ * std::log(mode_) - s_ * (mode_ + 1.0 / mode_);
    const double ym =
        ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
    u_min_ = 0.0;
    u_max_ = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s_ * (ym + 1.0 / ym) - log_norm_);
  } else {
    method_ = Method::kRejection;
    mode_ = standard_mode(lambda, omega);
    x0_ = omega / (1.0 - lambda);
    k0_ = std::exp((lambda - 1.0) * std::log(mode_) - 0.5 * omega * (mode_ + 1.0 / mode_));
    area_[0] = k0_ * x0_;
    if (x0_ >= 2.0 / omega) {
      k1_ = 0.0;
      area_[1] = 0.0;
      k2_ = std::pow(x0_, lambda - 1.0);
      area_[2] = k2_ * 2.0 * std::exp(-omega * x0_ / 2.0) / omega;
    } else {
      k1_ = std::exp(-omega);
      area_[1] = lambda == 0.0
                     ? k1_ * std::log(2.0 / (omega * omega))
                     : k1_ / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0_, lambda));
      k2_ = std::pow(2.0 / omega, lambda - 1.0);
      area_[2] = k2_ * 2.0 * std::exp(-1.0) / omega;
    }
    area_total_ = area_[0] + area_[1] + area_[2];
  }
}

double GIGSampler::draw_standard(Rng& rng) const {
  switch (method_) {
    case Method::kRouShift:
      for (;;) {
        const double u = u_min_ + uniform_open(rng) * (u_max_ - u_min_);
        const double v = uniform_open(rng);
        const double x = u / v + mode_;
        if (x > 0.0 && std::log(v) <= t_ * std::log(x) - s_ * (x + 1.0 / x) - log_norm_) {
          return x;
        }
      }
    case Method::kRouNoShift:
      for (;;) {
        const double u = u_max_ * uniform_open(rng);
        const double v = uniform_open(rng);
        const double x = u / v;
        if (std::log(v) <= t_ * std::log(x) - s_ * (x + 1.0 / x) - log_norm_) return x;
      }
    case Method::kRejection:
      break;
  }

  const double lambda = lambda_;
  const double omega = omega_;
  for (;;) {
    double v = area_total_ * uniform_open(rng);
    double x = 0.0;
    double hx = 0.0;
    if (v <= area_[0]) {
      x = x0_ * v / area_[0];
      hx = k0_;
    } else if (v -= area_[0]; v <= area_[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1_ / x;
      } else {
        x = std::pow(std::pow(x0_, lambda) + lambda / k1_ * v, 1.0 / lambda);
        hx = k1_ * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area_[1];
      const double a = std::max(x0_, 2.0 / omega);
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * a) - omega / (2.0 * k2_) * v);
      hx = k2_ * std::exp(-omega / 2.0 * x);
    }
    const double u = uniform_open(rng) * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

double GIGSampler::operator()(Rng& rng) const {
  const double x = draw_standard(rng);
  return invert_ ? eta_ / x : eta_ * x;
}

std::vector<double> gig_sample(const GIGParams& params, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InputError("gig_sample: n must be at least 1");
  const GIGSampler sampler(params);
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& w : out) w = sampler(rng);
  return out;
}

}  // namespace mcghd
