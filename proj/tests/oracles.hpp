#pragma once

// Independent reference computations for the tests. Everything here goes
// through Boost quadrature or plain summation, never through the library's
// own Bessel or GIG code.

#include <Eigen/Dense>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "mcghd/model.hpp"

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, tol);
}

// Integral of exp(log_f) over the real line. The window is grown from `peak`
// in both directions until log_f has dropped 80 below its peak value.
inline double integrate_log(const std::function<double(double)>& log_f, double peak,
                            double tol = 1e-13) {
  const double top = log_f(peak);
  auto edge = [&](double dir) {
    double step = 0.5;
    double t = peak;
    for (int k = 0; k < 200; ++k) {
      t += dir * step;
      const double v = log_f(t);
      if (!(v > top - 80.0)) return t;
      step *= 1.5;
    }
    return t;
  };
  auto f = [&](double t) {
    const double v = log_f(t) - top;
    return std::isfinite(v) ? std::exp(v) : 0.0;
  };
  const double lo = edge(-1.0), hi = edge(1.0);
  return (integrate(f, lo, peak, tol) + integrate(f, peak, hi, tol)) * std::exp(top);
}

// log K_nu(x) = log int_0^inf exp(-x cosh t) cosh(nu t) dt.
inline double log_bessel_k(double nu, double x) {
  nu = std::abs(nu);
  // Integrand peak: x sinh t = nu tanh(nu t) roughly; solve x sinh t = nu.
  const double peak = nu > x ? std::asinh(nu / x) : 0.0;
  const double log_peak = -x * (std::cosh(peak) - 1.0) + nu * peak;
  auto f = [&](double t) {
    return std::exp(-x * (std::cosh(t) - 1.0) + nu * t - log_peak) *
           0.5 * (1.0 + std::exp(-2.0 * nu * t));
  };
  const double v = integrate(f, 0.0, peak) + integrate(f, peak, kInf);
  return std::log(v) + log_peak - x;
}

// d/dnu log K_nu(x) from the derivative of the same integral representation.
inline double dlog_bessel_k_dnu(double nu, double x) {
  const double a = std::abs(nu);
  const double peak = a > x ? std::asinh(a / x) : 0.0;
  const double log_peak = -x * (std::cosh(peak) - 1.0) + a * peak;
  auto base = [&](double t) {
    return std::exp(-x * (std::cosh(t) - 1.0) + a * t - log_peak);
  };
  auto k = [&](double t) { return base(t) * 0.5 * (1.0 + std::exp(-2.0 * a * t)); };
  auto dk = [&](double t) { return base(t) * t * 0.5 * (1.0 - std::exp(-2.0 * a * t)); };
  const double num = integrate(dk, 0.0, peak) + integrate(dk, peak, kInf);
  const double den = integrate(k, 0.0, peak) + integrate(k, peak, kInf);
  return (nu < 0 ? -1.0 : 1.0) * num / den;
}

struct Moments {
  double e_w, e_winv, e_logw;
};

// GIG(psi, chi, lambda) moments by quadrature in s = log w around the mode.
inline Moments gig_moments(double psi, double chi, double lambda) {
  const double mode = std::log((lambda + std::sqrt(lambda * lambda + psi * chi)) / psi);
  auto logf = [&](double s) {
    return lambda * (s - mode) - 0.5 * (psi * std::exp(s) + chi * std::exp(-s));
  };
  const double z = integrate_log(logf, mode);
  const double ew = integrate_log([&](double s) { return logf(s) + s; }, mode);
  const double einv = integrate_log([&](double s) { return logf(s) - s; }, mode);
  // E[log W - mode] split by sign so the log-integrand stays real.
  const double pos = integrate_log([&](double s) { return logf(s) + std::log(std::max(s - mode, 0.0)); }, mode + 1.0);
  const double neg = integrate_log([&](double s) { return logf(s) + std::log(std::max(mode - s, 0.0)); }, mode - 1.0);
  return {ew / z, einv / z, mode + (pos - neg) / z};
}

// GIG(psi, chi, lambda) CDF at each of the ascending points `ws`, accumulated
// piecewise between consecutive points.
inline std::vector<double> gig_cdf(const std::vector<double>& ws, double psi, double chi,
                                   double lambda) {
  const double mode = std::log((lambda + std::sqrt(lambda * lambda + psi * chi)) / psi);
  auto logf = [&](double s) {
    return lambda * (s - mode) - 0.5 * (psi * std::exp(s) + chi * std::exp(-s));
  };
  const double top = logf(mode);
  auto f = [&](double s) { return std::exp(logf(s) - top); };
  const double z = integrate_log([&](double s) { return logf(s) - top; }, mode);
  double lower = std::min(std::log(ws.front()), mode);
  for (double step = 0.5; logf(lower) > top - 80.0; step *= 1.5) lower -= step;
  std::vector<double> out;
  out.reserve(ws.size());
  double prev = lower;
  double acc = 0.0;
  for (double w : ws) {
    const double s = std::log(w);
    if (s > prev) acc += boost::math::quadrature::gauss<double, 20>::integrate(f, prev, s);
    prev = std::max(prev, s);
    out.push_back(acc / z);
  }
  return out;
}

// Univariate GHD density as an explicit normal variance-mean mixture:
// int N(y | mu + w beta, w phi) h(w) dw, with the GIG density written out by hand
// and its normalizer computed by quadrature.
inline double mixture_ghd_density(double y, double mu, double phi, double beta, double omega,
                                  double lambda) {
  auto log_h = [&](double w) { return (lambda - 1.0) * std::log(w) - 0.5 * omega * (w + 1.0 / w); };
  const double z = integrate([&](double w) { return std::exp(log_h(w)); }, 0.0, kInf);
  auto g = [&](double w) {
    const double r = y - mu - w * beta;
    return std::exp(log_h(w) - 0.5 * r * r / (w * phi)) / std::sqrt(2.0 * M_PI * w * phi);
  };
  return integrate(g, 0.0, kInf) / z;
}

// Brute-force pair-counting adjusted Rand index.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  long double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j];
      const bool sb = b[i] == b[j];
      if (sa && sb) ++n11;
      else if (sa) ++n10;
      else if (sb) ++n01;
      else ++n00;
    }
  }
  const long double total = n11 + n10 + n01 + n00;
  const long double expected = (n11 + n10) * (n11 + n01) / total;
  const long double max_index = 0.5L * ((n11 + n10) + (n11 + n01));
  if (max_index == expected) return 1.0;
  return static_cast<double>((n11 - expected) / (max_index - expected));
}

inline Eigen::MatrixXd random_orthogonal(int p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(p, p);
}

// Component with parameters drawn from moderate ranges.
inline mcghd::CGHDComponent random_component(int p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> loc(-2.0, 2.0), scale(0.5, 2.0), skew(-1.0, 1.0),
      conc(0.3, 5.0), index(-2.0, 2.0), weight(0.0, 1.0);
  mcghd::CGHDComponent c = mcghd::CGHDComponent::standard(p);
  c.gamma = random_orthogonal(p, rng);
  for (int j = 0; j < p; ++j) {
    c.mu(j) = loc(rng);
    c.phi(j) = scale(rng);
    c.beta(j) = skew(rng);
    c.omega(j) = conc(rng);
    c.lambda(j) = index(rng);
  }
  c.omega0 = conc(rng);
  c.lambda0 = index(rng);
  c.varpi = weight(rng);
  return c;
}

}  // namespace oracle
