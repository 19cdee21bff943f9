#include "mcghd/specfun.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mcghd/error.hpp"

namespace mcghd {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kPi = std::numbers::pi;
constexpr int kMaxIter = 10000;

// Orders above this use the Debye expansion instead of recurrence.
constexpr double kUniformAsymptoticOrder = 500.0;

void check_args(double nu, double x) {
  if (!std::isfinite(nu) || !std::isfinite(x) || x <= 0.0) {
    std::ostringstream msg;
    msg << "log_bessel_k: invalid arguments nu=" << nu << ", x=" << x;
    throw DomainError(msg.str());
  }
}

// K_mu(x), K_{mu+1}(x) for |mu| <= 1/2 (Temme 1975; Numerical Recipes bessik).
detail::LogBesselPair temme_start(double mu, double x) {
  if (x <= 2.0) {
    const double x2 = 0.5 * x;
    const double pimu = kPi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;

    // 1/Gamma(1 +- mu) and the Temme combinations gam1, gam2, free of the
    // cancellation that a direct difference of reciprocals would suffer.
    const double t_plus = boost::math::tgamma1pm1(mu);
    const double t_minus = boost::math::tgamma1pm1(-mu);
    const double gampl = 1.0 / (1.0 + t_plus);
    const double gammi = 1.0 / (1.0 + t_minus);
    const double gam1 = std::abs(mu) < kEps
                            ? -std::numbers::egamma
                            : (t_plus - t_minus) * gampl * gammi / (2.0 * mu);
    const double gam2 = 0.5 * (gammi + gampl);

    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl;
    double q = 0.5 / (e * gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i <= kMaxIter; ++i) {
      const double di = static_cast<double>(i);
      ff = (di * ff + p + q) / (di * di - mu * mu);
      c *= d / di;
      p /= di - mu;
      q /= di + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - di * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    return {std::log(sum), std::log(sum1) + std::log(2.0 / x)};
  }

  // Steed's continued fraction CF2 with Thompson-Barnett summation.
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= kMaxIter; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  h *= a1;
  const double log_kmu = 0.5 * std::log(kPi / (2.0 * x)) - x - std::log(s);
  const double log_ratio = std::log((mu + x + 0.5 - h) / x);
  return {log_kmu, log_kmu + log_ratio};
}

// Polynomials u_k(t) of the Debye expansion (Abramowitz & Stegun 9.3.9).
double debye_u(int k, double t) {
  const double t2 = t * t;
  switch (k) {
    case 1:
      return t * (3.0 - 5.0 * t2) / 24.0;
    case 2:
      return t2 * (81.0 + t2 * (-462.0 + t2 * 385.0)) / 1152.0;
    case 3:
      return t * t2 *
             (30375.0 + t2 * (-369603.0 + t2 * (765765.0 + t2 * -425425.0))) /
             414720.0;
    case 4:
      return t2 * t2 *
             (4465125.0 +
              t2 * (-94121676.0 +
                    t2 * (349922430.0 + t2 * (-446185740.0 + t2 * 185910725.0)))) /
             39813120.0;
    default:
      return 0.0;
  }
}

}  // namespace

namespace detail {

LogBesselPair log_bessel_k_recurrence(double nu, double x) {
  const int nl = static_cast<int>(std::floor(nu + 0.5));
  const double mu = nu - nl;
  LogBesselPair start = temme_start(mu, x);
  if (nl == 0) return start;

  // Upward recurrence on the ratio r_k = K_{mu+k+1}/K_{mu+k}:
  //   r_k = 2(mu+k)/x + 1/r_{k-1}.
  // The running product is folded into the log whenever it leaves a safe band.
  double ratio = std::exp(start.log_k_next - start.log_k);
  double log_k = start.log_k;
  double product = ratio;
  for (int k = 1; k < nl; ++k) {
    ratio = 2.0 * (mu + k) / x + 1.0 / ratio;
    product *= ratio;
    if (product > 1e280 || product < 1e-280) {
      log_k += std::log(product);
      product = 1.0;
    }
  }
  log_k += std::log(product);
  ratio = 2.0 * (mu + nl) / x + 1.0 / ratio;
  return {log_k, log_k + std::log(ratio)};
}

double log_bessel_k_uniform_asymptotic(double nu, double x) {
  const double z = x / nu;
  const double root = std::sqrt(1.0 + z * z);
  const double t = 1.0 / root;
  const double eta = root + std::log(z / (1.0 + root));
  double series = 1.0;
  double nu_pow = 1.0;
  for (int k = 1; k <= 4; ++k) {
    nu_pow *= nu;
    series += ((k % 2) ? -1.0 : 1.0) * debye_u(k, t) / nu_pow;
  }
  return 0.5 * std::log(kPi / (2.0 * nu)) - nu * eta - 0.5 * std::log(root) +
         std::log(series);
}

LogBesselPair log_bessel_k_pair(double nu, double x) {
  check_args(nu, x);
  if (nu < -0.5) {
    // K_nu = K_{-nu}: (K_nu, K_{nu+1}) = (K_{a+1}, K_a) with a = -nu-1 >= -1/2.
    const LogBesselPair swapped = log_bessel_k_pair(-nu - 1.0, x);
    return {swapped.log_k_next, swapped.log_k};
  }
  if (nu > kUniformAsymptoticOrder) {
    return {log_bessel_k_uniform_asymptotic(nu, x),
            log_bessel_k_uniform_asymptotic(nu + 1.0, x)};
  }
  return log_bessel_k_recurrence(nu, x);
}

}  // namespace detail

double log_bessel_k(double nu, double x) {
  check_args(nu, x);
  const double order = std::abs(nu);
  if (order > kUniformAsymptoticOrder) {
    return detail::log_bessel_k_uniform_asymptotic(order, x);
  }
  return detail::log_bessel_k_recurrence(order, x).log_k;
}

double log_bessel_k_ratio(double nu, double x) {
  const detail::LogBesselPair pair = detail::log_bessel_k_pair(nu, x);
  return pair.log_k_next - pair.log_k;
}

double dlog_bessel_k_dnu(double nu, double x) {
  check_args(nu, x);
  // log K_nu(x) behaves like log cosh(nu * log(2/x)) for small x, so the step
  // shrinks with log(2/x) to keep the truncation error at the 1e-12 level.
  const double h = 1e-3 / (1.0 + std::max(0.0, std::log(2.0 / x)));
  auto central = [&](double step) {
    return (log_bessel_k(nu + step, x) - log_bessel_k(nu - step, x)) / (2.0 * step);
  };
  const double coarse = central(h);
  const double fine = central(0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

BesselEval bessel_k_eval(double nu, double x) {
  const detail::LogBesselPair pair = detail::log_bessel_k_pair(nu, x);
  return {pair.log_k, pair.log_k_next - pair.log_k, dlog_bessel_k_dnu(nu, x)};
}

}  // namespace mcghd
