#pragma once

// Modified Bessel function of the third kind K_nu(x) for real order, evaluated
// entirely in log scale. Raw K values are never returned: the arguments visited
// by EM produce values far outside the double range.

namespace mcghd {

/// log K_nu(x). Throws DomainError for x <= 0 or non-finite input.
double log_bessel_k(double nu, double x);

/// d/dnu log K_nu(x), by central differences with Richardson extrapolation.
double dlog_bessel_k_dnu(double nu, double x);

/// log K_{nu+1}(x) - log K_nu(x).
double log_bessel_k_ratio(double nu, double x);

/// The quantities the GIG moments need, computed with one shared evaluation.
struct BesselEval {
  double log_value;  ///< log K_nu(x)
  double log_ratio;  ///< log K_{nu+1}(x) - log K_nu(x)
  double dlog_dnu;   ///< d/dnu log K_nu(x)
};

BesselEval bessel_k_eval(double nu, double x);

namespace detail {

struct LogBesselPair {
  double log_k;       // log K_nu(x)
  double log_k_next;  // log K_{nu+1}(x)
};

/// Both K_nu and K_{nu+1}; valid for any real nu.
LogBesselPair log_bessel_k_pair(double nu, double x);

/// Temme series (x <= 2) or Steed continued fraction (x > 2) for |mu| <= 1/2,
/// followed by upward recurrence. Requires nu >= -1/2.
LogBesselPair log_bessel_k_recurrence(double nu, double x);

/// Debye uniform asymptotic expansion, accurate for large nu. Requires nu > 0.
double log_bessel_k_uniform_asymptotic(double nu, double x);

}  // namespace detail
}  // namespace mcghd
