#include "mcghd/densities.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mcghd/error.hpp"
#include "mcghd/specfun.hpp"

namespace mcghd {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2 pi)

void check_dim(const Eigen::Ref<const Eigen::VectorXd>& x, const CGHDComponent& comp) {
  if (x.size() != comp.dim() || comp.gamma.rows() != comp.dim() ||
      comp.gamma.cols() != comp.dim()) {
    std::ostringstream msg;
    msg << "dimension mismatch: x has " << x.size() << " entries, component has "
        << comp.dim();
    throw InputError(msg.str());
  }
}

double finite_or_throw(double value, const char* where) {
  if (std::isnan(value) || value == std::numeric_limits<double>::infinity()) {
    throw NumericError(std::string(where) + ": non-finite log-density");
  }
  return value;
}

}  // namespace

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

double mahalanobis(const Eigen::Ref<const Eigen::VectorXd>& x, const CGHDComponent& comp) {
  check_dim(x, comp);
  const Eigen::VectorXd y = comp.gamma.transpose() * x;
  return ((y - comp.mu).array().square() / comp.phi.array()).sum();
}

double ghd_log_density(const Eigen::Ref<const Eigen::VectorXd>& x, const CGHDComponent& comp) {
  check_dim(x, comp);
  const int p = comp.dim();
  const Eigen::VectorXd y = comp.gamma.transpose() * x;
  const Eigen::ArrayXd centered = (y - comp.mu).array();
  const double delta = (centered.square() / comp.phi.array()).sum();
  const double skew = (comp.beta.array().square() / comp.phi.array()).sum();
  const double cross = (centered * comp.beta.array() / comp.phi.array()).sum();
  const double log_det = comp.phi.array().log().sum();

  const double chi = comp.omega0 + delta;
  const double psi = comp.omega0 + skew;
  const double order = comp.lambda0 - 0.5 * p;
  const double value = 0.5 * order * (std::log(chi) - std::log(psi)) +
                       log_bessel_k(order, std::sqrt(chi * psi)) - 0.5 * p * kLogTwoPi -
                       0.5 * log_det - log_bessel_k(comp.lambda0, comp.omega0) + cross;
  return finite_or_throw(value, "ghd_log_density");
}

double univariate_ghd_log_density(double y, double mu, double phi, double beta, double omega,
                                  double lambda) {
  const double centered = y - mu;
  const double chi = omega + centered * centered / phi;
  const double psi = omega + beta * beta / phi;
  const double order = lambda - 0.5;
  return 0.5 * order * (std::log(chi) - std::log(psi)) +
         log_bessel_k(order, std::sqrt(chi * psi)) - 0.5 * kLogTwoPi - 0.5 * std::log(phi) -
         log_bessel_k(lambda, omega) + centered * beta / phi;
}

double msghd_log_density(const Eigen::Ref<const Eigen::VectorXd>& x, const CGHDComponent& comp) {
  check_dim(x, comp);
  const Eigen::VectorXd y = comp.gamma.transpose() * x;
  double value = 0.0;
  for (int j = 0; j < comp.dim(); ++j) {
    value += univariate_ghd_log_density(y(j), comp.mu(j), comp.phi(j), comp.beta(j),
                                        comp.omega(j), comp.lambda(j));
  }
  return finite_or_throw(value, "msghd_log_density");
}

double cghd_log_density(const Eigen::Ref<const Eigen::VectorXd>& x, const CGHDComponent& comp) {
  if (comp.varpi >= 1.0) return ghd_log_density(x, comp);
  if (comp.varpi <= 0.0) return msghd_log_density(x, comp);
  return log_sum_exp(std::log(comp.varpi) + ghd_log_density(x, comp),
                     std::log1p(-comp.varpi) + msghd_log_density(x, comp));
}

double component_log_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const CGHDComponent& comp, Family family) {
  switch (family) {
    case Family::MGHD:
      return ghd_log_density(x, comp);
    case Family::MMSGHD:
    case Family::McMSGHD:
      return msghd_log_density(x, comp);
    case Family::MCGHD:
      break;
  }
  return cghd_log_density(x, comp);
}

double mixture_log_density(const Eigen::Ref<const Eigen::VectorXd>& x, const MixtureModel& model) {
  double total = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < model.num_components(); ++g) {
    total = log_sum_exp(total, std::log(model.pi(g)) +
                                   component_log_density(x, model.components[g], model.family));
  }
  return total;
}

Eigen::VectorXd mixture_log_density_rows(const Eigen::MatrixXd& data, const MixtureModel& model) {
  Eigen::VectorXd out(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Eigen::VectorXd x = data.row(i).transpose();
    out(i) = mixture_log_density(x, model);
  }
  return out;
}

}  // namespace mcghd
