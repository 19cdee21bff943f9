#include "mcghd/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "mcghd/error.hpp"

namespace mcghd {

std::string_view family_name(Family family) {
  switch (family) {
    case Family::MGHD:
      return "mghd";
    case Family::MMSGHD:
      return "mmsghd";
    case Family::McMSGHD:
      return "mcmsghd";
    case Family::MCGHD:
      return "mcghd";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Family f : kAllFamilies) {
    if (lower == family_name(f)) return f;
  }
  throw InputError("unknown model family '" + std::string(name) +
                   "' (expected mghd, mmsghd, mcmsghd or mcghd)");
}

double fixed_varpi(Family family) {
  switch (family) {
    case Family::MGHD:
      return 1.0;
    case Family::MMSGHD:
    case Family::McMSGHD:
      return 0.0;
    case Family::MCGHD:
      break;
  }
  return -1.0;
}

CGHDComponent CGHDComponent::standard(int p) {
  CGHDComponent c;
  c.mu = Eigen::VectorXd::Zero(p);
  c.gamma = Eigen::MatrixXd::Identity(p, p);
  c.phi = Eigen::VectorXd::Ones(p);
  c.beta = Eigen::VectorXd::Zero(p);
  c.omega = Eigen::VectorXd::Ones(p);
  c.lambda = Eigen::VectorXd::Constant(p, -0.5);
  return c;
}

void CGHDComponent::validate(bool convex) const {
  const int p = dim();
  auto fail = [](const std::string& what) { throw InputError("invalid component: " + what); };
  if (p < 1) fail("dimension must be at least 1");
  if (gamma.rows() != p || gamma.cols() != p || phi.size() != p || beta.size() != p ||
      omega.size() != p || lambda.size() != p) {
    fail("inconsistent parameter dimensions");
  }
  const Eigen::MatrixXd gram = gamma.transpose() * gamma - Eigen::MatrixXd::Identity(p, p);
  if (gram.cwiseAbs().maxCoeff() > 1e-10) fail("gamma is not orthogonal");
  if (!(phi.array() > 0.0).all()) fail("phi entries must be positive");
  if (!(omega.array() > 0.0).all()) fail("omega entries must be positive");
  if (!(omega0 > 0.0)) fail("omega0 must be positive");
  if (!(varpi >= 0.0 && varpi <= 1.0)) fail("varpi must lie in [0, 1]");
  if (!mu.allFinite() || !beta.allFinite() || !lambda.allFinite() || !std::isfinite(lambda0)) {
    fail("non-finite parameter");
  }
  if (convex && !(lambda.array() > 1.0).all()) fail("convex family requires lambda > 1");
}

void MixtureModel::validate() const {
  const int g = num_components();
  if (g < 1) throw InputError("mixture needs at least one component");
  if (pi.size() != g) throw InputError("mixing proportions do not match component count");
  if (!(pi.array() > 0.0).all()) throw InputError("mixing proportions must be positive");
  if (std::abs(pi.sum() - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "mixing proportions sum to " << pi.sum() << ", not 1";
    throw InputError(msg.str());
  }
  const double fixed = fixed_varpi(family);
  for (const auto& c : components) {
    if (c.dim() != dim()) throw InputError("components differ in dimension");
    c.validate(family == Family::McMSGHD);
    if (fixed >= 0.0 && c.varpi != fixed) {
      throw InputError("inner weight inconsistent with family " + std::string(family_name(family)));
    }
  }
}

}  // namespace mcghd
