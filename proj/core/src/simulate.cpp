#include "mcghd/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <string>

#include "mcghd/error.hpp"
#include "mcghd/gig.hpp"

namespace mcghd {
namespace {

// Row draws share one RNG so the pure samplers and the coalesced sampler
// consume identical streams when their parameters coincide.
class RowSampler {
 public:
  explicit RowSampler(const CGHDComponent& comp) : comp_(comp), ghd_({comp.omega0, 1.0, comp.lambda0}) {
    comp.validate();
    for (int j = 0; j < comp.dim(); ++j) {
      msghd_.emplace_back(GIGParams{comp.omega(j), 1.0, comp.lambda(j)});
    }
    sqrt_phi_ = comp.phi.array().sqrt();
  }

  Eigen::VectorXd ghd(Rng& rng) {
    const double w = ghd_(rng);
    Eigen::VectorXd y(comp_.dim());
    for (int j = 0; j < comp_.dim(); ++j) {
      y(j) = comp_.mu(j) + w * comp_.beta(j) + std::sqrt(w) * sqrt_phi_(j) * normal_(rng);
    }
    return comp_.gamma * y;
  }

  Eigen::VectorXd msghd(Rng& rng) {
    Eigen::VectorXd y(comp_.dim());
    for (int j = 0; j < comp_.dim(); ++j) {
      const double w = msghd_[j](rng);
      y(j) = comp_.mu(j) + w * comp_.beta(j) + std::sqrt(w) * sqrt_phi_(j) * normal_(rng);
    }
    return comp_.gamma * y;
  }

 private:
  const CGHDComponent& comp_;
  GIGSampler ghd_;
  std::vector<GIGSampler> msghd_;
  Eigen::ArrayXd sqrt_phi_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

CGHDComponent component_from(const Eigen::VectorXd& centre, const Eigen::MatrixXd& sigma,
                             const Eigen::VectorXd& skew, const ScenarioSpec& spec) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  CGHDComponent comp;
  comp.gamma = eig.eigenvectors();
  comp.phi = eig.eigenvalues();
  comp.mu = comp.gamma.transpose() * centre;
  comp.beta = comp.gamma.transpose() * skew;
  comp.omega = Eigen::VectorXd::Constant(spec.p, spec.omega_fixed);
  comp.lambda = Eigen::VectorXd::Constant(spec.p, spec.lambda_fixed);
  comp.omega0 = spec.omega_fixed;
  comp.lambda0 = spec.lambda_fixed;
  comp.varpi = spec.generator == Generator::kGHD ? 1.0 : 0.0;
  return comp;
}

}  // namespace

Eigen::MatrixXd sample_ghd(const CGHDComponent& comp, std::size_t n, std::uint64_t seed) {
  RowSampler sampler(comp);
  Rng rng(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), comp.dim());
  for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = sampler.ghd(rng);
  return out;
}

Eigen::MatrixXd sample_msghd(const CGHDComponent& comp, std::size_t n, std::uint64_t seed) {
  RowSampler sampler(comp);
  Rng rng(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), comp.dim());
  for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = sampler.msghd(rng);
  return out;
}

Eigen::MatrixXd sample_cghd(const CGHDComponent& comp, std::size_t n, std::uint64_t seed,
                            std::vector<int>* from_ghd) {
  RowSampler sampler(comp);
  Rng rng(seed);
  std::bernoulli_distribution coin(std::clamp(comp.varpi, 0.0, 1.0));
  const bool mixed = comp.varpi > 0.0 && comp.varpi < 1.0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), comp.dim());
  if (from_ghd) from_ghd->assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool use_ghd = mixed ? coin(rng) : comp.varpi >= 1.0;
    if (from_ghd) (*from_ghd)[i] = use_ghd ? 1 : 0;
    out.row(static_cast<Eigen::Index>(i)) = use_ghd ? sampler.ghd(rng) : sampler.msghd(rng);
  }
  return out;
}

std::string_view generator_name(Generator g) {
  switch (g) {
    case Generator::kGaussian:
      return "gaussian";
    case Generator::kSkewNormal:
      return "skew_normal";
    case Generator::kGHD:
      return "ghd";
    case Generator::kMSGHD:
      return "msghd";
  }
  return "unknown";
}

Generator parse_generator(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Generator g : {Generator::kGaussian, Generator::kSkewNormal, Generator::kGHD,
                      Generator::kMSGHD}) {
    if (lower == generator_name(g)) return g;
  }
  throw InputError("unknown generator '" + std::string(name) +
                   "' (expected gaussian, skew_normal, ghd or msghd)");
}

void ScenarioSpec::validate() const {
  if (p < 1 || G < 1 || n_per_component < 1) {
    throw InputError("scenario counts must be positive");
  }
  if (!(hypercube_side > 0.0)) throw InputError("hypercube side must be positive");
  if (!(corr_min <= corr_max) || !(skew_min <= skew_max)) {
    throw InputError("scenario ranges must be ordered");
  }
  if (corr_min < -1.0 || corr_max > 1.0) throw InputError("correlations must lie in [-1, 1]");
  if (!(omega_fixed > 0.0) || !std::isfinite(lambda_fixed)) {
    throw InputError("invalid latent-weight parameters");
  }
}

Eigen::MatrixXd random_correlation(int p, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) s(i, j) = s(j, i) = unif(rng);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  constexpr double kMinEig = 1e-3;
  if (eig.eigenvalues().minCoeff() < kMinEig) {
    const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(kMinEig);
    s = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    const Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
    s = d.asDiagonal() * s * d.asDiagonal();
  }
  return s;
}

Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> centre_dist(0.0, spec.hypercube_side);
  std::uniform_real_distribution<double> skew_dist(spec.skew_min, spec.skew_max);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::Index n_g = spec.n_per_component;
  Scenario out;
  out.data.resize(n_g * spec.G, spec.p);
  out.labels.reserve(static_cast<std::size_t>(n_g * spec.G));
  for (int g = 0; g < spec.G; ++g) {
    Eigen::VectorXd centre(spec.p), skew(spec.p);
    for (int j = 0; j < spec.p; ++j) centre(j) = centre_dist(rng);
    const Eigen::MatrixXd sigma = random_correlation(spec.p, spec.corr_min, spec.corr_max, rng());
    for (int j = 0; j < spec.p; ++j) skew(j) = skew_dist(rng);
    const std::uint64_t draw_seed = rng();

    Eigen::MatrixXd block;
    switch (spec.generator) {
      case Generator::kGaussian:
      case Generator::kSkewNormal: {
        const Eigen::MatrixXd chol = sigma.llt().matrixL();
        Rng draw(draw_seed);
        block.resize(n_g, spec.p);
        for (Eigen::Index i = 0; i < n_g; ++i) {
          Eigen::VectorXd z(spec.p);
          for (int j = 0; j < spec.p; ++j) z(j) = normal(draw);
          Eigen::VectorXd x = centre + chol * z;
          if (spec.generator == Generator::kSkewNormal) x += std::abs(normal(draw)) * skew;
          block.row(i) = x.transpose();
        }
        break;
      }
      case Generator::kGHD:
        block = sample_ghd(component_from(centre, sigma, skew, spec),
                           static_cast<std::size_t>(n_g), draw_seed);
        break;
      case Generator::kMSGHD:
        block = sample_msghd(component_from(centre, sigma, skew, spec),
                             static_cast<std::size_t>(n_g), draw_seed);
        break;
    }
    out.data.middleRows(g * n_g, n_g) = block;
    out.labels.insert(out.labels.end(), static_cast<std::size_t>(n_g), g);
  }
  return out;
}

}  // namespace mcghd
