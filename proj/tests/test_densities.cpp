#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mcghd/densities.hpp"
#include "mcghd/error.hpp"
#include "oracles.hpp"

using namespace mcghd;

namespace {

// Multivariate normal variance-mean mixture density integrated over the latent
// weight, with Sigma assembled densely.
double mixture_density_oracle(const Eigen::VectorXd& x, const CGHDComponent& c) {
  const int p = c.dim();
  const Eigen::MatrixXd sigma = c.gamma * c.phi.asDiagonal() * c.gamma.transpose();
  const Eigen::MatrixXd inv = sigma.inverse();
  const double logdet = std::log(sigma.determinant());
  const Eigen::VectorXd m = c.gamma * c.mu, b = c.gamma * c.beta;
  auto log_h = [&](double w) {
    return (c.lambda0 - 1.0) * std::log(w) - 0.5 * c.omega0 * (w + 1.0 / w);
  };
  const double z = oracle::integrate([&](double w) { return std::exp(log_h(w)); }, 0.0, oracle::kInf);
  auto g = [&](double w) {
    const Eigen::VectorXd r = x - m - w * b;
    const double q = r.dot(inv * r) / w;
    return std::exp(log_h(w) - 0.5 * q - 0.5 * p * std::log(2.0 * M_PI * w) - 0.5 * logdet);
  };
  return oracle::integrate(g, 0.0, oracle::kInf, 1e-12) / z;
}

Eigen::VectorXd random_point(int p, std::mt19937_64& rng, double spread = 3.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Eigen::VectorXd x(p);
  for (int j = 0; j < p; ++j) x(j) = u(rng);
  return x;
}

}  // namespace

TEST(Mahalanobis, DiagonalExample) {
  CGHDComponent c = CGHDComponent::standard(2);
  c.mu << 1.0, 2.0;
  c.phi << 1.0, 4.0;
  EXPECT_NEAR(mahalanobis(Eigen::Vector2d(2.0, 4.0), c), 2.0, 1e-15);
}

TEST(Mahalanobis, MatchesDenseInverse) {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 100; ++k) {
    const CGHDComponent c = oracle::random_component(4, rng);
    const Eigen::VectorXd x = random_point(4, rng);
    const Eigen::MatrixXd sigma = c.gamma * c.phi.asDiagonal() * c.gamma.transpose();
    const Eigen::VectorXd r = x - c.gamma * c.mu;
    EXPECT_NEAR(mahalanobis(x, c), r.dot(sigma.inverse() * r), 1e-10);
  }
}

TEST(GHDDensity, UnivariateMatchesLatentIntegral) {
  for (double y : {-3.0, -0.4, 0.0, 1.1, 5.0}) {
    const double ref = oracle::mixture_ghd_density(y, 0.3, 1.7, -0.6, 0.8, 1.3);
    EXPECT_NEAR(univariate_ghd_log_density(y, 0.3, 1.7, -0.6, 0.8, 1.3), std::log(ref), 1e-9) << y;
  }
}

TEST(GHDDensity, MultivariateMatchesLatentIntegral) {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 20; ++k) {
    const CGHDComponent c = oracle::random_component(3, rng);
    const Eigen::VectorXd x = random_point(3, rng);
    EXPECT_NEAR(ghd_log_density(x, c), std::log(mixture_density_oracle(x, c)), 1e-8);
  }
}

TEST(GHDDensity, SymmetricWithoutSkewness) {
  for (double d : {0.1, 1.0, 4.0}) {
    EXPECT_NEAR(univariate_ghd_log_density(1.0 + d, 1.0, 2.0, 0.0, 0.5, -1.5),
                univariate_ghd_log_density(1.0 - d, 1.0, 2.0, 0.0, 0.5, -1.5), 1e-13);
  }
}

TEST(MSGHDDensity, ProductOfRotatedUnivariates) {
  std::mt19937_64 rng(43);
  for (int k = 0; k < 20; ++k) {
    const CGHDComponent c = oracle::random_component(3, rng);
    const Eigen::VectorXd x = random_point(3, rng);
    const Eigen::VectorXd y = c.gamma.transpose() * x;
    double ref = 0.0;
    for (int j = 0; j < 3; ++j) {
      ref += std::log(oracle::mixture_ghd_density(y(j), c.mu(j), c.phi(j), c.beta(j), c.omega(j),
                                                  c.lambda(j)));
    }
    EXPECT_NEAR(msghd_log_density(x, c), ref, 1e-8);
  }
}

TEST(Reductions, ExactSpecialCases) {
  std::mt19937_64 rng(44);
  for (int k = 0; k < 1000; ++k) {
    const int p = 1 + k % 4;
    CGHDComponent c = oracle::random_component(p, rng);
    const Eigen::VectorXd x = random_point(p, rng, 6.0);
    c.varpi = 1.0;
    EXPECT_NEAR(cghd_log_density(x, c), ghd_log_density(x, c), 1e-12);
    c.varpi = 0.0;
    EXPECT_NEAR(cghd_log_density(x, c), msghd_log_density(x, c), 1e-12);

    CGHDComponent one = oracle::random_component(1, rng);
    one.omega(0) = one.omega0;
    one.lambda(0) = one.lambda0;
    const Eigen::VectorXd y = random_point(1, rng, 6.0);
    EXPECT_NEAR(msghd_log_density(y, one), ghd_log_density(y, one), 1e-12);
  }
}

TEST(Reductions, AffineInInnerWeight) {
  std::mt19937_64 rng(45);
  for (int k = 0; k < 100; ++k) {
    const CGHDComponent c = oracle::random_component(3, rng);
    const Eigen::VectorXd x = random_point(3, rng);
    const double direct = c.varpi * std::exp(ghd_log_density(x, c)) +
                          (1.0 - c.varpi) * std::exp(msghd_log_density(x, c));
    EXPECT_NEAR(std::exp(cghd_log_density(x, c)), direct, 1e-12 * std::max(1.0, direct));
  }
}

TEST(Reductions, FamilyDispatch) {
  std::mt19937_64 rng(46);
  const CGHDComponent c = oracle::random_component(2, rng);
  const Eigen::VectorXd x = random_point(2, rng);
  EXPECT_EQ(component_log_density(x, c, Family::MGHD), ghd_log_density(x, c));
  EXPECT_EQ(component_log_density(x, c, Family::MMSGHD), msghd_log_density(x, c));
  EXPECT_EQ(component_log_density(x, c, Family::McMSGHD), msghd_log_density(x, c));
  EXPECT_EQ(component_log_density(x, c, Family::MCGHD), cghd_log_density(x, c));
}

TEST(Densities, RotationConsistency) {
  std::mt19937_64 rng(47);
  for (int k = 0; k < 50; ++k) {
    CGHDComponent c = oracle::random_component(3, rng);
    const Eigen::VectorXd x = random_point(3, rng);
    const Eigen::MatrixXd q = oracle::random_orthogonal(3, rng);
    const double before = cghd_log_density(x, c);
    c.gamma = q * c.gamma;
    EXPECT_NEAR(cghd_log_density(q * x, c), before, 1e-11);
  }
}

TEST(Densities, UnivariateNormalization) {
  std::mt19937_64 rng(48);
  for (int k = 0; k < 10; ++k) {
    CGHDComponent c = oracle::random_component(1, rng);
    c.gamma(0, 0) = 1.0;
    const double peak = c.mu(0);
    const double z_ghd = oracle::integrate_log(
        [&](double y) { return ghd_log_density(Eigen::VectorXd::Constant(1, y), c); }, peak);
    const double z_cghd = oracle::integrate_log(
        [&](double y) { return cghd_log_density(Eigen::VectorXd::Constant(1, y), c); }, peak);
    EXPECT_NEAR(z_ghd, 1.0, 1e-8);
    EXPECT_NEAR(z_cghd, 1.0, 1e-8);
  }
}

TEST(Densities, BivariateNormalization) {
  std::mt19937_64 rng(49);
  for (int k = 0; k < 3; ++k) {
    const CGHDComponent c = oracle::random_component(2, rng);
    const Eigen::VectorXd centre = c.gamma * c.mu;
    auto inner = [&](double x1) {
      return std::log(oracle::integrate_log(
          [&](double x2) { return msghd_log_density(Eigen::Vector2d(x1, x2), c); }, centre(1),
          1e-9));
    };
    EXPECT_NEAR(oracle::integrate_log(inner, centre(0), 1e-8), 1.0, 1e-5);
  }
}

TEST(MixtureDensity, SingleComponentAndIdenticalComponents) {
  std::mt19937_64 rng(50);
  MixtureModel m;
  m.family = Family::MCGHD;
  m.components = {oracle::random_component(2, rng)};
  m.pi = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd x = random_point(2, rng);
  EXPECT_NEAR(mixture_log_density(x, m), cghd_log_density(x, m.components[0]), 1e-14);

  m.components.push_back(m.components[0]);
  m.pi = Eigen::Vector2d(0.3, 0.7);
  EXPECT_NEAR(mixture_log_density(x, m), cghd_log_density(x, m.components[0]), 1e-13);
}

TEST(MixtureDensity, RowsAgreeWithPointwise) {
  std::mt19937_64 rng(51);
  MixtureModel m;
  m.family = Family::MMSGHD;
  for (int g = 0; g < 3; ++g) m.components.push_back(oracle::random_component(2, rng));
  for (auto& c : m.components) c.varpi = 0.0;
  m.pi = Eigen::Vector3d(0.2, 0.5, 0.3);
  Eigen::MatrixXd data(5, 2);
  for (int i = 0; i < 5; ++i) data.row(i) = random_point(2, rng).transpose();
  const Eigen::VectorXd rows = mixture_log_density_rows(data, m);
  for (int i = 0; i < 5; ++i) {
    double direct = 0.0;
    for (int g = 0; g < 3; ++g) {
      direct += m.pi(g) * std::exp(msghd_log_density(data.row(i).transpose(), m.components[g]));
    }
    EXPECT_NEAR(rows(i), std::log(direct), 1e-12);
  }
}

TEST(MixtureDensity, UnivariateNormalization) {
  MixtureModel m;
  m.family = Family::MGHD;
  CGHDComponent a = CGHDComponent::standard(1), b = CGHDComponent::standard(1);
  a.varpi = b.varpi = 1.0;
  b.mu(0) = 4.0;
  b.beta(0) = 0.8;
  b.omega0 = 3.0;
  b.lambda0 = 1.5;
  m.components = {a, b};
  m.pi = Eigen::Vector2d(0.4, 0.6);
  const double z = oracle::integrate_log(
      [&](double y) { return mixture_log_density(Eigen::VectorXd::Constant(1, y), m); }, 2.0);
  EXPECT_NEAR(z, 1.0, 1e-8);
}

TEST(Densities, FiniteAtExtremeParameters) {
  for (double scale : {1e-3, 1.0, 1e3}) {
    for (double omega : {0.01, 1.0, 100.0}) {
      for (double lambda : {-20.0, -0.5, 20.0}) {
        CGHDComponent c = CGHDComponent::standard(3);
        c.phi *= scale;
        c.beta << 1.0, -2.0, 0.5;
        c.omega.setConstant(omega);
        c.lambda.setConstant(lambda);
        c.omega0 = omega;
        c.lambda0 = lambda;
        for (double pos : {-50.0, 0.0, 50.0}) {
          const Eigen::Vector3d x(pos, -pos, 0.5 * pos);
          EXPECT_TRUE(std::isfinite(cghd_log_density(x, c)))
              << scale << " " << omega << " " << lambda << " " << pos;
        }
      }
    }
  }
}

TEST(Densities, DimensionMismatchIsRejected) {
  const CGHDComponent c = CGHDComponent::standard(3);
  EXPECT_THROW(ghd_log_density(Eigen::Vector2d(0.0, 0.0), c), InputError);
}
