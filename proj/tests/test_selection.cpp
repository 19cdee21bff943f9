#include <gtest/gtest.h>

#include <cmath>

#include "mcghd/error.hpp"
#include "mcghd/selection.hpp"
#include "mcghd/simulate.hpp"

using namespace mcghd;

namespace {

Eigen::MatrixXd blobs(int G, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.p = 2;
  spec.G = G;
  spec.n_per_component = 80;
  spec.seed = seed;
  Scenario s = generate_scenario(spec);
  for (int g = 0; g < G; ++g) s.data.middleRows(g * 80, 80).array() += 60.0 * g;
  return s.data;
}

}  // namespace

TEST(FreeParams, Examples) {
  EXPECT_EQ(count_free_params(Family::MGHD, 2, 2), 19);
  EXPECT_EQ(count_free_params(Family::MMSGHD, 2, 2), 23);
  EXPECT_EQ(count_free_params(Family::McMSGHD, 2, 2), 23);
  EXPECT_EQ(count_free_params(Family::MCGHD, 2, 2), 29);
  EXPECT_EQ(count_free_params(Family::MGHD, 1, 1), 5);
  EXPECT_THROW(count_free_params(Family::MGHD, 0, 2), InputError);
}

TEST(Bic, Arithmetic) {
  EXPECT_NEAR(bic(-100.0, 19, 100), -287.498, 1e-3);
  EXPECT_EQ(bic(-100.0, 19, 100), -200.0 - 19.0 * std::log(100.0));
  EXPECT_GT(bic(-50.0, 10, 80), bic(-50.0, 11, 80));
}

TEST(Bic, RecomputedFromFit) {
  const Eigen::MatrixXd x = blobs(2, 3);
  FitConfig cfg;
  cfg.family = Family::MMSGHD;
  cfg.G = 2;
  cfg.max_iter = 30;
  const FitResult r = fit(x, cfg);
  EXPECT_EQ(r.bic, 2.0 * r.loglik_trace.back() - 23.0 * std::log(static_cast<double>(x.rows())));
  EXPECT_EQ(bic(r, x.rows()), r.bic);
}

TEST(BestScore, TieRules) {
  std::vector<ModelScore> s(4);
  s[0] = {Family::MCGHD, 2, -10.0, 5, -30.0, false, "ok"};
  s[1] = {Family::MGHD, 2, -10.0, 5, -30.0, false, "ok"};
  s[2] = {Family::MCGHD, 1, -10.0, 5, -30.0, false, "ok"};
  s[3] = {Family::MGHD, 3, -1.0, 5, 100.0, true, "failed"};
  EXPECT_EQ(best_score(s), 2u);
  s[2].bic = -31.0;
  EXPECT_EQ(best_score(s), 1u);
  for (auto& v : s) v.failed = true;
  EXPECT_FALSE(best_score(s).has_value());
}

TEST(Select, OneBlobPrefersOneComponent) {
  const Eigen::MatrixXd x = blobs(1, 5);
  FitConfig base;
  base.max_iter = 60;
  const SelectionResult r = select(x, {1, 2, 3}, {Family::MGHD}, base);
  ASSERT_TRUE(r.best.has_value());
  EXPECT_EQ(r.scores[*r.best].G, 1);
  EXPECT_EQ(r.scores.size(), 3u);
}

TEST(Select, TwoBlobsPreferTwoComponents) {
  const Eigen::MatrixXd x = blobs(2, 6);
  FitConfig base;
  base.max_iter = 60;
  const SelectionResult r = select(x, {1, 2, 3}, {Family::MGHD, Family::MMSGHD}, base);
  ASSERT_TRUE(r.best.has_value());
  EXPECT_EQ(r.scores[*r.best].G, 2);
  EXPECT_EQ(r.scores.size(), 6u);
  ASSERT_TRUE(r.best_fit.has_value());
  EXPECT_EQ(r.best_fit->bic, r.scores[*r.best].bic);
  for (const ModelScore& s : r.scores) {
    if (!s.failed) EXPECT_EQ(s.bic, bic(s.loglik, s.rho, x.rows()));
  }
}

TEST(Select, FailuresAreRecordedAndSkipped) {
  const Eigen::MatrixXd x = blobs(1, 7).topRows(30);
  FitConfig base;
  base.max_iter = 20;
  const SelectionResult r = select(x, {1, 12}, {Family::MGHD}, base);
  ASSERT_EQ(r.scores.size(), 2u);
  EXPECT_FALSE(r.scores[0].failed);
  EXPECT_TRUE(r.scores[1].failed);
  EXPECT_FALSE(r.scores[1].status.empty());
  EXPECT_EQ(r.best, 0u);
}
