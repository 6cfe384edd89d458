#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "memsolve/small_gap.hpp"
#include "oracles.hpp"

using namespace memsolve;

namespace {

// Frozen from the closed-form first integral; see oracle::small_gap_lambda.
constexpr double kLambdaStar = 0.3500041193427497;
constexpr double kU0AtFold = -0.388346718912783;

const PullInResult& fold() {
  static const PullInResult r = pull_in();
  return r;
}

double residual(const GridFunction1D& u, double lambda) {
  const GridFunction1D dd = d2(u);
  double r = 0.0;
  for (std::size_t i = 1; i + 1 < u.size(); ++i) r = std::max(r, std::abs(dd[i] - lambda / ((1 + u[i]) * (1 + u[i]))));
  return r;
}

}  // namespace

TEST(LambdaOfU0, ClosedFormValues) {
  EXPECT_NEAR(oracle::small_gap_lambda(-0.005), 0.009916827789710394, 1e-17);
  for (double u0 : {-1e-4, -1e-3, -0.005, -0.1, -0.3, -0.5, -0.8, -0.95}) {
    EXPECT_NEAR(lambda_at(u0), oracle::small_gap_lambda(u0), 1e-9 * (1 + oracle::small_gap_lambda(u0))) << u0;
  }
  EXPECT_NEAR(lambda_at(-0.001), 0.001996667955574612, 1e-12);
  EXPECT_NEAR(lambda_at(-1e-4), 1.9996666795555746e-4, 1e-12);
  EXPECT_NEAR(lambda_at(-0.5), 0.3293575225285386, 1e-9);
}

TEST(LambdaOfU0, AgreesWithRefinedIndependentIntegration) {
  // one tenth of the default step
  EXPECT_NEAR(lambda_at(-0.5), oracle::small_gap_lambda_rk4(-0.5, 1e-5), 1e-8);
}

TEST(LambdaOfU0, LinearRegimeNearZero) {
  for (double u0 : {-1e-3, -1e-4}) {
    const double ratio = lambda_at(u0) / (-2 * u0);
    EXPECT_GE(ratio, 0.99);
    EXPECT_LE(ratio, 1.01);
  }
  // the leading-order expansion gives 1 + 2u0/3 + ...
  EXPECT_NEAR(lambda_at(-1e-3) / 2e-3, 0.99833, 1e-5);
}

TEST(LambdaOfU0, ProfileSatisfiesTheOdeAndIsEven) {
  const SmallGapConfig cfg;
  for (double u0 : {-0.01, -0.2, -0.388, -0.5}) {
    const ShootResult r = lambda_of_u0(u0, cfg);
    const GridFunction1D& p = r.profile;
    const LineGrid& g = p.grid();
    EXPECT_EQ(p[0], 0.0);
    EXPECT_EQ(p[g.size() - 1], 0.0);
    EXPECT_EQ(p[g.center()], u0);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(p[i], p[g.mirror(i)]);
    EXPECT_LE(residual(p, r.lambda), 10 * cfg.ode_tol) << u0;
  }
}

TEST(LambdaOfU0, Errors) {
  for (double u0 : {0.0, -1.0, 0.2, -1.5}) {
    try {
      lambda_at(u0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadParameter);
    }
  }
  SmallGapConfig cfg;
  cfg.x_max_guard = 0.01;
  try {
    lambda_at(-0.5, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoCrossing);
  }
}

TEST(PullIn, MatchesFrozenFixture) {
  const PullInResult& r = fold();
  EXPECT_NEAR(r.lambda_star, kLambdaStar, 1e-6);
  EXPECT_NEAR(r.u0_at_fold, kU0AtFold, 1e-6);
  EXPECT_NEAR(r.lambda_star, oracle::small_gap_lambda(kU0AtFold), 1e-9);
}

TEST(PullIn, CurveShape) {
  const PullInResult& r = fold();
  ASSERT_EQ(r.curve.size(), SmallGapConfig{}.sweep_points);
  for (std::size_t k = 1; k < r.curve.size(); ++k) EXPECT_GT(r.curve[k].first, r.curve[k - 1].first);
  for (const auto& [u0, lambda] : r.curve) {
    EXPECT_GT(lambda, 0.0);
    EXPECT_LE(lambda, r.lambda_star);
  }
  EXPECT_LT(r.curve.front().second, r.lambda_star);
  EXPECT_LT(r.curve.back().second, r.lambda_star);
  EXPECT_GT(r.u0_at_fold, -1.0);
  EXPECT_LT(r.u0_at_fold, 0.0);
}

TEST(PullIn, SelfConvergesAcrossSweepResolutions) {
  SmallGapConfig coarse, fine;
  coarse.sweep_points = 200;
  fine.sweep_points = 2000;
  EXPECT_NEAR(pull_in(coarse).lambda_star, pull_in(fine).lambda_star, 1e-6);
}

TEST(PullIn, MonotoneSweepIsNotBracketed) {
  SmallGapConfig cfg;
  cfg.delta_touch = 0.45;  // sweep (-0.55, -0.45) lies entirely beyond the fold
  try {
    pull_in(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FoldNotBracketed);
  }
}

TEST(SolveAtLambda, BranchCounts) {
  const PullInResult& f = fold();
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> below(0.0, 0.95 * f.lambda_star), above(1.05 * f.lambda_star, 3 * f.lambda_star);
  const LineGrid g(65);
  for (int k = 0; k < 20; ++k) {
    const double lambda = below(rng);
    const auto b = solve_at_lambda(lambda, f, g);
    ASSERT_EQ(b.size(), 2u) << lambda;
    EXPECT_EQ(b[0].branch, BranchSide::StableSide);
    EXPECT_EQ(b[1].branch, BranchSide::UnstableSide);
    EXPECT_GT(b[0].u0_mid, f.u0_at_fold);
    EXPECT_LT(b[1].u0_mid, f.u0_at_fold);
    for (const auto& br : b) EXPECT_NEAR(lambda_at(br.u0_mid), lambda, 1e-10);
  }
  for (int k = 0; k < 5; ++k) EXPECT_TRUE(solve_at_lambda(above(rng), f, g).empty());
  EXPECT_TRUE(solve_at_lambda(2 * f.lambda_star, f, g).empty());
}

TEST(SolveAtLambda, HalfPullInVoltage) {
  const PullInResult& f = fold();
  const SmallGapConfig cfg;
  const auto b = solve_at_lambda(f.lambda_star / 2, f);
  ASSERT_EQ(b.size(), 2u);
  for (const auto& br : b) {
    EXPECT_EQ(br.profile.size(), cfg.standard_points);
    EXPECT_EQ(br.profile[br.profile.grid().center()], br.u0_mid);
    if (br.u0_mid >= -0.5) {
      EXPECT_LE(residual(br.profile, br.lambda), 10 * cfg.ode_tol);
    }
  }
  EXPECT_STREQ(to_string(b[0].branch), "stable");
  EXPECT_STREQ(to_string(b[1].branch), "unstable");
}

TEST(SolveAtLambda, AtTheFold) {
  const PullInResult& f = fold();
  const auto b = solve_at_lambda(f.lambda_star, f, LineGrid(33));
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(b[0].u0_mid, f.u0_at_fold, SmallGapConfig{}.tol_fold);
}

TEST(SolveAtLambda, SmallVoltageLinearization) {
  const double lambda = 1e-4;
  const auto b = solve_at_lambda(lambda, fold());
  ASSERT_FALSE(b.empty());
  const GridFunction1D& p = b[0].profile;
  double err = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p.grid().node(i);
    err = std::max(err, std::abs(p[i] - lambda * (x * x - 1) / 2));
  }
  EXPECT_LE(err, 1e-7);
  EXPECT_LE(residual(p, lambda), 1e-7);
}

TEST(SolveAtLambda, RejectsNonPositiveVoltage) {
  EXPECT_THROW(solve_at_lambda(0.0, fold()), Error);
  EXPECT_THROW(solve_at_lambda(-1.0, fold()), Error);
}

TEST(SolveAtLambda, DeepUnstableBranchBelowTheSweepFloor) {
  // lambda(-1 + a) ~ a/2, so the unstable preimage of 1e-5 sits near u0 = -1 + 2e-5
  const auto b = solve_at_lambda(1e-5, fold(), LineGrid(33));
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[1].branch, BranchSide::UnstableSide);
  EXPECT_LT(b[1].u0_mid, -1.0 + SmallGapConfig{}.delta_touch);
  EXPECT_NEAR(1.0 + b[1].u0_mid, 2e-5, 1e-6);
  // the stiff start near the plate costs accuracy: relative error ~2e-6 here
  EXPECT_NEAR(oracle::small_gap_lambda(b[1].u0_mid), 1e-5, 1e-10);
}
