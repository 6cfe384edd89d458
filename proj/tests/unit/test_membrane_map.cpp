#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "memsolve/membrane_map.hpp"
#include "oracles.hpp"

using namespace memsolve;

namespace {

MembraneProfile parabola(const LineGrid& g, double depth) {
  return MembraneProfile(GridFunction1D::sample(g, [depth](double x) { return -depth * (1 - x * x); }));
}

LoadProfile constant_load(const LineGrid& g, double value) {
  return {GridFunction1D::sample(g, [value](double) { return value; }), GridFunction1D::sample(g, [](double) { return 1.0; })};
}

}  // namespace

TEST(MembraneProfile, Invariants) {
  const LineGrid g(17);
  EXPECT_THROW(MembraneProfile(GridFunction1D::sample(g, [](double x) { return 0.1 * x; })), Error);
  try {
    MembraneProfile(GridFunction1D::sample(g, [](double x) { return -1.2 * (1 - x * x); }));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TouchdownInput);
  }
  const MembraneProfile u = parabola(g, 0.2);
  const auto du = d1(u.u()), ddu = d2(u.u());
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(u.du()[i], du[i]);
    EXPECT_EQ(u.d2u()[i], ddu[i]);
  }
  EXPECT_NEAR(u.min_gap(), 0.8, 1e-15);
}

TEST(Admissibility, RestIsAdmissible) {
  const auto r = check_admissible(MembraneProfile::zero(LineGrid(33)), 1.0);
  EXPECT_TRUE(r.verdict);
  EXPECT_EQ(r.even_margin, 0.0);
  EXPECT_EQ(r.convexity_min, 0.0);
  EXPECT_EQ(r.convexity_max, 0.0);
  EXPECT_EQ(r.slope_max, 0.0);
  EXPECT_EQ(r.depth_min, 0.0);
}

TEST(Admissibility, ParabolaSaturatesBothBounds) {
  // u'' = 1/2 = r0 and min u = -1/4 = -r0/2
  const auto r = check_admissible(parabola(LineGrid(33), 0.25), 0.5);
  EXPECT_TRUE(r.verdict);
  EXPECT_NEAR(r.convexity_max, 0.5, 1e-10);
  EXPECT_NEAR(r.depth_min, -0.25, 1e-15);
  EXPECT_NEAR(r.slope_max, 0.5, 1e-12);
}

TEST(Admissibility, TooCurvedIsRejected) {
  // -(1-x^2) itself touches the plate, so take a hair less depth: u'' = 1.998
  const auto r = check_admissible(parabola(LineGrid(33), 0.999), 1.5);
  EXPECT_FALSE(r.verdict);
  EXPECT_NEAR(r.convexity_max, 1.998, 1e-9);
}

TEST(Admissibility, UnevenProfileIsRejected) {
  const LineGrid g(33);
  const MembraneProfile u(GridFunction1D::sample(g, [](double x) { return -0.1 * (1 - x * x) * (1 + 0.1 * x); }));
  EXPECT_FALSE(check_admissible(u, 1.0).verdict);
}

TEST(Admissibility, R0OutOfRange) {
  EXPECT_THROW(check_admissible(MembraneProfile::zero(LineGrid(9)), 2.0), Error);
  EXPECT_THROW(check_admissible(MembraneProfile::zero(LineGrid(9)), 0.0), Error);
}

TEST(Load, MembraneAtRestGivesUnitLoad) {
  const RectGrid g(33, 17);
  const MembraneProfile u = MembraneProfile::zero(g.line());
  for (double eps : {0.3, 0.7}) {
    const LoadProfile l = compute_load(u, assemble_and_solve(u, eps, g), eps);
    for (std::size_t i = 0; i < g.nx(); ++i) {
      EXPECT_NEAR(l.trace[i], 1.0, 1e-10);
      EXPECT_NEAR(l.g[i], 1.0, 1e-10);
    }
  }
}

TEST(Load, NonNegativeAndWithinTraceBound) {
  const RectGrid g(65, 33);
  const MembraneProfile u = parabola(g.line(), 0.2);
  const double eps = 0.4;
  const LoadProfile l = compute_load(u, assemble_and_solve(u, eps, g), eps);
  for (std::size_t i = 0; i < g.nx(); ++i) {
    EXPECT_GE(l.g[i], 0.0);
    EXPECT_GE(l.trace[i], -1e-6);
    EXPECT_LE(l.trace[i], 1 + 2 * eps * eps + 1e-6);
  }
}

TEST(ApplyS, UnitLoad) {
  const LineGrid g(65);
  const MembraneProfile v = apply_S(constant_load(g, 1.0), 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(v[i], (g.node(i) * g.node(i) - 1) / 2, 1e-13);
  EXPECT_NEAR(v[g.center()], -0.5, 1e-13);
  const MembraneProfile w = apply_S(constant_load(g, 1.0), 0.2);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(w[i], 0.1 * (g.node(i) * g.node(i) - 1), 1e-13);
}

TEST(ApplyS, QuadraticLoadSecondOrder) {
  double err[2];
  int k = 0;
  for (std::size_t n : {33u, 65u}) {
    const LineGrid g(n);
    const LoadProfile l{GridFunction1D::sample(g, [](double x) { return x * x; }), GridFunction1D(g)};
    const MembraneProfile v = apply_S(l, 1.0);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e = std::max(e, std::abs(v[i] - (std::pow(g.node(i), 4) - 1) / 12));
    err[k++] = e;
  }
  EXPECT_LT(err[0], 1e-3);
  EXPECT_NEAR(err[0] / err[1], 4.0, 0.2);
}

TEST(ApplyS, StructuralProperties) {
  const LineGrid g(129);
  const LoadProfile l{GridFunction1D::sample(g, [](double x) { return 1.0 + 0.3 * std::cos(3 * x); }), GridFunction1D(g)};
  const MembraneProfile v = apply_S(l, 0.37);
  const MembraneProfile v2 = apply_S(l, 0.74);
  const auto dd = d2(v.u());
  for (std::size_t i = 1; i + 1 < g.size(); ++i) {
    EXPECT_NEAR(dd[i], 0.37 * l.g[i], 1e-9);  // exact up to rounding amplified by 1/h^2
    EXPECT_GE(dd[i], 0.0);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_LE(v[i], 0.0);
    EXPECT_NEAR(v2[i], 2.0 * v[i], 1e-14);
    EXPECT_NEAR(v[i], v[g.mirror(i)], 1e-9);
  }
  EXPECT_THROW(apply_S(l, -1.0), Error);
}

TEST(Threshold, ClosedFormValues) {
  EXPECT_EQ(lambda0_bound(1.0, 0.0), 0.25);
  EXPECT_NEAR(lambda0_bound(1.0, 1e-4), 0.25, 1e-6);
  EXPECT_NEAR(lambda0_bound(1.0, 1e-4), 0.24999998500000065, 1e-15);
  EXPECT_NEAR(lambda0_bound(1.0, 0.1), 0.2356711915535445, 1e-15);
  EXPECT_NEAR(lambda0_bound(1.0, 0.05), 0.2462932860450224, 1e-15);
  EXPECT_NEAR(lambda0_bound(1.0, 0.4), 0.1154841093865484, 1e-15);
  EXPECT_NEAR(lambda0_bound_uniform(0.5), 0.046875, 1e-15);
  EXPECT_NEAR(lambda0_bound_uniform(0.5), lambda0_bound(0.5, 1.0), 1e-15);
  for (double r0 : {0.1, 0.7, 1.3, 1.9})
    for (double eps : {0.01, 0.2, 0.9}) EXPECT_NEAR(lambda0_bound(r0, eps), oracle::lambda0(r0, eps), 1e-15);
}

TEST(Threshold, VanishesAtBothEnds) {
  EXPECT_LT(lambda0_bound(1e-9, 0.3), 1e-8);
  EXPECT_LT(lambda0_bound(2.0 - 1e-5, 0.3), 1e-9);
  EXPECT_LT(lambda0_bound_uniform(1e-9), 1e-8);
  EXPECT_LT(lambda0_bound_uniform(2.0 - 1e-5), 1e-9);
}

TEST(Threshold, BadParameters) {
  for (double r0 : {0.0, 2.0, -1.0, 3.0}) {
    try {
      lambda0_bound(r0, 0.1);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadParameter);
    }
  }
  EXPECT_THROW(lambda0_bound(1.0, 1.5), Error);
}

TEST(Threshold, OptimizerIsLocalMaximumAndMatchesScan) {
  for (std::optional<double> eps : {std::optional<double>{}, std::optional<double>{0.1}, std::optional<double>{0.0}}) {
    const Lambda0Optimum best = optimize_lambda0(eps);
    auto f = [&](double r0) { return eps ? lambda0_bound(r0, *eps) : lambda0_bound_uniform(r0); };
    EXPECT_GT(best.r0, 0.0);
    EXPECT_LT(best.r0, 2.0);
    EXPECT_GE(best.lambda0, f(best.r0 - 0.01));
    EXPECT_GE(best.lambda0, f(best.r0 + 0.01));
    double scan_r = 0, scan_v = -1;
    for (int k = 1; k < 200000; ++k) {
      const double r = 2.0 * k / 200000.0;
      if (f(r) > scan_v) {
        scan_v = f(r);
        scan_r = r;
      }
    }
    EXPECT_NEAR(best.r0, scan_r, 2e-5);
    EXPECT_NEAR(best.lambda0, scan_v, 1e-10);
  }
  const Lambda0Optimum uni = optimize_lambda0(std::nullopt);
  EXPECT_NEAR(uni.r0, 0.329484, 1e-6);
  EXPECT_NEAR(uni.lambda0, 0.0534236, 1e-7);
  const Lambda0Optimum flat = optimize_lambda0(0.0);
  EXPECT_NEAR(flat.r0, 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(flat.lambda0, 8.0 / 27.0, 1e-12);
}

TEST(MapS, MapsAdmissibleSetIntoItselfBelowThreshold) {
  // u = a(x^2-1)/2 + b(x^4-1)/12, 0 <= a, a + b <= r0
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const RectGrid g(65, 33);
  const double r0 = 1.0;
  for (double eps : {0.1, 0.5}) {
    for (int k = 0; k < 4; ++k) {
      const double a = r0 * unif(rng), b = (r0 - a) * unif(rng);
      const MembraneProfile u(GridFunction1D::sample(g.line(), [&](double x) {
        return a * (x * x - 1) / 2 + b * (x * x * x * x - 1) / 12;
      }));
      ASSERT_TRUE(check_admissible(u, r0).verdict);
      const LoadProfile l = compute_load(u, assemble_and_solve(u, eps, g), eps);
      const MembraneProfile v = apply_S(u, l, lambda0_bound(r0, eps));
      const auto rep = check_admissible(v, r0);
      EXPECT_TRUE(rep.verdict) << "a=" << a << " b=" << b << " eps=" << eps << " max u''=" << rep.convexity_max;
      EXPECT_LE(rep.even_margin, defaults::tol_sym);
    }
  }
}
