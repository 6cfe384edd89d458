#include <gtest/gtest.h>

#include <cmath>

#include "memsolve/potential.hpp"

using namespace memsolve;

namespace {

MembraneProfile parabola(const LineGrid& g, double depth) {
  return MembraneProfile(GridFunction1D::sample(g, [depth](double x) { return -depth * (1 - x * x); }));
}

}  // namespace

TEST(Potential, MembraneAtRestGivesLinearPotential) {
  for (double eps : {0.05, 0.5, 1.0}) {
    const RectGrid g(33, 17);
    const PotentialSolution s = assemble_and_solve(MembraneProfile::zero(g.line()), eps, g);
    for (std::size_t i = 0; i < g.nx(); ++i)
      for (std::size_t j = 0; j < g.n_eta(); ++j) EXPECT_NEAR(s.phi(i, j), g.eta(j), 1e-10);
    const auto tr = trace_d_eta_top(s.phi);
    for (std::size_t i = 0; i < g.nx(); ++i) EXPECT_NEAR(tr[i], 1.0, 1e-10);
    EXPECT_LT(norm_inf(s.capital_phi), 1e-12);
  }
}

TEST(Potential, ComparisonBoundsForParabola) {
  const RectGrid g(129, 65);
  const MembraneProfile u = parabola(g.line(), 0.25);
  const PotentialSolution s = assemble_and_solve(u, 0.5, g);
  for (std::size_t i = 0; i < g.nx(); ++i) {
    for (std::size_t j = 0; j < g.n_eta(); ++j) {
      EXPECT_LE(s.phi(i, j), 1.0 + 1e-8);
      EXPECT_GE(s.phi(i, j), g.eta(j) * (1.0 + u[i]) - 1e-8);
    }
  }
  const ComparisonReport r = verify_comparison(s, u, 0.5);
  EXPECT_GE(r.worst(), -1e-8);
}

TEST(Potential, DirichletRowsExactAndDecomposition) {
  const RectGrid g(65, 33);
  const MembraneProfile u = parabola(g.line(), 0.3);
  const PotentialSolution s = assemble_and_solve(u, 0.4, g);
  for (std::size_t i = 0; i < g.nx(); ++i) {
    EXPECT_EQ(s.phi(i, 0), 0.0);
    EXPECT_EQ(s.phi(i, g.n_eta() - 1), 1.0);
    for (std::size_t j = 0; j < g.n_eta(); ++j) EXPECT_EQ(s.phi(i, j), s.capital_phi(i, j) + g.eta(j));
  }
  for (std::size_t j = 0; j < g.n_eta(); ++j) {
    EXPECT_EQ(s.phi(0, j), g.eta(j));
    EXPECT_EQ(s.phi(g.nx() - 1, j), g.eta(j));
  }
}

TEST(Potential, LinearResidualContract) {
  const RectGrid g(65, 33);
  const MembraneProfile u = parabola(g.line(), 0.4);
  const LinearSolverConfig lin{1e-12, 3};
  const PotentialSolution s = assemble_and_solve(u, 0.3, g, lin);
  EXPECT_LE(s.lin_residual, 1e-12 * (1.0 + 1.0));
  EXPECT_GE(s.iterations, 1);
  // the discrete operator applied to phi reproduces the linear residual
  EXPECT_LE(norm_inf(apply_operator(u, 0.3, s.phi)), 1e-11);
}

TEST(Potential, EvenMembraneGivesEvenPotential) {
  const RectGrid g(65, 33);
  const PotentialSolution s = assemble_and_solve(parabola(g.line(), 0.3), 0.7, g);
  double asym = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.n_eta(); ++j) asym = std::max(asym, std::abs(s.phi(i, j) - s.phi(g.nx() - 1 - i, j)));
  EXPECT_LT(asym, 1e-12);
}

TEST(Potential, Errors) {
  const RectGrid g(33, 17);
  EXPECT_THROW(assemble_and_solve(MembraneProfile::zero(LineGrid(17)), 0.1, g), Error);
  try {
    assemble_and_solve(MembraneProfile::zero(g.line()), 0.0, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadParameter);
  }
  try {
    assemble_and_solve(parabola(g.line(), 0.9995), 0.1, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TouchdownInput);
  }
}

TEST(Comparison, MembraneAtRestMarginsNonNegative) {
  const RectGrid g(33, 17);
  const MembraneProfile u = MembraneProfile::zero(g.line());
  const ComparisonReport r = verify_comparison(assemble_and_solve(u, 0.3, g), u, 0.3);
  EXPECT_GE(r.upper, -1e-10);
  EXPECT_GE(r.lower_affine, -1e-10);
  EXPECT_GE(r.lower_power, -1e-10);
  EXPECT_GE(r.trace, -1e-10);
}

TEST(Comparison, InjectedFaultIsReportedAtItsNode) {
  const RectGrid g(33, 17);
  const MembraneProfile u = MembraneProfile::zero(g.line());
  PotentialSolution s = assemble_and_solve(u, 0.3, g);
  const std::size_t i = 10, j = g.n_eta() - 2;
  s.phi(i, j) += 0.1;
  const ComparisonReport r = verify_comparison(s, u, 0.3);
  EXPECT_NEAR(r.upper, -0.1 + g.h_eta(), 1e-10);
  EXPECT_EQ(r.worst_upper_i, i);
  EXPECT_EQ(r.worst_upper_j, j);
}

TEST(EnergyIdentity, ZeroAtRest) {
  const RectGrid g(33, 17);
  const MembraneProfile u = MembraneProfile::zero(g.line());
  EXPECT_LT(energy_identity_residual(assemble_and_solve(u, 0.3, g), u, 0.3), 1e-14);
}

TEST(EnergyIdentity, ResidualShrinksUnderRefinement) {
  double res[2], corrupted[2];
  int k = 0;
  for (std::size_t n : {65u, 129u}) {
    const RectGrid g(n, (n + 1) / 2);
    const MembraneProfile u = parabola(g.line(), 0.25);
    const PotentialSolution s = assemble_and_solve(u, 0.5, g);
    res[k] = energy_identity_residual(s, u, 0.5);
    GridFunction2D scaled = s.capital_phi;
    for (double& v : scaled.values()) v *= 1.5;
    corrupted[k] = energy_identity_residual(scaled, u, 0.5);
    ++k;
  }
  EXPECT_GE(res[0] / res[1], 1.8);
  // negative control: the scaled field violates the identity at O(1)
  EXPECT_LT(corrupted[0] / corrupted[1], 1.2);
  EXPECT_GT(corrupted[1], 100.0 * res[1]);
}
