/**
 * @file test_quadrature.cpp
 * @brief Gauss-Legendre box quadrature tests against closed-form oracles.
 *
 * Expected values come from exact polynomial antiderivatives (Poly2), the
 * Gaussian product-integral identity (integral over the plane is pi), and a
 * plain midpoint Riemann sum that shares no code with the library.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cellavg/builtins.hpp"
#include "cellavg/error.hpp"
#include "cellavg/fields.hpp"
#include "cellavg/quadrature.hpp"
#include "support/oracles.hpp"

namespace {

using namespace cellavg;

const double kPi = std::acos(-1.0);

TEST(IntegrateBox, ConstantOverUnitSquare) {
  const ScalarField one([](double, double) { return 1.0; });
  EXPECT_NEAR(integrate_box(one, BoxDomain(0.0, 1.0, 0.0, 1.0)), 1.0, 1e-14);
}

TEST(IntegrateBox, BilinearMonomial) {
  const ScalarField xy([](double x, double y) { return x * y; });
  EXPECT_NEAR(integrate_box(xy, BoxDomain(0.0, 1.0, 0.0, 1.0)), 0.25, 1e-14);
}

TEST(IntegrateBox, GaussianMassIsPi) {
  const ScalarField g = make_gaussian();
  EXPECT_NEAR(integrate_box(g, BoxDomain(-6.0, 6.0, -6.0, 6.0)), kPi, 1e-10);
}

TEST(IntegrateBox, PolynomialsMatchExactAntiderivatives) {
  // Mixed-degree polynomials with exact closed-form integrals; degrees stay
  // within the exactness range of the default 8-point rule so the quadrature
  // should agree to roundoff.
  const BoxDomain box(-1.0, 2.0, 0.5, 1.5);
  const std::vector<oracles::Poly2> polys = {
      {{{0, 0, 1.0}}},
      {{{1, 0, 2.0}, {0, 1, -3.0}}},
      {{{2, 2, 1.0}}},
      {{{3, 1, -0.5}, {0, 0, 0.25}}},
      {{{4, 0, 1.0}, {0, 4, 1.0}}},
      {{{5, 5, 0.125}}},
      {{{2, 0, 1.0}, {1, 1, 1.0}, {0, 2, 1.0}}},
      {{{6, 2, -2.0}}},
      {{{7, 0, 0.75}, {0, 3, -1.5}}},
      {{{3, 3, 1.0}, {2, 1, -4.0}, {0, 0, 2.0}}},
  };
  for (const oracles::Poly2& p : polys) {
    const double exact = p.integral(box);
    const double got = integrate_box(p.field(), box);
    EXPECT_NEAR(got, exact, 1e-12 * std::max(1.0, std::abs(exact)));
  }
}

TEST(IntegrateBox, AgreesWithIndependentMidpointSum) {
  // Cross-check against a plain midpoint Riemann sum (independent code
  // path); the midpoint error for this smooth integrand at m=1024 is well
  // below the comparison tolerance.
  const ScalarField g = make_gaussian();
  const BoxDomain box(-2.0, 2.0, -2.0, 2.0);
  const double mid = oracles::midpoint_riemann(g.eval, box, 1024);
  EXPECT_NEAR(integrate_box(g, box), mid, 1e-5);
}

TEST(IntegrateBox, LinearInIntegrand) {
  const BoxDomain box(0.0, 1.0, 0.0, 1.0);
  const ScalarField f = make_cos2_wave();
  const ScalarField g([](double x, double y) { return x * x - y; });
  const double alpha = 1.5;
  const double beta = -2.25;
  const ScalarField combo([&, alpha, beta](double x, double y) {
    return alpha * f(x, y) + beta * g(x, y);
  });
  const double lhs = integrate_box(combo, box);
  const double rhs =
      alpha * integrate_box(f, box) + beta * integrate_box(g, box);
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(IntegrateBox, AdditiveOverQuadrants) {
  const ScalarField g = make_gaussian();
  const double whole = integrate_box(g, BoxDomain(-1.0, 1.0, -1.0, 1.0));
  const double parts = integrate_box(g, BoxDomain(-1.0, 0.0, -1.0, 0.0)) +
                       integrate_box(g, BoxDomain(0.0, 1.0, -1.0, 0.0)) +
                       integrate_box(g, BoxDomain(-1.0, 0.0, 0.0, 1.0)) +
                       integrate_box(g, BoxDomain(0.0, 1.0, 0.0, 1.0));
  EXPECT_NEAR(whole, parts, 1e-12);
}

TEST(IntegrateBox, ThreePointRuleExactThroughDegreeFive) {
  // p-point Gauss-Legendre integrates degree 2p-1 exactly, so x^3 y^5 with
  // p = 3 on a single panel must come out exact up to roundoff.
  const ScalarField f([](double x, double y) {
    return x * x * x * y * y * y * y * y;
  });
  QuadratureSpec spec;
  spec.points_per_axis_per_panel = 3;
  spec.panels_per_axis = 1;
  const double got = integrate_box(f, BoxDomain(0.0, 1.0, 0.0, 1.0), spec);
  EXPECT_NEAR(got, 1.0 / 24.0, 1e-15);
}

TEST(IntegrateProductBox, TwoFactorConstantProduct) {
  const ScalarField a = make_constant(2.0);
  const ScalarField b = make_constant(0.25);
  EXPECT_NEAR(integrate_product_box(a, b, BoxDomain(0.0, 1.0, 0.0, 1.0)), 0.5,
              1e-14);
}

TEST(IntegrateProductBox, ThreeFactorMonomialProduct) {
  const ScalarField fx([](double x, double) { return x; });
  const ScalarField fy([](double, double y) { return y; });
  const ScalarField four = make_constant(4.0);
  EXPECT_NEAR(
      integrate_product_box(fx, fy, four, BoxDomain(0.0, 1.0, 0.0, 1.0)), 1.0,
      1e-14);
}

TEST(IntegrateProductBox, MatchesIntegrateBoxOfPointwiseProduct) {
  const ScalarField f = make_gaussian();
  const ScalarField g = make_cos2_wave();
  const BoxDomain box(-2.0, 2.0, -2.0, 2.0);
  const ScalarField prod(
      [&](double x, double y) { return f(x, y) * g(x, y); });
  EXPECT_NEAR(integrate_product_box(f, g, box), integrate_box(prod, box),
              1e-12);
}

TEST(IntegrateProductBox, DisjointSupportsGiveExactZero) {
  const ScalarField bump = make_cos2_bump();  // supported on [-1, 1]^2
  const ScalarField far_box =
      make_box_indicator(BoxDomain(2.0, 3.0, 2.0, 3.0));
  EXPECT_EQ(
      integrate_product_box(bump, far_box, BoxDomain(-4.0, 4.0, -4.0, 4.0)),
      0.0);
}

TEST(IntegrateBox, SlicedPathHandlesDiskIndicator) {
  // Area of the radius-0.7 disk; uniform panels cannot resolve the circular
  // jump, the sliced path must.
  const ScalarField disk = make_disk_indicator(0.7);
  const double got = integrate_box(disk, BoxDomain(-1.0, 1.0, -1.0, 1.0));
  EXPECT_NEAR(got, kPi * 0.49, 1e-10);
}

TEST(TailMass, CompactSupportInsideSquareIsZero) {
  const ScalarField bump = make_cos2_bump();
  const double tail = tail_mass(bump, 1.0, BoxDomain(-2.0, 2.0, -2.0, 2.0));
  EXPECT_LE(tail, 1e-10);
  EXPECT_GE(tail, 0.0);
}

TEST(TailMass, BoxIndicatorTailIsOuterMinusInnerArea) {
  const ScalarField wide =
      make_box_indicator(BoxDomain(-2.0, 2.0, -2.0, 2.0));
  const double tail = tail_mass(wide, 1.0, BoxDomain(-2.0, 2.0, -2.0, 2.0));
  EXPECT_NEAR(tail, 12.0, 1e-10);
}

TEST(TailMass, GaussianTailMatchesErrorFunctionIdentity) {
  const ScalarField g = make_gaussian();
  const double tail = tail_mass(g, 1.0, BoxDomain(-6.0, 6.0, -6.0, 6.0));
  EXPECT_NEAR(tail, oracles::gaussian_tail(1.0), 1e-8);
}

TEST(TailMass, RejectsNonPositiveHalfWidth) {
  const ScalarField g = make_gaussian();
  const BoxDomain outer(-6.0, 6.0, -6.0, 6.0);
  EXPECT_THROW(tail_mass(g, 0.0, outer), Error);
  EXPECT_THROW(tail_mass(g, -1.0, outer), Error);
}

TEST(Refinement, JumpWithoutSlicesRaisesQuadratureError) {
  // A step the tensor path cannot resolve: the jump abscissa 1/3 never lands
  // on a dyadic panel edge, so consecutive levels keep disagreeing until the
  // panel cap.  The carried best estimate must still be near the true 2/3.
  const ScalarField step(
      [](double x, double) { return x > 1.0 / 3.0 ? 1.0 : 0.0; });
  QuadratureSpec spec;
  spec.target_rel_tol = 1e-14;
  spec.max_panels_per_axis = 8;
  try {
    integrate_box(step, BoxDomain(0.0, 1.0, 0.0, 1.0), spec);
    FAIL() << "expected QuadratureError";
  } catch (const QuadratureError& e) {
    EXPECT_GT(e.best_estimate, 0.5);
    EXPECT_LT(e.best_estimate, 0.8);
    EXPECT_GT(e.achieved_diff, 0.0);
  }
}

TEST(Refinement, NearZeroIntegralConverges) {
  // Odd integrand over a symmetric box: the true integral is 0, so a purely
  // relative stopping rule would never trigger; the sup-scaled absolute
  // fallback must let this converge.
  const ScalarField odd([](double x, double y) { return x * y * y; });
  const double got = integrate_box(odd, BoxDomain(-1.0, 1.0, 0.0, 1.0));
  EXPECT_NEAR(got, 0.0, 1e-12);
}

TEST(GaussRule, OnePointRuleIsMidpoint) {
  const GaussRule& r = gauss_rule(1);
  ASSERT_EQ(r.nodes.size(), 1u);
  EXPECT_EQ(r.nodes[0], 0.0);
  EXPECT_NEAR(r.weights[0], 2.0, 1e-15);
}

TEST(GaussRule, TwoPointRuleNodes) {
  const GaussRule& r = gauss_rule(2);
  ASSERT_EQ(r.nodes.size(), 2u);
  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(r.nodes[0], -inv_sqrt3, 1e-15);
  EXPECT_NEAR(r.nodes[1], inv_sqrt3, 1e-15);
  EXPECT_NEAR(r.weights[0], 1.0, 1e-15);
  EXPECT_NEAR(r.weights[1], 1.0, 1e-15);
}

TEST(GaussRule, FivePointRuleMatchesReferenceValues) {
  const GaussRule& r = gauss_rule(5);
  ASSERT_EQ(r.nodes.size(), 5u);
  EXPECT_NEAR(r.nodes[0], -0.9061798459386640, 1e-14);
  EXPECT_NEAR(r.nodes[1], -0.5384693101056831, 1e-14);
  EXPECT_NEAR(r.nodes[2], 0.0, 1e-14);
  EXPECT_NEAR(r.weights[0], 0.2369268850561891, 1e-14);
  EXPECT_NEAR(r.weights[1], 0.4786286704993665, 1e-14);
  EXPECT_NEAR(r.weights[2], 0.5688888888888889, 1e-14);
}

TEST(GaussRule, AllOrdersSymmetricWithWeightSumTwo) {
  for (int p = 1; p <= 16; ++p) {
    const GaussRule& r = gauss_rule(p);
    ASSERT_EQ(r.nodes.size(), static_cast<size_t>(p));
    double wsum = 0.0;
    for (int i = 0; i < p; ++i) {
      wsum += r.weights[static_cast<size_t>(i)];
      EXPECT_NEAR(r.nodes[static_cast<size_t>(i)],
                  -r.nodes[static_cast<size_t>(p - 1 - i)], 1e-15);
    }
    EXPECT_NEAR(wsum, 2.0, 1e-14);
  }
  EXPECT_THROW(gauss_rule(0), Error);
  EXPECT_THROW(gauss_rule(17), Error);
}

TEST(QuadratureSpecValidation, RejectsOutOfRangeSettings) {
  const ScalarField one = make_constant(1.0);
  const BoxDomain box(0.0, 1.0, 0.0, 1.0);
  QuadratureSpec bad_points;
  bad_points.points_per_axis_per_panel = 0;
  EXPECT_THROW(integrate_box(one, box, bad_points), Error);
  bad_points.points_per_axis_per_panel = 17;
  EXPECT_THROW(integrate_box(one, box, bad_points), Error);
  QuadratureSpec bad_panels;
  bad_panels.panels_per_axis = 0;
  EXPECT_THROW(integrate_box(one, box, bad_panels), Error);
  QuadratureSpec bad_tol;
  bad_tol.target_rel_tol = 0.0;
  EXPECT_THROW(integrate_box(one, box, bad_tol), Error);
  QuadratureSpec bad_cap;
  bad_cap.panels_per_axis = 8;
  bad_cap.max_panels_per_axis = 4;
  EXPECT_THROW(integrate_box(one, box, bad_cap), Error);
}

}  // namespace
