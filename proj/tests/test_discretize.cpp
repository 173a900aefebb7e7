/**
 * @file test_discretize.cpp
 * @brief Grid construction, cell averaging, and weak-form error tests.
 *
 * Fixed expected values come from hand-computed cell averages of constants,
 * linear fields, and indicator geometry; the decomposition residuals check
 * an exact identity and must vanish to quadrature accuracy.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cellavg/builtins.hpp"
#include "cellavg/discretize.hpp"
#include "cellavg/error.hpp"
#include "cellavg/fields.hpp"
#include "cellavg/quadrature.hpp"
#include "support/oracles.hpp"

namespace {

using namespace cellavg;

const double kPi = std::acos(-1.0);

TEST(MakeGrid, NodesAreExactAtEndpointsAndUniformInside) {
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 2.0), 4);
  ASSERT_EQ(g.x_nodes.size(), 5u);
  const std::vector<double> expect_x = {0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> expect_y = {0.0, 0.5, 1.0, 1.5, 2.0};
  for (size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(g.x_nodes[k], expect_x[k]);
    EXPECT_EQ(g.y_nodes[k], expect_y[k]);
  }
  EXPECT_EQ(g.cell_width1(), 0.25);
  EXPECT_EQ(g.cell_width2(), 0.5);
  EXPECT_EQ(g.cell_area(), 0.125);
}

TEST(MakeGrid, RefinedGridSharesCoarseNodesExactly) {
  const BoxDomain box(-1.3, 2.7, 0.1, 0.9);
  const Grid coarse = make_grid(box, 4);
  const Grid fine = make_grid(box, 8);
  for (int k = 0; k <= 4; ++k) {
    EXPECT_EQ(coarse.x_nodes[static_cast<size_t>(k)],
              fine.x_nodes[static_cast<size_t>(2 * k)]);
    EXPECT_EQ(coarse.y_nodes[static_cast<size_t>(k)],
              fine.y_nodes[static_cast<size_t>(2 * k)]);
  }
}

TEST(MakeGrid, RejectsNonPositiveCellCount) {
  EXPECT_THROW(make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 0), Error);
  EXPECT_THROW(make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), -3), Error);
}

TEST(CellAverages, ConstantFieldReproducesTheConstant) {
  const Grid g = make_grid(BoxDomain(-2.0, 3.0, 0.0, 1.0), 3);
  const CellMatrix avgs = cell_averages(make_constant(2.5), g);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(avgs.at(i, j), 2.5, 1e-14);
    }
  }
}

TEST(CellAverages, LinearFieldGivesMidpointValues) {
  const ScalarField fx([](double x, double) { return x; });
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 2);
  const CellMatrix avgs = cell_averages(fx, g);
  EXPECT_NEAR(avgs.at(0, 0), 0.25, 1e-14);
  EXPECT_NEAR(avgs.at(0, 1), 0.25, 1e-14);
  EXPECT_NEAR(avgs.at(1, 0), 0.75, 1e-14);
  EXPECT_NEAR(avgs.at(1, 1), 0.75, 1e-14);
}

TEST(CellAverages, IndicatorAlignedWithCellBoundaries) {
  const ScalarField quarter =
      make_box_indicator(BoxDomain(0.0, 0.5, 0.0, 0.5));
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 2);
  const CellMatrix avgs = cell_averages(quarter, g);
  EXPECT_NEAR(avgs.at(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(avgs.at(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(avgs.at(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(avgs.at(1, 1), 0.0, 1e-12);
}

TEST(CellAverages, ThreadCountDoesNotChangeResults) {
  const ScalarField g = make_gaussian();
  const Grid grid = make_grid(BoxDomain(-2.0, 2.0, -2.0, 2.0), 8);
  const CellMatrix serial = cell_averages(g, grid, {}, 1);
  const CellMatrix parallel = cell_averages(g, grid, {}, 4);
  ASSERT_EQ(serial.v.size(), parallel.v.size());
  for (size_t k = 0; k < serial.v.size(); ++k) {
    EXPECT_EQ(serial.v[k], parallel.v[k]);
  }
}

TEST(BuildDensityApprox, EvaluationFollowsHalfOpenCells) {
  const ScalarField fx([](double x, double) { return x; });
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 2);
  const PiecewiseConstantField pc = build_density_approx(fx, g);
  EXPECT_EQ(pc.kind, CellFieldKind::density);
  EXPECT_NEAR(pc(0.25, 0.9), 0.25, 1e-14);
  EXPECT_NEAR(pc(0.75, 0.1), 0.75, 1e-14);
  // Interior node belongs to the upper cell (half-open convention)...
  EXPECT_NEAR(pc(0.5, 0.0), 0.75, 1e-14);
  // ...while the top-right box corner stays covered by the last cell.
  EXPECT_NEAR(pc(1.0, 1.0), 0.75, 1e-14);
  // Outside the box the approximation vanishes identically.
  EXPECT_EQ(pc(1.5, 0.5), 0.0);
  EXPECT_EQ(pc(0.5, -0.1), 0.0);
}

TEST(BuildDensityApprox, RejectsNegativeSourceDensity) {
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 2);
  EXPECT_THROW(build_density_approx(make_constant(-1.0), g), Error);
}

TEST(BuildQuantityApprox, UnitQuantityReproducesDensityValues) {
  const ScalarField bump = make_cos2_bump();
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 4);
  const PiecewiseConstantField pc = build_density_approx(bump, g);
  const CellMatrix w = cell_averages(make_constant(1.0), g);
  const PiecewiseConstantField pcq = build_quantity_approx(pc.values, w, g);
  EXPECT_EQ(pcq.kind, CellFieldKind::quantity_product);
  for (size_t k = 0; k < pc.values.v.size(); ++k) {
    EXPECT_NEAR(pcq.values.v[k], pc.values.v[k],
                1e-14 * std::abs(pc.values.v[k]));
  }
}

TEST(BuildQuantityApprox, ConstantFactorsMultiply) {
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 2);
  const CellMatrix rho = cell_averages(make_constant(2.0), g);
  const CellMatrix omega = cell_averages(make_constant(3.0), g);
  const PiecewiseConstantField pcq = build_quantity_approx(rho, omega, g);
  for (double v : pcq.values.v) EXPECT_NEAR(v, 6.0, 1e-13);
}

TEST(BuildQuantityApprox, LinearFactorsGiveProductOfAverages) {
  const ScalarField fx([](double x, double) { return x; });
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 2);
  const CellMatrix a = cell_averages(fx, g);
  const PiecewiseConstantField pcq = build_quantity_approx(a, a, g);
  EXPECT_NEAR(pcq.values.at(0, 0), 0.0625, 1e-13);
  EXPECT_NEAR(pcq.values.at(0, 1), 0.0625, 1e-13);
  EXPECT_NEAR(pcq.values.at(1, 0), 0.5625, 1e-13);
  EXPECT_NEAR(pcq.values.at(1, 1), 0.5625, 1e-13);
}

TEST(BuildQuantityApprox, RejectsMismatchedMatrixSizes) {
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 2);
  const CellMatrix right = cell_averages(make_constant(1.0), g);
  const CellMatrix wrong(3);
  EXPECT_THROW(build_quantity_approx(wrong, right, g), Error);
  EXPECT_THROW(build_quantity_approx(right, wrong, g), Error);
}

TEST(WeakIntegral, ConstantAgainstConstantIsTheArea) {
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 4);
  const PiecewiseConstantField pc = build_density_approx(make_constant(1.0), g);
  EXPECT_NEAR(weak_integral(pc, make_constant(1.0)), 1.0, 1e-14);
}

TEST(WeakIntegral, ZeroFieldGivesExactZero) {
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 4);
  const PiecewiseConstantField pc = build_density_approx(make_constant(0.0), g);
  EXPECT_EQ(weak_integral(pc, make_gaussian()), 0.0);
}

TEST(WeakIntegral, MassMatchesSourceIntegral) {
  const ScalarField fx([](double x, double) { return x; });
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 8);
  const PiecewiseConstantField pc = build_density_approx(fx, g);
  EXPECT_NEAR(pc.mass(), 0.5, 1e-12);
}

TEST(WeakIntegral, ThreadCountDoesNotChangeResult) {
  const ScalarField bump = make_cos2_bump();
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 8);
  const PiecewiseConstantField pc = build_density_approx(bump, g);
  const ScalarField phi = make_cos2_wave();
  EXPECT_EQ(weak_integral(pc, phi, {}, 1), weak_integral(pc, phi, {}, 4));
}

TEST(CoveringBox, NoDeclaredSupportKeepsGridBox) {
  const BoxDomain grid_box(0.0, 1.0, 0.0, 1.0);
  const ScalarField f = make_gaussian();  // unbounded support
  const ScalarField phi = make_cos2_wave();
  const BoxDomain got = covering_box(grid_box, {&f, &phi});
  EXPECT_EQ(got.l1_lo, 0.0);
  EXPECT_EQ(got.l1_hi, 1.0);
  EXPECT_EQ(got.l2_lo, 0.0);
  EXPECT_EQ(got.l2_hi, 1.0);
}

TEST(CoveringBox, HullsDeclaredSupportBeyondGrid) {
  const BoxDomain grid_box(0.0, 1.0, 0.0, 1.0);
  const ScalarField bump = make_cos2_bump();  // support [-1, 1]^2
  const BoxDomain got = covering_box(grid_box, {&bump});
  EXPECT_EQ(got.l1_lo, -1.0);
  EXPECT_EQ(got.l1_hi, 1.0);
  EXPECT_EQ(got.l2_lo, -1.0);
  EXPECT_EQ(got.l2_hi, 1.0);
}

TEST(CoveringBox, DisjointSupportsFallBackToGridBox) {
  // The reference integrand is a product: disjoint declared supports mean it
  // vanishes identically, so the grid box alone suffices.
  const BoxDomain grid_box(0.0, 1.0, 0.0, 1.0);
  const ScalarField left = make_box_indicator(BoxDomain(-3.0, -2.0, 0.0, 1.0));
  const ScalarField right = make_box_indicator(BoxDomain(2.0, 3.0, 0.0, 1.0));
  const BoxDomain got = covering_box(grid_box, {&left, &right});
  EXPECT_EQ(got.l1_lo, 0.0);
  EXPECT_EQ(got.l1_hi, 1.0);
}

TEST(WeakErrorDensity, ConstantTestFunctionSeesMassPreservation) {
  // With phi identically 1 the weak error reduces to the mass defect of the
  // cell-average projection, which is zero by construction.
  const ScalarField bump = make_cos2_bump();
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 4);
  const PiecewiseConstantField pc = build_density_approx(bump, g);
  EXPECT_LE(weak_error_density(bump, pc, make_constant(1.0)), 1e-10);
}

TEST(WeakErrorDensity, ConstantDensityIsReproducedExactly) {
  const ScalarField rho = make_constant(0.75);
  const Grid g = make_grid(BoxDomain(0.0, 1.0, 0.0, 1.0), 4);
  const PiecewiseConstantField pc = build_density_approx(rho, g);
  EXPECT_LE(weak_error_density(rho, pc, make_cos2_wave()), 1e-12);
}

TEST(WeakErrorDensity, SmoothCompactCaseStaysUnderSecondOrderEnvelope) {
  // Smooth compactly supported density against a smooth test function at
  // N = 8: the measured weak error must be positive (the projection is not
  // exact) yet stay under C / N^2 with C assembled from the analytic
  // derivative sups (16 * pi^2 for this pairing).
  const ScalarField bump = make_cos2_bump();
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 8);
  const PiecewiseConstantField pc = build_density_approx(bump, g);
  const double err = weak_error_density(bump, pc, bump);
  EXPECT_GT(err, 0.0);
  EXPECT_LE(err, 16.0 * kPi * kPi / 64.0);
}

TEST(WeakErrorQuantity, ZeroQuantityGivesZeroError) {
  const ScalarField bump = make_cos2_bump();
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 4);
  const PiecewiseConstantField pc = build_density_approx(bump, g);
  const CellMatrix w = cell_averages(make_constant(0.0), g);
  const PiecewiseConstantField pcq = build_quantity_approx(pc.values, w, g);
  EXPECT_LE(weak_error_quantity(bump, make_constant(0.0), pcq,
                                make_cos2_wave()),
            1e-15);
}

TEST(WeakErrorQuantity, UnitQuantityMatchesDensityError) {
  const ScalarField bump = make_cos2_bump();
  const ScalarField one = make_constant(1.0);
  const ScalarField phi = make_cos2_wave();
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 4);
  const PiecewiseConstantField pc = build_density_approx(bump, g);
  const CellMatrix w = cell_averages(one, g);
  const PiecewiseConstantField pcq = build_quantity_approx(pc.values, w, g);
  const double qerr = weak_error_quantity(bump, one, pcq, phi);
  const double derr = weak_error_density(bump, pc, phi);
  EXPECT_NEAR(qerr, derr, 1e-12);
}

TEST(WeakErrorQuantity, SmoothCaseStaysUnderMixedOrderEnvelope) {
  // rho = omega = phi = the smooth bump at N = 8; the envelope combines the
  // first-order quantity term (2 pi / N) and the second-order density term
  // (16 pi^2 * sup|omega| / N^2).
  const ScalarField bump = make_cos2_bump();
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 8);
  const PiecewiseConstantField pc = build_density_approx(bump, g);
  const CellMatrix w = cell_averages(bump, g);
  const PiecewiseConstantField pcq = build_quantity_approx(pc.values, w, g);
  const double err = weak_error_quantity(bump, bump, pcq, bump);
  EXPECT_GT(err, 0.0);
  EXPECT_LE(err, 2.0 * kPi / 8.0 + 16.0 * kPi * kPi / 64.0);
}

TEST(DecompositionResidual, VanishesForSmoothFields) {
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 4);
  EXPECT_LE(decomposition_residual(make_cos2_bump(), g, make_cos2_wave()),
            1e-9);
}

TEST(DecompositionResidual, VanishesForIndicatorDensity) {
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 4);
  EXPECT_LE(decomposition_residual(make_disk_indicator(0.7), g,
                                   make_cos2_wave()),
            1e-7);
}

TEST(DecompositionResidual, ZeroDensityGivesZeroResidual) {
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 4);
  EXPECT_LE(decomposition_residual(make_constant(0.0), g, make_cos2_wave()),
            1e-15);
}

TEST(QuantityDecompositionResidual, VanishesForSmoothFields) {
  const Grid g = make_grid(BoxDomain(-1.0, 1.0, -1.0, 1.0), 4);
  EXPECT_LE(quantity_decomposition_residual(make_cos2_bump(), make_cos2_wave(),
                                            g, make_cos2_wave()),
            1e-9);
}

TEST(ProjectionInvariants, MassPositivityAndSupContraction) {
  struct Case {
    ScalarField rho;
    BoxDomain box;
    double exact_mass;
    double sup;
  };
  const std::vector<Case> cases = {
      {make_cos2_bump(), BoxDomain(-1.0, 1.0, -1.0, 1.0), 1.0, 1.0},
      {make_gaussian(), BoxDomain(-2.0, 2.0, -2.0, 2.0),
       kPi * std::erf(2.0) * std::erf(2.0), 1.0},
      {make_disk_indicator(0.7), BoxDomain(-1.0, 1.0, -1.0, 1.0),
       kPi * 0.49, 1.0},
  };
  for (const Case& c : cases) {
    for (int n : {4, 8}) {
      const Grid g = make_grid(c.box, n);
      const PiecewiseConstantField pc = build_density_approx(c.rho, g);
      EXPECT_NEAR(pc.mass(), c.exact_mass, 1e-10);
      double min_v = pc.values.v.front();
      double max_v = pc.values.v.front();
      for (double v : pc.values.v) {
        min_v = std::min(min_v, v);
        max_v = std::max(max_v, v);
      }
      EXPECT_GE(min_v, -1e-12);
      EXPECT_LE(max_v, c.sup * (1.0 + 1e-12));
    }
  }
}

TEST(ProjectionInvariants, ConstantDensityIsAFixedPoint) {
  const Grid g = make_grid(BoxDomain(-0.5, 1.5, 0.0, 1.0), 4);
  const PiecewiseConstantField pc = build_density_approx(make_constant(3.25), g);
  for (double v : pc.values.v) EXPECT_NEAR(v, 3.25, 1e-14);
}

}  // namespace
