// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "geofno/design.hpp"
#include "geofno/error.hpp"
#include "helpers.hpp"

namespace geofno {
namespace {

using testing::random_real;

constexpr double kPi = std::numbers::pi;

Tensor circle(std::size_t n, double radius, bool clockwise = false) {
  std::vector<double> p(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (clockwise ? -2.0 : 2.0) * kPi * static_cast<double>(i) / static_cast<double>(n);
    p[2 * i] = radius * std::cos(t);
    p[2 * i + 1] = radius * std::sin(t);
  }
  return Tensor({n, 2}, std::move(p));
}

TEST(BoundaryQuadrature, ConstantFieldIntegratesToZero) {
  const Tensor square({4, 2}, std::vector<double>{0, 0, 1, 0, 1, 1, 0, 1});
  for (const Tensor& poly : {square, circle(37, 1.3)}) {
    const BoundaryQuadrature b = boundary_quadrature(poly);
    const Tensor one = Tensor::full({poly.dim(0)}, 2.5);
    EXPECT_NEAR(boundary_functional(one, b, 0).item(), 0.0, 1e-14);
    EXPECT_NEAR(boundary_functional(one, b, 1).item(), 0.0, 1e-14);
  }
}

TEST(BoundaryQuadrature, NormalsAreUnitOutwardAndWeightsSumToPerimeter) {
  const Tensor c = circle(256, 2.0);
  const BoundaryQuadrature b = boundary_quadrature(c);
  double perimeter = 0.0;
  for (std::size_t i = 0; i < 256; ++i) {
    const double nx = b.normals.real()[2 * i], ny = b.normals.real()[2 * i + 1];
    EXPECT_NEAR(std::hypot(nx, ny), 1.0, 1e-14);
    EXPECT_GT(nx * c.real()[2 * i] + ny * c.real()[2 * i + 1], 0.0);
    perimeter += b.weights.real()[i];
  }
  EXPECT_NEAR(perimeter, 4.0 * kPi, 4.0 * kPi * 1e-3);
}

TEST(BoundaryFunctional, NxOnUnitCircleGivesPi) {
  const Tensor c = circle(256, 1.0);
  const BoundaryQuadrature b = boundary_quadrature(c);
  std::vector<double> nx(256);
  for (std::size_t i = 0; i < 256; ++i) nx[i] = c.real()[2 * i];
  EXPECT_NEAR(boundary_functional(Tensor({256}, nx), b, 0).item(), kPi, 0.01 * kPi);
  EXPECT_NEAR(boundary_functional(Tensor({256, 1}, nx), b, 1).item(), 0.0, 1e-12);
}

TEST(BoundaryFunctional, ReversedTraversalFlipsSign) {
  Rng rng(3);
  const Tensor ccw = circle(40, 1.0);
  const Tensor field = random_real({40}, rng);
  std::vector<double> rev_pts(80), rev_field(40);
  for (std::size_t i = 0; i < 40; ++i) {
    rev_pts[2 * i] = ccw.real()[2 * (39 - i)];
    rev_pts[2 * i + 1] = ccw.real()[2 * (39 - i) + 1];
    rev_field[i] = field.real()[39 - i];
  }
  const BoundaryQuadrature a = boundary_quadrature(ccw);
  const BoundaryQuadrature b = boundary_quadrature(Tensor({40, 2}, rev_pts));
  for (std::size_t axis : {0u, 1u}) {
    EXPECT_NEAR(boundary_functional(Tensor({40}, rev_field), b, axis).item(),
                -boundary_functional(field, a, axis).item(), 1e-13);
  }
}

TEST(BoundaryFunctional, GradientIsNormalTimesWeight) {
  const BoundaryQuadrature b = boundary_quadrature(circle(12, 1.0));
  const auto g = testing::tape_grad([&](const Tensor& f) { return boundary_functional(f, b, 1); }, Tensor::zeros({12}));
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(g[i], b.normals.real()[2 * i + 1] * b.weights.real()[i], 1e-15);
}

TEST(OptimizeDesign, QuadraticConvergesToOptimum) {
  const auto p = quadratic_design_problem({0.3, -0.1}, {1.0, 2.0}, {-1, -1}, {1, 1}, {0.0, 0.0});
  const DesignResult r = optimize_design(p, 2000, 1e-2);
  EXPECT_NEAR(r.theta[0], 0.3, 1e-6);
  EXPECT_NEAR(r.theta[1], -0.1, 1e-6);
  EXPECT_EQ(r.trace.iterations.size(), 2000u);
}

TEST(OptimizeDesign, OptimumOutsideBoundsIsClipped) {
  const auto p = quadratic_design_problem({0.8}, {1.0}, {-0.2}, {0.2}, {0.0});
  const DesignResult r = optimize_design(p, 300, 1e-2);
  EXPECT_EQ(r.theta[0], 0.2);
  for (const auto& it : r.trace.iterations) {
    EXPECT_LE(it.theta[0], 0.2);
    EXPECT_GE(it.theta[0], -0.2);
  }
}

TEST(OptimizeDesign, ZeroWeightLeavesThetaUnchanged) {
  const auto p = quadratic_design_problem({0.5}, {0.0}, {-1}, {1}, {0.1});
  EXPECT_EQ(optimize_design(p, 50, 1e-2).theta, std::vector<double>{0.1});
}

TEST(OptimizeDesign, InvalidProblemIsRejected) {
  EXPECT_THROW(quadratic_design_problem({0.5}, {1.0}, {1}, {-1}, {0.0}).validate(), Error);
  EXPECT_THROW(quadratic_design_problem({0.5}, {1.0}, {-1}, {1}, {2.0}).validate(), Error);
}

TEST(ScanDesign, FindsGridMinimum) {
  const auto p = quadratic_design_problem({0.0695}, {1.0}, {-0.2}, {0.2}, {0.0});
  const DesignScan s = scan_design(p, 101);
  ASSERT_EQ(s.grid.size(), 101u);
  EXPECT_DOUBLE_EQ(s.grid.front(), -0.2);
  EXPECT_DOUBLE_EQ(s.grid.back(), 0.2);
  EXPECT_NEAR(s.grid[s.best], 0.068, 1e-12);
  EXPECT_NEAR(s.values[s.best], 0.0015 * 0.0015, 1e-15);
}

TEST(VerifyDesign, AnalyticProblemHasZeroGap) {
  const auto p = quadratic_design_problem({0.3, -0.1}, {1.0, 2.0}, {-1, -1}, {1, 1}, {0.0, 0.0});
  const DesignVerification v = verify_design(p, {0.2, 0.4});
  EXPECT_EQ(v.gap, 0.0);
  EXPECT_DOUBLE_EQ(v.solver, 0.01 + 2.0 * 0.25);
}

}  // namespace
}  // namespace geofno
