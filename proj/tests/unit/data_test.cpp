// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "geofno/error.hpp"
#include "geofno/poisson.hpp"
#include "geofno/synthetic.hpp"
#include "helpers.hpp"

namespace geofno {
namespace {

using testing::max_abs_diff;
using testing::random_real;

double closed_form_error(std::size_t nt, std::size_t nr) {
  const Geometry mesh = o_mesh_generate({0.4}, {1.0}, nt, nr);
  const ReferenceSolution sol = solve_reference(mesh, Tensor::full({nt, nr}, 1.0));
  const auto p = mesh.points.real();
  double e = 0.0;
  for (std::size_t q = 0; q < nt * nr; ++q) {
    e = std::max(e, std::abs(sol.u.real()[q] - annulus_closed_form(std::hypot(p[2 * q], p[2 * q + 1]), 0.4, 1.0)));
  }
  return e;
}

TEST(ClosedForm, SolvesRadialPoissonWithZeroBoundaryValues) {
  const double ri = 0.4, ro = 1.0;
  EXPECT_NEAR(annulus_closed_form(ri, ri, ro), 0.0, 1e-15);
  EXPECT_NEAR(annulus_closed_form(ro, ri, ro), 0.0, 1e-15);
  const double h = 1e-4;
  for (double r : {0.45, 0.6, 0.8, 0.95}) {
    const double um = annulus_closed_form(r - h, ri, ro), u0 = annulus_closed_form(r, ri, ro),
                 up = annulus_closed_form(r + h, ri, ro);
    const double lap = (up - 2 * u0 + um) / (h * h) + (up - um) / (2 * h) / r;
    EXPECT_NEAR(lap, -1.0, 1e-6);
  }
}

TEST(Poisson, ZeroSourceGivesZero) {
  const Geometry mesh = o_mesh_generate({0.4}, {1.0}, 16, 6);
  const ReferenceSolution sol = solve_reference(mesh, Tensor::zeros({16, 6}));
  EXPECT_EQ(max_abs_diff(sol.u, Tensor::zeros({16, 6})), 0.0);
}

TEST(Poisson, MatchesClosedFormAtSecondOrder) {
  const double coarse = closed_form_error(32, 13);
  const double fine = closed_form_error(64, 25);
  EXPECT_LT(coarse, 5e-3);
  EXPECT_NEAR(std::log2(coarse / fine), 2.0, 0.25);
}

TEST(Poisson, LinearInSourceAndZeroOnBoundary) {
  const std::size_t nt = 20, nr = 7;
  const Geometry mesh = o_mesh_generate({0.3}, {1.1}, nt, nr, {0.2, -0.1});
  Rng rng(1);
  const Tensor f1 = random_real({nt, nr}, rng), f2 = random_real({nt, nr}, rng);
  const ReferenceSolution a = solve_reference(mesh, f1);
  const ReferenceSolution b = solve_reference(mesh, f2);
  const ReferenceSolution c = solve_reference(mesh, ops::add(f1, ops::scale(f2, 2.0)));
  EXPECT_LT(max_abs_diff(c.u, ops::add(a.u, ops::scale(b.u, 2.0))), 1e-12);
  EXPECT_LT(a.residual, 1e-10);
  for (std::size_t i = 0; i < nt; ++i) {
    EXPECT_EQ(a.u.real()[i * nr], 0.0);
    EXPECT_EQ(a.u.real()[i * nr + nr - 1], 0.0);
  }
}

TEST(Poisson, RejectsWrongInputs) {
  const Geometry mesh = o_mesh_generate({0.4}, {1.0}, 8, 4);
  EXPECT_THROW(solve_reference(mesh, Tensor::zeros({8, 5})), DimensionError);
  EXPECT_THROW(solve_reference(mesh.as_point_cloud(), Tensor::zeros({8, 4})), KindError);
}

TEST(Synthetic, ZeroDesignIsPerfectAnnulusWithClosedFormSolution) {
  SyntheticConfig c;
  const std::vector<double> a(c.design_size(), 0.0);
  const SampleRecord r = synthetic_record(c, a);
  ASSERT_EQ(r.output.shape(), (Shape{32, 12, 1}));
  const auto p = r.geometry.points.real();
  double e = 0.0;
  for (std::size_t q = 0; q < 32 * 12; ++q) {
    const double x = (p[2 * q] - 0.5) / c.coordinate_scale, y = (p[2 * q + 1] - 0.5) / c.coordinate_scale;
    const double rho = std::hypot(x, y);
    const std::size_t j = q % 12;
    EXPECT_NEAR(rho, 0.4 + 0.6 * static_cast<double>(j) / 11.0, 1e-12);
    EXPECT_EQ(r.input.real()[q], 1.0);
    e = std::max(e, std::abs(r.output.real()[q] - annulus_closed_form(rho, 0.4, 1.0)));
  }
  EXPECT_LT(e, 2e-3);
}

TEST(Synthetic, BasisReproducesRecordPoints) {
  SyntheticConfig c;
  Rng rng(2);
  std::vector<double> a(c.design_size());
  do {
    for (auto& v : a) v = rng.uniform(-0.05, 0.05);
  } while (!valid_design(c, a));
  const AnnulusBasis b = annulus_basis(c);
  const Tensor pts = ops::add(ops::matmul(Tensor({1, a.size()}, a), b.basis), b.offset);
  const SampleRecord r = synthetic_record(c, a);
  EXPECT_LT(max_abs_diff(pts.raw(), r.geometry.points.raw()), 1e-14);
}

TEST(Synthetic, DesignValidity) {
  SyntheticConfig c;
  std::vector<double> a(c.design_size(), 0.0);
  EXPECT_TRUE(valid_design(c, a));
  a[0] = -0.45;  // outer radius 0.55 leaves a gap below min_gap
  EXPECT_FALSE(valid_design(c, a));
  EXPECT_THROW(synthetic_record(c, a), GeometryError);
  EXPECT_FALSE(valid_design(c, std::vector<double>(3, 0.0)));
}

TEST(Synthetic, SameSeedIsBitIdenticalAndHashTracksConfig) {
  SyntheticConfig c;
  c.n_theta = 12;
  c.n_radial = 5;
  c.train_count = 6;
  c.test_count = 4;
  c.seed = 9;
  const SyntheticSplit a = gen_synthetic(c), b = gen_synthetic(c);
  EXPECT_TRUE(bundles_equal(a.train, b.train));
  EXPECT_TRUE(bundles_equal(a.test, b.test));
  EXPECT_EQ(a.train.size(), 6u);
  EXPECT_EQ(a.test.size(), 4u);
  EXPECT_NO_THROW(a.train.validate());
  EXPECT_EQ(a.train.manifest.generator_hash, c.hash());
  SyntheticConfig d = c;
  d.seed = 10;
  EXPECT_NE(d.hash(), c.hash());
  EXPECT_FALSE(bundles_equal(gen_synthetic(d).train, a.train));
  d = c;
  d.source_bound = 0.25;
  EXPECT_NE(d.hash(), c.hash());
  EXPECT_EQ(SyntheticConfig(c).hash(), c.hash());
}

TEST(Synthetic, TrainAndTestDesignsDiffer) {
  SyntheticConfig c;
  c.n_theta = 12;
  c.n_radial = 5;
  c.train_count = 3;
  c.test_count = 3;
  const SyntheticSplit s = gen_synthetic(c);
  for (const auto& tr : s.train.records) {
    for (const auto& te : s.test.records) EXPECT_FALSE(tr.geometry.design_params->bitwise_equal(*te.geometry.design_params));
  }
}

}  // namespace
}  // namespace geofno
