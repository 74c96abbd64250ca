// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "geofno/deform.hpp"
#include "geofno/error.hpp"
#include "geofno/geometry.hpp"
#include "geofno/spectral.hpp"
#include "helpers.hpp"

namespace geofno {
namespace {

using testing::max_abs_diff;
using testing::random_real;

constexpr double kPi = std::numbers::pi;

TEST(Geometry, ValidateCatchesBrokenInvariants) {
  EXPECT_NO_THROW(Geometry::point_cloud(Tensor::zeros({5, 2})).validate());
  EXPECT_THROW(Geometry::point_cloud(Tensor::zeros({5, 4})).validate(), DimensionError);
  Geometry g = Geometry::point_cloud(Tensor::zeros({5, 2}));
  g.mask = std::vector<std::uint8_t>(4, 1);
  EXPECT_THROW(g.validate(), DimensionError);
  EXPECT_THROW(Geometry::point_cloud(Tensor::zeros({5, 2})).grid(), KindError);
}

TEST(Geometry, StructuredViewsShareLayout) {
  const Geometry m = o_mesh_generate({1.0}, {2.0}, 6, 3);
  EXPECT_EQ(m.grid(), (std::vector<std::size_t>{6, 3}));
  EXPECT_EQ(m.point_count(), 18u);
  EXPECT_EQ(m.flat_points().shape(), (Shape{18, 2}));
  EXPECT_EQ(m.as_point_cloud().kind, GeometryKind::kPointCloud);
  EXPECT_TRUE(m.as_point_cloud().points.bitwise_equal(m.flat_points()));
}

TEST(CanonicalMap, IndexOverExtent) {
  const Geometry m = Geometry::structured(Tensor::zeros({4, 4, 2}));
  const Tensor xi = canonical_map(m);
  ASSERT_EQ(xi.shape(), (Shape{4, 4, 2}));
  const std::size_t at12 = (1 * 4 + 2) * 2;
  EXPECT_EQ(xi.real()[at12], 0.25);
  EXPECT_EQ(xi.real()[at12 + 1], 0.5);
  EXPECT_EQ(xi.real()[0], 0.0);
  EXPECT_EQ(xi.real()[1], 0.0);
}

TEST(CanonicalMap, UniformSpacing) {
  const Geometry m = Geometry::structured(Tensor::zeros({5, 3, 2}));
  const Tensor xi = canonical_map(m);
  const auto v = xi.real();
  for (std::size_t i = 0; i + 1 < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(v[((i + 1) * 3 + j) * 2] - v[(i * 3 + j) * 2], 0.2, 1e-15);
    }
  }
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j + 1 < 3; ++j) {
      EXPECT_NEAR(v[(i * 3 + j + 1) * 2 + 1] - v[(i * 3 + j) * 2 + 1], 1.0 / 3.0, 1e-15);
    }
  }
  EXPECT_THROW(canonical_map(Geometry::point_cloud(Tensor::zeros({3, 2}))), KindError);
}

TEST(RMeshDeform, FixedPointsAndMidpoint) {
  EXPECT_DOUBLE_EQ(r_mesh_deform(1.0, 1.0, 3.0, 0.2), 1.0);
  EXPECT_DOUBLE_EQ(r_mesh_deform(3.0, 1.0, 3.0, 0.2), 3.0);
  // u = 1: 1 + 0.2 * 1 + 0.8 * 1 / 2
  EXPECT_DOUBLE_EQ(r_mesh_deform(2.0, 1.0, 3.0, 0.2), 1.6);
  EXPECT_DOUBLE_EQ(r_mesh_deform(0.0, 1.0, 3.0, 0.2), 0.0);
  EXPECT_DOUBLE_EQ(r_mesh_deform(2.0, 1.0, 3.0, 1.0), 2.0);
}

TEST(RMeshDeform, MonotoneAndRejectsBadArguments) {
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double r = r_mesh_deform(0.04 * i, 1.0, 3.0, 0.2);
    EXPECT_GT(r, prev);
    prev = r;
  }
  EXPECT_THROW(r_mesh_deform(-0.1, 1.0, 3.0, 0.2), DomainError);
  EXPECT_THROW(r_mesh_deform(1.0, 3.0, 1.0, 0.2), DomainError);
  EXPECT_THROW(r_mesh_deform(1.0, 1.0, 3.0, 0.0), DomainError);
}

TEST(OMesh, FourByTwoRadiiAndAngles) {
  const Geometry m = o_mesh_generate({1.0}, {2.0}, 4, 2);
  const auto p = m.points.real();
  ASSERT_EQ(m.points.shape(), (Shape{4, 2, 2}));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double x = p[(i * 2 + j) * 2], y = p[(i * 2 + j) * 2 + 1];
      EXPECT_NEAR(std::hypot(x, y), 1.0 + j, 1e-15);
      EXPECT_NEAR(x, (1.0 + j) * std::cos(kPi / 2 * i), 1e-15);
      EXPECT_NEAR(y, (1.0 + j) * std::sin(kPi / 2 * i), 1e-15);
    }
  }
}

TEST(OMesh, PointsStayBetweenRadii) {
  std::vector<double> rs(64), re(64);
  for (std::size_t i = 0; i < 64; ++i) {
    rs[i] = 0.5 + 0.1 * std::sin(2 * kPi * i / 64.0);
    re[i] = 2.0 + 0.3 * std::cos(4 * kPi * i / 64.0);
  }
  const std::array<double, 2> center{0.3, -0.2};
  const Geometry m = o_mesh_generate(rs, re, 64, 41, center);
  EXPECT_EQ(m.grid(), (std::vector<std::size_t>{64, 41}));
  const auto p = m.points.real();
  for (std::size_t i = 0; i < 64; ++i) {
    for (std::size_t j = 0; j < 41; ++j) {
      const double r = std::hypot(p[(i * 41 + j) * 2] - center[0], p[(i * 41 + j) * 2 + 1] - center[1]);
      EXPECT_GE(r, rs[i] - 1e-14);
      EXPECT_LE(r, re[i] + 1e-14);
    }
  }
  EXPECT_THROW(o_mesh_generate({2.0}, {1.0}, 4, 2), GeometryError);
  EXPECT_THROW(o_mesh_generate({1.0, 1.0}, {2.0}, 4, 2), DimensionError);
}

TEST(SinusoidalFeatures, LayoutAndExactZeros) {
  const Tensor x({3, 1}, std::vector<double>{0.0, 0.5, 0.25});
  const Tensor f = sinusoidal_features(x, 2);
  ASSERT_EQ(f.shape(), (Shape{3, 3}));
  const auto v = f.real();
  EXPECT_EQ(v[0], 0.0);
  EXPECT_EQ(v[1], 0.0);
  EXPECT_EQ(v[2], 0.0);
  EXPECT_EQ(v[3], 0.5);
  EXPECT_NEAR(v[4], 0.0, 1e-15);
  EXPECT_NEAR(v[5], 0.0, 1e-15);
  EXPECT_EQ(v[6], 0.25);
  EXPECT_NEAR(v[7], 1.0, 1e-15);
  EXPECT_NEAR(v[8], 0.0, 1e-15);
}

TEST(SinusoidalFeatures, CoordinateMajorOrder) {
  Rng rng(3);
  const Tensor x = random_real({4, 2}, rng);
  const Tensor f = sinusoidal_features(x, 3);
  ASSERT_EQ(f.shape(), (Shape{4, 8}));
  for (std::size_t n = 0; n < 4; ++n) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double xj = x.real()[n * 2 + j];
      EXPECT_EQ(f.real()[n * 8 + j], xj);
      for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(f.real()[n * 8 + 2 + j * 3 + i], std::sin(std::ldexp(2.0 * kPi * xj, static_cast<int>(i))), 1e-14);
      }
    }
  }
}

TEST(DeformInverse, IdentityWrapsModuloOne) {
  const Tensor x({2, 2}, std::vector<double>{1.25, -0.25, 0.5, 2.0});
  EXPECT_EQ(deform_inverse(CoordinateMap::identity(2), x).to_vector(), (std::vector<double>{0.25, 0.75, 0.5, 0.0}));
}

TEST(DeformInverse, FreshLearnedMapIsIdentity) {
  Rng rng(4);
  DeformNetConfig cfg;
  cfg.frequencies = 3;
  cfg.hidden = {8, 8};
  const CoordinateMap map = CoordinateMap::learned(DeformNet(cfg, rng));
  const Tensor x = random_real({10, 2}, rng, 0.0, 1.0);
  EXPECT_TRUE(deform_inverse(map, x).bitwise_equal(x));
}

TEST(DeformInverse, OMeshMapOfGeneratedMeshIsCanonical) {
  const std::size_t na = 16, nr = 5;
  std::vector<double> rs(na), re(na);
  for (std::size_t i = 0; i < na; ++i) {
    rs[i] = 0.1 + 0.02 * std::cos(2 * kPi * i / na);
    re[i] = 0.4 + 0.03 * std::sin(2 * kPi * i / na);
  }
  RadialProfile prof{{0.5, 0.5}, rs, re};
  const Geometry mesh = o_mesh_generate(rs, re, na, nr, prof.center);
  const Tensor xi = deform_inverse(CoordinateMap::o_mesh(prof, nr), mesh.flat_points());
  const Tensor ref = canonical_map(mesh);
  for (std::size_t q = 0; q < 2 * na * nr; ++q) {
    const double d = xi.real()[q] - ref.real()[q];
    EXPECT_LT(std::abs(d - std::round(d)), 1e-12) << "entry " << q;
  }
}

TEST(DeformInverse, RMeshUndoesRadialStretch) {
  const double rs = 0.1, re = 0.45, alpha = 0.2;
  RadialProfile prof{{0.5, 0.5}, {rs}, {re}};
  const CoordinateMap map = CoordinateMap::r_mesh(prof, alpha);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const double r = rng.uniform(0.01, re), th = rng.uniform(0.0, 2 * kPi);
    const double rp = r_mesh_deform(r, rs, re, alpha);
    const Tensor x({1, 2}, std::vector<double>{0.5 + rp * std::cos(th), 0.5 + rp * std::sin(th)});
    const Tensor xi = deform_inverse(map, x);
    EXPECT_NEAR(xi.real()[0], 0.5 + r * std::cos(th), 1e-12);
    EXPECT_NEAR(xi.real()[1], 0.5 + r * std::sin(th), 1e-12);
  }
}

TEST(InterpToUniform, CloudOnGridIsCopiedExactly) {
  const std::size_t s = 41;
  const Tensor pts = uniform_grid_points({s, s});
  Rng rng(6);
  const Tensor vals = random_real({s * s, 2}, rng);
  const UniformGridField g = interp_to_uniform(Geometry::point_cloud(pts), vals, s);
  EXPECT_TRUE(ops::reshape(g.values, {s * s, 2}).bitwise_equal(vals));
  EXPECT_EQ(g.mask, std::vector<std::uint8_t>(s * s, 1));
}

TEST(InterpToUniform, LinearFieldWithinTwoCells) {
  const std::size_t s = 24;
  Rng rng(7);
  const Tensor pts = random_real({600, 2}, rng, 0.2, 0.8);
  std::vector<double> v(600);
  for (std::size_t q = 0; q < 600; ++q) v[q] = pts.real()[2 * q];
  const UniformGridField g = interp_to_uniform(Geometry::point_cloud(pts), Tensor({600, 1}, std::move(v)), s);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const double gx = static_cast<double>(i) / s, gy = static_cast<double>(j) / s;
      const bool interior = gx > 0.25 && gx < 0.75 && gy > 0.25 && gy < 0.75;
      if (!interior) continue;
      ASSERT_EQ(g.mask[i * s + j], 1);
      ++covered;
      EXPECT_LT(std::abs(g.values.real()[i * s + j] - gx), 2.0 / s);
    }
  }
  EXPECT_GT(covered, 0u);
  EXPECT_EQ(g.mask[0], 0);
}

TEST(SampleBilinear, ReproducesBilinearFunctionsOnTorus) {
  const std::size_t s = 8;
  std::vector<double> grid(s * s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) grid[i * s + j] = 1.0 + 0.5 * i + 0.25 * j + 0.1 * i * j;
  }
  const Tensor gv({s, s, 1}, std::move(grid));
  Rng rng(8);
  const Tensor pts = random_real({30, 2}, rng, 0.0, 7.0 / s);
  const Tensor out = sample_bilinear(gv, pts);
  for (std::size_t q = 0; q < 30; ++q) {
    const double u = pts.real()[2 * q] * s, v = pts.real()[2 * q + 1] * s;
    EXPECT_NEAR(out.real()[q], 1.0 + 0.5 * u + 0.25 * v + 0.1 * u * v, 1e-12);
  }
}

}  // namespace
}  // namespace geofno
