// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numeric>

#include "geofno/config.hpp"
#include "geofno/error.hpp"
#include "geofno/model.hpp"
#include "geofno/verify.hpp"
#include "helpers.hpp"

namespace geofno {
namespace {

using testing::max_abs_diff;
using testing::random_real;

ModelConfig small_point_config() {
  ModelConfig c;
  c.width = 5;
  c.layers = 3;
  c.k_max = {3, 2};
  c.latent_grid = {8, 6};
  c.lift_hidden = 6;
  c.proj_hidden = 7;
  c.deform.frequencies = 2;
  c.deform.hidden = {6};
  return c;
}

TEST(CountParams, DefaultBenchmarkModelByHand) {
  ModelConfig c = ModelConfig::from_config(ConfigFile::load(std::string(GEOFNO_CONFIG_DIR) + "/geofno.ini"));
  // lift 3 -> 32 -> 32, proj 32 -> 64 -> 1
  const std::size_t lift = 3 * 32 + 32 + 32 * 32 + 32;
  const std::size_t proj = 32 * 64 + 64 + 64 * 1 + 1;
  // four layers of 25 x 25 complex mode weights
  const std::size_t spectral = 4 * (25 * 25) * 32 * 32 * 2;
  // bypass W, coordinate bias weight and bias in the two interior layers
  const std::size_t bypass = 2 * (32 * 32 + 2 * 32 + 32);
  // DeformNet 29 -> 32 -> 32 -> 2
  const std::size_t deform = 29 * 32 + 32 + 32 * 32 + 32 + 32 * 2 + 2;
  EXPECT_EQ(count_params(c), lift + proj + spectral + bypass + deform);
  EXPECT_EQ(count_params(c), 5127683u);
}

TEST(CountParams, EqualsStoredScalarCount) {
  for (const auto map : {MapKind::kIdentity, MapKind::kLearned}) {
    ModelConfig c = small_point_config();
    c.map = map;
    const GeoFnoModel m(c, 1);
    std::size_t scalars = 0;
    for (const auto& p : m.params()) scalars += p.raw().size();
    EXPECT_EQ(count_params(m), scalars);
  }
  ModelConfig s = small_point_config();
  s.io_mode = IoMode::kStructured;
  s.map = MapKind::kNone;
  const GeoFnoModel m(s, 1);
  std::size_t scalars = 0;
  for (const auto& p : m.params()) scalars += p.raw().size();
  EXPECT_EQ(count_params(m), scalars);
}

TEST(Model, ParameterLayoutNames) {
  const auto names = GeoFnoModel::param_names(small_point_config());
  const std::vector<std::string> head{"lift.0.weight", "lift.0.bias", "lift.1.weight", "lift.1.bias",
                                      "fourier.0.spectral", "fourier.1.spectral", "fourier.1.bypass",
                                      "fourier.1.bias_weight", "fourier.1.bias", "fourier.2.spectral"};
  ASSERT_GE(names.size(), head.size());
  EXPECT_TRUE(std::equal(head.begin(), head.end(), names.begin()));
  EXPECT_EQ(names.back(), "deform.1.bias");
}

TEST(Model, SeededInitIsDeterministic) {
  const GeoFnoModel a(small_point_config(), 3), b(small_point_config(), 3), c(small_point_config(), 4);
  bool all_same = true, any_diff = false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    all_same = all_same && a.params()[i].bitwise_equal(b.params()[i]);
    any_diff = any_diff || !a.params()[i].bitwise_equal(c.params()[i]);
  }
  EXPECT_TRUE(all_same);
  EXPECT_TRUE(any_diff);
}

TEST(Model, SetParamsRejectsWrongShapes) {
  GeoFnoModel m(small_point_config(), 0);
  auto p = m.params();
  p[0] = Tensor::zeros({1, 1});
  EXPECT_THROW(m.set_params(p), DimensionError);
  p.pop_back();
  EXPECT_THROW(m.set_params(p), DimensionError);
}

TEST(Model, ConfigValidation) {
  ModelConfig c = small_point_config();
  c.latent_grid = {6, 6};
  EXPECT_THROW(GeoFnoModel(c, 0), SamplingError);
  c = small_point_config();
  c.k_max = {3};
  EXPECT_THROW(GeoFnoModel(c, 0), ConfigError);
  c = small_point_config();
  c.width = 0;
  EXPECT_THROW(GeoFnoModel(c, 0), ConfigError);
}

TEST(Model, LearnedMapStartsAsIdentity) {
  const GeoFnoModel m(small_point_config(), 2);
  Rng rng(2);
  const Tensor pts = random_real({2, 9, 2}, rng, 0.0, 1.0);
  EXPECT_LT(max_abs_diff(m.map_points(m.params(), pts, std::nullopt), pts), 1e-15);
}

TEST(Model, PointCloudForwardIsPermutationEquivariant) {
  ModelConfig c = small_point_config();
  const GeoFnoModel m(c, 5);
  Rng rng(5);
  const std::size_t n = 23;
  const Tensor pts = random_real({n, 2}, rng, 0.1, 0.9);
  const Tensor f = random_real({n, 1}, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<double> pp(n * 2), fp(n);
  for (std::size_t i = 0; i < n; ++i) {
    pp[2 * i] = pts.real()[2 * perm[i]];
    pp[2 * i + 1] = pts.real()[2 * perm[i] + 1];
    fp[i] = f.real()[perm[i]];
  }
  const Tensor out = forward_pointcloud(m, Geometry::point_cloud(pts), f);
  const Tensor out_p =
      forward_pointcloud(m, Geometry::point_cloud(Tensor({n, 2}, std::move(pp))), Tensor({n, 1}, std::move(fp)));
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(out_p.real()[i], out.real()[perm[i]], 1e-12);
}

TEST(Model, QueryPointsMatchSelfEvaluation) {
  ModelConfig c = small_point_config();
  c.map = MapKind::kIdentity;
  const GeoFnoModel m(c, 6);
  Rng rng(6);
  const Tensor pts = random_real({15, 2}, rng, 0.1, 0.9);
  const Tensor f = random_real({15, 1}, rng);
  const Tensor all = forward_pointcloud(m, Geometry::point_cloud(pts), f);
  const Tensor q = ops::reshape(ops::slice_last(ops::reshape(pts, {1, 30}), 4, 10), {3, 2});
  const Tensor at_q = forward_pointcloud(m, Geometry::point_cloud(pts), f, q);
  ASSERT_EQ(at_q.shape(), (Shape{3, 1}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(at_q.real()[i], all.real()[2 + i], 1e-12);
}

TEST(Model, StructuredTwinReproducesPointCloudModel) {
  ModelConfig c;
  c.width = 3;
  c.layers = 3;
  c.k_max = {2, 2};
  c.latent_grid = {6, 6};
  c.lift_hidden = 4;
  c.proj_hidden = 4;
  c.map = MapKind::kIdentity;
  const GeoFnoModel pm(c, 8);
  const GeoFnoModel twin = structured_twin(pm);
  Rng rng(8);
  const Tensor grid = uniform_grid_points({6, 6});
  const Tensor f = random_real({36, 1}, rng);
  const Tensor a = forward_pointcloud(pm, Geometry::point_cloud(grid), f);
  const Tensor b =
      forward_structured(twin, Geometry::structured(ops::reshape(grid, {6, 6, 2})), ops::reshape(f, {6, 6, 1}));
  EXPECT_LT(max_abs_diff(a, ops::reshape(b, {36, 1})), 1e-12);
}

TEST(Model, StructuredForwardNeedsStructuredMesh) {
  ModelConfig c = small_point_config();
  c.io_mode = IoMode::kStructured;
  c.map = MapKind::kNone;
  const GeoFnoModel m(c, 0);
  EXPECT_THROW(forward_structured(m, Geometry::point_cloud(Tensor::zeros({4, 2})), Tensor::zeros({4, 1})), KindError);
}

TEST(Model, SpatiotemporalOutputShape) {
  ModelConfig c;
  c.io_mode = IoMode::kSpatiotemporal;
  c.width = 3;
  c.layers = 2;
  c.k_max = {2, 2, 1};
  c.lift_hidden = 4;
  c.proj_hidden = 4;
  c.map = MapKind::kNone;
  const GeoFnoModel m(c, 0);
  const Tensor pts = ops::reshape(uniform_grid_points({6, 5}), {6, 5, 2});
  const Tensor out = forward_spatiotemporal(m, Geometry::structured(pts), Tensor::full({6, 5, 1}, 0.5), 4);
  EXPECT_EQ(out.shape(), (Shape{6, 5, 4, 1}));
}

}  // namespace
}  // namespace geofno
