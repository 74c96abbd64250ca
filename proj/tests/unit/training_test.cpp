// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "geofno/checkpoint.hpp"
#include "geofno/error.hpp"
#include "geofno/optim.hpp"
#include "geofno/synthetic.hpp"
#include "geofno/training.hpp"
#include "helpers.hpp"

namespace geofno {
namespace {

using testing::fd_grad;
using testing::random_real;
using testing::tape_grad;

TEST(RelativeL2, HandValues) {
  const Tensor u({2, 1}, std::vector<double>{0.0, 1.0});
  EXPECT_EQ(relative_l2(u, u).item(), 0.0);
  EXPECT_DOUBLE_EQ(relative_l2(Tensor::zeros({2, 1}), u).item(), 1.0);
  EXPECT_DOUBLE_EQ(relative_l2(Tensor({2, 1}, std::vector<double>{1.0, 0.0}), u).item(), std::sqrt(2.0));
  EXPECT_THROW(relative_l2(u, Tensor::zeros({2, 1})), DegenerateTargetError);
  EXPECT_THROW(relative_l2(u, Tensor::zeros({3, 1})), DimensionError);
}

TEST(RelativeL2, GradientMatchesFiniteDifferences) {
  Rng rng(1);
  const Tensor truth = random_real({6, 2}, rng);
  const Tensor pred = random_real({6, 2}, rng);
  auto f = [&](const Tensor& p) { return relative_l2(p, truth); };
  const auto a = tape_grad(f, pred), n = fd_grad(f, pred);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], n[i], 1e-8);
}

TEST(MaskedLoss, FullMaskEqualsUnmasked) {
  Rng rng(2);
  const Tensor truth = random_real({5, 1}, rng), pred = random_real({5, 1}, rng);
  EXPECT_EQ(masked_loss(pred, truth, Mask(5, 1)).item(), relative_l2(pred, truth).item());
  EXPECT_THROW(masked_loss(pred, truth, Mask(5, 0)), DegenerateTargetError);
}

TEST(MaskedLoss, GarbageOutsideMaskIsIgnored) {
  Rng rng(3);
  const Tensor truth = random_real({6, 2}, rng);
  Tensor pred = random_real({6, 2}, rng);
  const Mask mask{1, 1, 0, 1, 0, 1};
  const double before = masked_loss(pred, truth, mask).item();
  std::vector<double> g(pred.real().begin(), pred.real().end());
  g[4] = 1e6;
  g[9] = -3e5;
  EXPECT_EQ(masked_loss(Tensor({6, 2}, std::move(g)), truth, mask).item(), before);
}

TEST(MaskedLoss, GradientOutsideMaskIsExactlyZero) {
  Rng rng(4);
  const Tensor truth = random_real({6, 2}, rng);
  const Tensor pred = random_real({6, 2}, rng);
  const Mask mask{1, 0, 1, 1, 0, 1};
  const auto g = tape_grad([&](const Tensor& p) { return masked_loss(p, truth, mask); }, pred);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      if (mask[i]) {
        EXPECT_NE(g[i * 2 + c], 0.0);
      } else {
        EXPECT_EQ(g[i * 2 + c], 0.0);
      }
    }
  }
}

TEST(BatchRelativeL2, MeanOfPerSampleErrors) {
  Rng rng(5);
  const Tensor truth = random_real({3, 4, 1}, rng), pred = random_real({3, 4, 1}, rng);
  double mean = 0.0;
  for (std::size_t b = 0; b < 3; ++b) mean += relative_l2(ops::select(pred, b), ops::select(truth, b)).item() / 3.0;
  EXPECT_NEAR(batch_relative_l2(pred, truth).item(), mean, 1e-15);
}

TEST(LearningRate, HalvesAtPeriodBoundaries) {
  TrainConfig c;
  const std::vector<std::size_t> epochs{0, 99, 100, 199, 200, 499};
  const std::vector<double> factor{1, 1, 0.5, 0.5, 0.25, 0.0625};
  for (std::size_t i = 0; i < epochs.size(); ++i) EXPECT_EQ(learning_rate(c, epochs[i]), factor[i] * 1e-3);
  EXPECT_EQ(learning_rate(c, 250), 2.5e-4);
}

TEST(TrainConfig, DefaultsAndValidation) {
  const TrainConfig c;
  EXPECT_EQ(c.epochs, 500u);
  EXPECT_EQ(c.initial_lr, 1e-3);
  EXPECT_EQ(c.lr_halving_period, 100u);
  EXPECT_EQ(c.batch_size, 20u);
  TrainConfig bad;
  bad.epochs = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  TrainConfig other;
  other.seed = 9;
  EXPECT_NE(other.hash(), c.hash());
}

TEST(Adam, FirstStepMatchesBiasCorrectedFormula) {
  const std::vector<Tensor> p{Tensor({1}, std::vector<double>{1.0})};
  const std::vector<Tensor> g{Tensor({1}, std::vector<double>{1.0})};
  AdamState s = AdamState::for_params(p);
  const auto out = adam_step(p, g, s, {});
  const double m = 0.1, v = 0.001;
  const double mhat = m / (1 - 0.9), vhat = v / (1 - 0.999);
  EXPECT_DOUBLE_EQ(out[0].real()[0], 1.0 - 1e-3 * mhat / (std::sqrt(vhat) + 1e-8));
  EXPECT_EQ(s.step, 1);
  EXPECT_DOUBLE_EQ(s.m[0][0], m);
  EXPECT_DOUBLE_EQ(s.v[0][0], v);
}

TEST(Adam, ZeroGradientKeepsParamsAndDecaysMoments) {
  const std::vector<Tensor> p{Tensor({2}, std::vector<double>{0.3, -0.7})};
  AdamState s = AdamState::for_params(p);
  s.m[0] = {0.5, -0.5};
  s.v[0] = {0.2, 0.2};
  s.step = 3;
  const auto out = adam_step(p, std::vector<Tensor>{Tensor::zeros({2})}, s, {});
  EXPECT_NE(out[0].real()[0], 0.3);
  EXPECT_DOUBLE_EQ(s.m[0][0], 0.45);
  EXPECT_DOUBLE_EQ(s.v[0][0], 0.2 * 0.999);
  AdamState z = AdamState::for_params(p);
  EXPECT_TRUE(adam_step(p, std::vector<Tensor>{Tensor::zeros({2})}, z, {})[0].bitwise_equal(p[0]));
}

TEST(Adam, ReplayIsBitIdentical) {
  Rng rng(6);
  const std::vector<Tensor> p{random_real({3, 2}, rng)};
  const std::vector<Tensor> g{random_real({3, 2}, rng)};
  AdamState a = AdamState::for_params(p), b = AdamState::for_params(p);
  auto pa = adam_step(adam_step(p, g, a, {}), g, a, {});
  auto pb = adam_step(adam_step(p, g, b, {}), g, b, {});
  EXPECT_TRUE(pa[0].bitwise_equal(pb[0]));
  EXPECT_EQ(a, b);
}

class TinyTraining : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SyntheticConfig sc;
    sc.n_theta = 16;
    sc.n_radial = 6;
    sc.train_count = 4;
    sc.test_count = 2;
    sc.seed = 3;
    split_ = new SyntheticSplit(gen_synthetic(sc));
  }
  static void TearDownTestSuite() { delete split_; }

  static ModelConfig model_config() {
    ModelConfig c;
    c.width = 4;
    c.layers = 3;
    c.k_max = {2, 2};
    c.latent_grid = {6, 6};
    c.lift_hidden = 6;
    c.proj_hidden = 6;
    c.deform.frequencies = 2;
    c.deform.hidden = {6};
    return c;
  }
  static TrainConfig train_config(std::size_t epochs) {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = 3;
    t.initial_lr = 5e-3;
    t.lr_halving_period = 2;
    t.seed = 17;
    return t;
  }
  static SyntheticSplit* split_;
};
SyntheticSplit* TinyTraining::split_ = nullptr;

TEST_F(TinyTraining, ReportShapeAndSchedule) {
  const auto r = train(GeoFnoModel(model_config(), 1), split_->train, split_->test, train_config(5));
  ASSERT_EQ(r.report().epochs.size(), 5u);
  for (std::size_t e = 0; e < 5; ++e) {
    EXPECT_EQ(r.report().epochs[e].epoch, e);
    EXPECT_EQ(r.report().epochs[e].lr, learning_rate(train_config(5), e));
    if (e > 0) {
      EXPECT_GE(r.report().epochs[e].wall_seconds, r.report().epochs[e - 1].wall_seconds);
    }
  }
  EXPECT_EQ(r.report().config_hash, train_config(5).hash());
  const auto ev = evaluate(r.model, split_->test);
  EXPECT_EQ(ev.mean, r.report().final_test());
}

TEST_F(TinyTraining, SeededRunsAreBitIdentical) {
  const auto a = train(GeoFnoModel(model_config(), 1), split_->train, split_->test, train_config(3));
  const auto b = train(GeoFnoModel(model_config(), 1), split_->train, split_->test, train_config(3));
  EXPECT_TRUE(a.report().same_metrics(b.report()));
  EXPECT_EQ(a.report().to_text(false), b.report().to_text(false));
  for (std::size_t i = 0; i < a.model.params().size(); ++i) {
    EXPECT_TRUE(a.model.params()[i].bitwise_equal(b.model.params()[i]));
  }
}

TEST_F(TinyTraining, ResumeEqualsUninterruptedRun) {
  const GeoFnoModel init(model_config(), 2);
  const auto full = train(init, split_->train, split_->test, train_config(4));
  TrainOptions stop;
  stop.stop_after = 2;
  const auto half = train(init, split_->train, split_->test, train_config(4), std::nullopt, stop);
  ASSERT_EQ(half.report().epochs.size(), 2u);
  const Checkpoint saved = decode_checkpoint(
      encode_checkpoint({half.model.config(), half.model.params(), train_config(4), half.state, std::nullopt}));
  const auto resumed = train(saved.model(), split_->train, split_->test, train_config(4), saved.state);
  EXPECT_TRUE(resumed.report().same_metrics(full.report()));
  for (std::size_t i = 0; i < full.model.params().size(); ++i) {
    EXPECT_TRUE(resumed.model.params()[i].bitwise_equal(full.model.params()[i]));
  }
}

TEST_F(TinyTraining, EvaluateIsPureAndAveragesSamples) {
  const GeoFnoModel m(model_config(), 3);
  const auto a = evaluate(m, split_->test);
  const auto b = evaluate(m, split_->test);
  EXPECT_EQ(a.per_sample, b.per_sample);
  ASSERT_EQ(a.per_sample.size(), 2u);
  EXPECT_DOUBLE_EQ(a.mean, 0.5 * (a.per_sample[0] + a.per_sample[1]));
  DatasetBundle one = split_->test;
  one.records.resize(1);
  EXPECT_EQ(evaluate(m, one).mean, a.per_sample[0]);
}

TEST_F(TinyTraining, ExplodingLossRaisesDivergence) {
  TrainConfig t = train_config(20);
  t.initial_lr = 50.0;
  t.lr_halving_period = 100;
  t.divergence_factor = 1.5;
  EXPECT_THROW(train(GeoFnoModel(model_config(), 4), split_->train, split_->test, t), DivergenceError);
}

TEST_F(TinyTraining, RejectsEmptyData) {
  DatasetBundle empty = split_->train;
  empty.records.clear();
  EXPECT_THROW(train(GeoFnoModel(model_config(), 5), empty, split_->test, train_config(1)), Error);
}

}  // namespace
}  // namespace geofno
