#include <cmath>

#include <gtest/gtest.h>

#include "gsrecon/error.hpp"
#include "gsrecon/train.hpp"

namespace gsr {
namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.model.layers = 1;
  c.model.width = 16;
  c.model.heads = 2;
  c.model.patch = 4;
  c.model.image_width = 16;
  c.model.image_height = 16;
  c.steps = 20;
  c.batch = 2;
  c.warmup = 5;
  c.lr = 3e-3;
  c.weights.t_max = 15;
  c.render_every = 5;
  c.seed = 3;
  return c;
}

std::vector<DatasetSample> small_dataset(int count) {
  SynthOptions opt;
  opt.width = opt.height = 16;
  std::vector<DatasetSample> data;
  for (int k = 0; k < count; ++k) data.push_back(make_sample(static_cast<std::uint64_t>(100 + k), opt));
  return data;
}

TEST(LearningRate, WarmupThenCosine) {
  TrainConfig c;
  c.lr = 1.0;
  c.warmup = 10;
  c.steps = 110;
  c.final_lr_ratio = 0.1;
  EXPECT_NEAR(learning_rate(c, 1), 0.1, 1e-12);
  EXPECT_NEAR(learning_rate(c, 10), 1.0, 1e-12);
  EXPECT_NEAR(learning_rate(c, 60), 0.1 + 0.9 * 0.5, 1e-12);
  EXPECT_NEAR(learning_rate(c, 110), 0.1, 1e-12);
  for (long s = 11; s < 110; ++s) EXPECT_GE(learning_rate(c, s), learning_rate(c, s + 1));
}

TEST(Train, ZeroStepsLeavesInitialization) {
  TrainConfig c = small_config();
  c.steps = 0;
  const auto data = small_dataset(2);
  const TrainResult r = train(c, data);
  Transformer<float> ref(c.model);
  ref.initialize(c.seed);
  EXPECT_TRUE(r.log.empty());
  for (std::size_t k = 0; k < r.params.all().size(); ++k) EXPECT_EQ(r.params.at(k).value, ref.params().at(k).value);
}

TEST(Train, DeterministicAndLogged) {
  const TrainConfig c = small_config();
  const auto data = small_dataset(3);
  long calls = 0;
  const TrainResult a = train(c, data, [&](const TrainLogEntry& e) {
    ++calls;
    EXPECT_EQ(e.step, calls);
  });
  const TrainResult b = train(c, data);
  EXPECT_EQ(calls, c.steps);
  ASSERT_EQ(a.log.size(), static_cast<std::size_t>(c.steps));
  for (std::size_t k = 0; k < a.params.all().size(); ++k) EXPECT_EQ(a.params.at(k).value, b.params.at(k).value);
  for (const auto& e : a.log) {
    EXPECT_TRUE(std::isfinite(e.total));
    EXPECT_GE(e.l_pos, 0.0);
    EXPECT_GE(e.l_align, 0.0);
    EXPECT_LE(e.l_align, 2.0);
    if (e.step > c.weights.t_max)
      EXPECT_NEAR(e.total, e.l_render + c.weights.lambda_align * e.l_align, 1e-12);
    else
      EXPECT_NEAR(e.total, e.l_render + c.weights.lambda_align * e.l_align + c.weights.lambda_pos * e.l_pos, 1e-12);
  }
}

// Overfitting one two-view sample: the position loss must collapse, not just drift.
TEST(Train, OverfitsSingleSample) {
  TrainConfig c = small_config();
  c.steps = 400;
  c.batch = 1;
  c.lr = 1e-2;
  c.warmup = 10;
  c.weights.t_max = c.steps;
  c.mono_fraction = 0.0;
  c.render_every = 0;
  SynthOptions opt;
  opt.width = opt.height = 16;
  opt.views = 2;
  const std::vector<DatasetSample> data{make_sample(100, opt)};
  const TrainResult r = train(c, data);
  double first = 0.0, last = 0.0;
  for (std::size_t k = 0; k < 20; ++k) {
    first += r.log[k].l_pos;
    last += r.log[r.log.size() - 1 - k].l_pos;
  }
  EXPECT_LT(last, first / 10.0);
}

TEST(Train, RejectsBadConfigAndData) {
  TrainConfig c = small_config();
  c.batch = 0;
  EXPECT_THROW(train(c, small_dataset(1)), DataError);
  EXPECT_THROW(train(small_config(), std::vector<DatasetSample>{}), DataError);
  SynthOptions opt;  // 32x32 does not match the 16x16 model
  const std::vector<DatasetSample> wrong{make_sample(1, opt)};
  EXPECT_THROW(train(small_config(), wrong), DataError);
}

}  // namespace
}  // namespace gsr
