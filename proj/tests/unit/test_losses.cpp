#include <cmath>

#include <gtest/gtest.h>

#include "gsrecon/error.hpp"
#include "gsrecon/losses.hpp"
#include "gsrecon/metrics.hpp"
#include "test_support.hpp"

namespace gsr {
namespace {

using test::Rng;

struct Batch {
  std::vector<PointMap> pred, gt;
  std::vector<ValidMask> masks;
  std::vector<Vec3> origins;
};

Batch random_batch(Rng& rng, int views, int w, int h) {
  Batch b;
  for (int n = 0; n < views; ++n) {
    b.pred.push_back(test::random_points(rng, w, h));
    b.gt.push_back(test::random_points(rng, w, h));
    b.masks.push_back(test::random_mask(rng, w, h));
    b.origins.push_back(test::random_vec3(rng, -0.3, 0.3));
  }
  b.masks[0](0, 0) = 1;
  return b;
}

TEST(PositionLoss, Example) {
  std::vector<PointMap> pred{PointMap(2, 1, Vec3::Zero())};
  std::vector<PointMap> gt{PointMap(2, 1, Vec3::Zero())};
  std::vector<ValidMask> masks{ValidMask(2, 1, 1)};
  gt[0](0, 0) = Vec3(3, 4, 0);
  gt[0](1, 0) = Vec3(0, 0, 1);
  const GeometricLoss l = position_loss(pred, gt, masks);
  EXPECT_DOUBLE_EQ(l.value, 3.0);
  EXPECT_NEAR((l.grad[0](0, 0) - Vec3(-0.3, -0.4, 0) ).norm(), 0, 1e-15);
  masks[0](0, 0) = 0;
  EXPECT_DOUBLE_EQ(position_loss(pred, gt, masks).value, 1.0);
  masks[0](1, 0) = 0;
  EXPECT_DOUBLE_EQ(position_loss(pred, gt, masks).value, 0.0);
}

TEST(AlignmentLoss, Example) {
  std::vector<PointMap> pred{PointMap(3, 1, Vec3(1, 0, 0))};
  std::vector<PointMap> gt{PointMap(3, 1)};
  gt[0](0, 0) = Vec3(5, 0, 0);   // parallel: 0
  gt[0](1, 0) = Vec3(0, 2, 0);   // orthogonal: 1
  gt[0](2, 0) = Vec3(-1, 0, 0);  // opposite: 2
  std::vector<ValidMask> masks{ValidMask(3, 1, 1)};
  std::vector<Vec3> origins{Vec3::Zero()};
  EXPECT_NEAR(alignment_loss(pred, origins, gt, masks).value, 1.0, 1e-15);
  // Degenerate rays contribute zero but still count in the mean.
  gt[0](1, 0) = Vec3::Zero();
  EXPECT_NEAR(alignment_loss(pred, origins, gt, masks).value, 2.0 / 3.0, 1e-15);
  EXPECT_THROW(alignment_loss(pred, std::vector<Vec3>{}, gt, masks), DataError);
}

TEST(AlignmentLoss, InvariantToRadialRescale) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    Batch b = random_batch(rng, 3, 4, 4);
    const double before = alignment_loss(b.pred, b.origins, b.gt, b.masks).value;
    for (std::size_t n = 0; n < b.pred.size(); ++n) {
      for (auto& p : b.pred[n].values()) p = b.origins[n] + test::uniform(rng, 0.1, 10.0) * (p - b.origins[n]);
    }
    EXPECT_NEAR(alignment_loss(b.pred, b.origins, b.gt, b.masks).value, before, 1e-12);
  }
}

// Central differences on 100 random configurations for both geometric losses and the scale
// normalization chain rule.
TEST(Gradients, MatchFiniteDifferences) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    Batch b = random_batch(rng, 2, 3, 2);
    const GeometricLoss pos = position_loss(b.pred, b.gt, b.masks);
    const GeometricLoss ali = alignment_loss(b.pred, b.origins, b.gt, b.masks);
    // A fixed random downstream gradient through scale_normalize.
    std::vector<PointMap> up;
    for (int n = 0; n < 2; ++n) up.push_back(test::random_points(rng, 3, 2, -1, 1));
    auto through_norm = [&] {
      const ScaleNormalized s = scale_normalize(b.pred, b.masks);
      double v = 0;
      for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t k = 0; k < s.points[n].size(); ++k) v += up[n][k].dot(s.points[n][k]);
      return v;
    };
    const double dist = scale_normalize(b.pred, b.masks).distance;
    const auto norm_grad = scale_normalize_backward(b.pred, b.masks, dist, up);

    const std::size_t n = rng() % 2;
    const std::size_t k = rng() % 6;
    for (int a = 0; a < 3; ++a) {
      double& x = b.pred[n][k][a];
      const double fd_pos = test::central_difference([&] { return position_loss(b.pred, b.gt, b.masks).value; }, x, 1e-6);
      const double fd_ali =
          test::central_difference([&] { return alignment_loss(b.pred, b.origins, b.gt, b.masks).value; }, x, 1e-6);
      const double fd_norm = test::central_difference(through_norm, x, 1e-6);
      EXPECT_NEAR(pos.grad[n][k][a], fd_pos, 1e-6);
      EXPECT_NEAR(ali.grad[n][k][a], fd_ali, 1e-6);
      EXPECT_NEAR(norm_grad[n][k][a], fd_norm, 1e-6);
    }
  }
}

TEST(ScaleNormalize, UnitMeanDistance) {
  Rng rng(3);
  Batch b = random_batch(rng, 3, 5, 5);
  const ScaleNormalized s = scale_normalize(b.pred, b.masks);
  EXPECT_NEAR(mean_masked_distance(s.points, b.masks), 1.0, 1e-12);
  EXPECT_NEAR(s.distance, mean_masked_distance(b.pred, b.masks), 0.0);
}

TEST(RenderLoss, Examples) {
  const Image a(16, 16, 3, 0.25);
  EXPECT_NEAR(render_loss(a, a), 0.0, 1e-12);
  Rng rng(4);
  const Image x = test::random_image(rng, 16, 16);
  const Image y = test::random_image(rng, 16, 16);
  EXPECT_NEAR(render_loss(x, y), mse(x, y) + 0.2 * (1.0 - ssim(x, y)), 1e-15);
}

TEST(TotalLoss, PositionTermSwitchesOffAfterTmax) {
  LossWeights w;
  w.lambda_align = 2.0;
  w.lambda_pos = 10.0;
  w.t_max = 100;
  const LossComponents c{0.5, 0.25, 0.1};
  EXPECT_DOUBLE_EQ(total_loss(1, c, w), 0.5 + 0.5 + 1.0);
  EXPECT_DOUBLE_EQ(total_loss(100, c, w), 0.5 + 0.5 + 1.0);
  EXPECT_DOUBLE_EQ(total_loss(101, c, w), 1.0);
  EXPECT_TRUE(position_term_active(100, w));
  EXPECT_FALSE(position_term_active(101, w));
  w.lambda_pos = -1;
  EXPECT_THROW(w.validate(), DataError);
}

}  // namespace
}  // namespace gsr
