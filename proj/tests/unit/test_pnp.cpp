#include <cmath>

#include <gtest/gtest.h>

#include "gsrecon/calib.hpp"
#include "gsrecon/error.hpp"
#include "test_support.hpp"

namespace gsr {
namespace {

using test::Rng;

const Intrinsics kCam{28.0, 32, 32};

// Reference-frame points seen by `pose` at every pixel, with random depths.
PointMap points_for(Rng& rng, const SE3Pose& pose) {
  DepthMap depth(kCam.width, kCam.height);
  for (auto& d : depth.values()) d = test::uniform(rng, 1.5, 3.0);
  return unproject_depth(depth, kCam, pose, ValidMask(kCam.width, kCam.height, 1));
}

SE3Pose random_camera(Rng& rng) {
  SE3Pose p;
  p.rotation = rodrigues(test::random_vec3(rng, -1.0, 1.0));
  p.translation = test::random_vec3(rng, -1.0, 1.0);
  return p;
}

TEST(Pnp, RecoversNoiselessPose) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const SE3Pose truth = random_camera(rng);
    const PointMap pts = points_for(rng, truth);
    RansacParams params;
    params.seed = static_cast<std::uint64_t>(t);
    const PnpResult r = solve_pnp_ransac(pts, pixel_grid(32, 32), ValidMask(32, 32, 1), kCam, params);
    EXPECT_LT((r.pose.rotation - truth.rotation).norm(), 1e-9);
    EXPECT_LT((r.pose.translation - truth.translation).norm(), 1e-8);
    EXPECT_EQ(r.inlier_count, 32u * 32u);
  }
}

TEST(Pnp, IdentityView) {
  Rng rng(2);
  const PointMap pts = points_for(rng, SE3Pose::identity());
  const PnpResult r = solve_pnp_ransac(pts, pixel_grid(32, 32), ValidMask(32, 32, 1), kCam, {});
  EXPECT_LT((r.pose.matrix() - Mat4::Identity()).norm(), 1e-8);
}

TEST(Pnp, ToleratesTwentyPercentOutliers) {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const SE3Pose truth = random_camera(rng);
    PointMap pts = points_for(rng, truth);
    std::size_t outliers = 0;
    const PixelMap px = pixel_grid(32, 32);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (test::uniform(rng, 0, 1) >= 0.2) continue;
      // Gross outliers only: anything reprojecting within a few pixels is indistinguishable from noise.
      const Vec3 moved = pts[k] + test::random_vec3(rng, -1.0, 1.0);
      const auto proj = project(moved, truth, kCam);
      if (proj && (proj->pixel - px[k]).norm() < 3.0) continue;
      pts[k] = moved;
      ++outliers;
    }
    RansacParams params;
    params.seed = 11;
    params.threshold_px = 0.5;
    const PnpResult r = solve_pnp_ransac(pts, pixel_grid(32, 32), ValidMask(32, 32, 1), kCam, params);
    EXPECT_LT((r.pose.rotation - truth.rotation).norm(), 1e-8);
    EXPECT_LT((r.pose.translation - truth.translation).norm(), 1e-8);
    EXPECT_GE(r.inlier_count, 32u * 32u - outliers);
  }
}

TEST(Pnp, DeterministicForSeed) {
  Rng rng(4);
  const SE3Pose truth = random_camera(rng);
  PointMap pts = points_for(rng, truth);
  for (auto& p : pts.values()) p += test::random_vec3(rng, -0.02, 0.02);
  RansacParams params;
  params.seed = 99;
  params.threshold_px = 1.0;
  const auto a = solve_pnp_ransac(pts, pixel_grid(32, 32), ValidMask(32, 32, 1), kCam, params);
  const auto b = solve_pnp_ransac(pts, pixel_grid(32, 32), ValidMask(32, 32, 1), kCam, params);
  EXPECT_EQ(a.pose.matrix(), b.pose.matrix());
  EXPECT_EQ(a.inliers, b.inliers);
}

TEST(Pnp, FailsWithTooFewPoints) {
  Rng rng(5);
  const PointMap pts = points_for(rng, SE3Pose::identity());
  ValidMask mask(32, 32, 0);
  for (int i = 0; i < 11; ++i) mask[static_cast<std::size_t>(i * 37)] = 1;
  EXPECT_THROW(solve_pnp_ransac(pts, pixel_grid(32, 32), mask, kCam, {}), SolverError);
  RansacParams bad;
  bad.min_inliers = 3;
  EXPECT_THROW(solve_pnp_ransac(pts, pixel_grid(32, 32), ValidMask(32, 32, 1), kCam, bad), DataError);
}

TEST(Pnp, DefaultThresholdIsHalfPercentOfDiagonal) {
  RansacParams p;
  EXPECT_NEAR(p.threshold_for(kCam), 0.005 * std::sqrt(2.0 * 32 * 32), 1e-12);
  p.threshold_px = 3.0;
  EXPECT_DOUBLE_EQ(p.threshold_for(kCam), 3.0);
}

TEST(Pnp, RefinementReducesCost) {
  Rng rng(6);
  const SE3Pose truth = random_camera(rng);
  const PointMap pts = points_for(rng, truth);
  std::vector<Vec3> xs(pts.values().begin(), pts.values().end());
  const PixelMap px = pixel_grid(32, 32);
  std::vector<Vec2> ys(px.values().begin(), px.values().end());
  SE3Pose start = truth;
  start.rotation = rodrigues(Vec3(0.02, -0.01, 0.015)) * start.rotation;
  start.translation += Vec3(0.01, 0.02, -0.01);
  const RefineResult r = refine_pose(start, xs, ys, kCam);
  EXPECT_LT(r.final_cost, r.initial_cost);
  EXPECT_LT((r.pose.rotation - truth.rotation).norm(), 1e-9);
}

}  // namespace
}  // namespace gsr
