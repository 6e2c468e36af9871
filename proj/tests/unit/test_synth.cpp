#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gsrecon/calib.hpp"
#include "gsrecon/error.hpp"
#include "gsrecon/renderer.hpp"
#include "gsrecon/synth.hpp"
#include "test_support.hpp"

namespace gsr {
namespace {

TEST(SceneMode, Parse) {
  EXPECT_EQ(parse_scene_mode("object"), SceneMode::kObject);
  EXPECT_EQ(parse_scene_mode("scene"), SceneMode::kScene);
  EXPECT_EQ(to_string(SceneMode::kScene), "scene");
  EXPECT_THROW(parse_scene_mode("Object"), DataError);
}

TEST(MakeScene, Deterministic) {
  const SynthScene a = make_scene(42, 5);
  const SynthScene b = make_scene(42, 5);
  ASSERT_EQ(a.primitives.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(a.primitives[k].mu, b.primitives[k].mu);
    EXPECT_EQ(a.primitives[k].color, b.primitives[k].color);
  }
  EXPECT_NE(make_scene(43, 5).primitives[0].mu, a.primitives[0].mu);
}

TEST(MakeScene, BlobsStayInUnitCube) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const SynthScene s = make_scene(seed, 1 + static_cast<int>(seed % 10));
    for (const auto& g : s.primitives) {
      EXPECT_TRUE(is_valid(g));
      const double reach = g.mu.cwiseAbs().maxCoeff() + g.scale.maxCoeff();
      EXPECT_LE(reach, 1.0) << seed;
      EXPECT_GE(g.scale.minCoeff(), kBlobMinScale);
      EXPECT_LE(g.scale.maxCoeff(), kBlobMaxScale);
      EXPECT_GE(g.opacity, 0.7);
    }
  }
}

TEST(MakeScene, EmptyThrows) { EXPECT_THROW(make_scene(1, 0), DataError); }

TEST(Orbit, StructuredAzimuthsAndLookAt) {
  OrbitParams p;
  p.count = 4;
  p.start_azimuth_deg = 30.0;
  p.center = Vec3(0.1, -0.2, 0.3);
  const auto cams = sample_orbit_cameras(p, 0);
  ASSERT_EQ(cams.size(), 4u);
  const double elev = p.elevation_deg * std::numbers::pi / 180.0;
  for (int n = 0; n < 4; ++n) {
    const SE3Pose& c = cams[static_cast<std::size_t>(n)];
    EXPECT_NEAR(std::fmod(orbit_azimuth_deg(c, p.center) - 30.0 - 90.0 * n + 720.0, 360.0), 0.0, 1e-9);
    EXPECT_NEAR((c.translation - p.center).norm(), p.radius, 1e-12);
    EXPECT_NEAR(c.translation.z() - p.center.z(), p.radius * std::sin(elev), 1e-12);
    // Optical axis through the center, image rows pointing downward in the world.
    const Vec3 forward = c.rotation.col(2);
    EXPECT_NEAR(forward.dot((p.center - c.translation).normalized()), 1.0, 1e-12);
    EXPECT_LT(c.rotation.col(1).z(), 0.0);
    EXPECT_NEAR(c.rotation.determinant(), 1.0, 1e-12);
    const auto proj = project(p.center, c, Intrinsics{28, 32, 32});
    ASSERT_TRUE(proj.has_value());
    EXPECT_NEAR((proj->pixel - Vec2(16, 16)).norm(), 0.0, 1e-9);
  }
}

TEST(Orbit, RandomModeIsSeeded) {
  OrbitParams p;
  p.structured = false;
  const auto a = sample_orbit_cameras(p, 5);
  const auto b = sample_orbit_cameras(p, 5);
  const auto c = sample_orbit_cameras(p, 6);
  for (std::size_t n = 0; n < a.size(); ++n) EXPECT_EQ(a[n].matrix(), b[n].matrix());
  EXPECT_NE(a[1].matrix(), c[1].matrix());
}

TEST(MakeSample, DeterministicForSeed) {
  const SynthOptions opt;
  const DatasetSample a = make_sample(7, opt);
  const DatasetSample b = make_sample(7, opt);
  ASSERT_EQ(a.views(), 4u);
  for (std::size_t n = 0; n < a.views(); ++n) {
    EXPECT_EQ(a.images[n], b.images[n]);
    EXPECT_EQ(a.depths[n], b.depths[n]);
    EXPECT_EQ(a.poses[n].matrix(), b.poses[n].matrix());
  }
}

class SampleInvariants : public ::testing::TestWithParam<SceneMode> {};

TEST_P(SampleInvariants, HoldOverSeeds) {
  SynthOptions opt;
  opt.mode = GetParam();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DatasetSample s = make_sample(seed, opt);
    EXPECT_EQ(s.poses[0].matrix(), Mat4::Identity());
    EXPECT_EQ(s.intrinsics.f, 0.875 * 32);
    for (std::size_t n = 0; n < s.views(); ++n) {
      EXPECT_GE(static_cast<double>(count_valid(s.masks[n])), opt.min_mask_fraction * 32 * 32);
      // Stored points are exactly the unprojected stored depths.
      const PointMap lifted = unproject_depth(s.depths[n], s.intrinsics, s.poses[n], s.masks[n]);
      for (std::size_t k = 0; k < lifted.size(); ++k) {
        if (!s.masks[n][k]) continue;
        EXPECT_EQ(lifted[k], s.points[n][k]);
        // Closure: each point projects back onto its own pixel at its own depth.
        const int i = static_cast<int>(k % 32);
        const int j = static_cast<int>(k / 32);
        const auto p = project(s.points[n][k], s.poses[n], s.intrinsics);
        ASSERT_TRUE(p.has_value());
        EXPECT_NEAR((p->pixel - Vec2(i, j)).norm(), 0.0, 1e-9);
        EXPECT_NEAR(p->depth, s.depths[n][k], 1e-9);
      }
      for (double v : s.images[n].data) EXPECT_EQ(v, std::round(v * 255.0) / 255.0);
      for (double d : s.depths[n].values()) EXPECT_EQ(d, static_cast<double>(static_cast<float>(d)));
    }
    if (GetParam() == SceneMode::kObject) {
      EXPECT_NEAR(s.object_center.norm(), 2.0, 1e-9);
    } else {
      EXPECT_NEAR(mean_masked_distance(s.points, s.masks), 1.0, 1e-6);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, SampleInvariants, ::testing::Values(SceneMode::kObject, SceneMode::kScene));

TEST(Dataset, DiskRoundTripIsExact) {
  SynthOptions opt;
  opt.mode = SceneMode::kScene;
  const DatasetSample s = make_sample(11, opt);
  test::TempDir dir("ds");
  write_sample(dir / "scene_0000", s);
  const DatasetSample r = read_sample(dir / "scene_0000");
  EXPECT_EQ(r.mode, s.mode);
  EXPECT_EQ(r.seed, s.seed);
  EXPECT_EQ(r.intrinsics.f, s.intrinsics.f);
  ASSERT_EQ(r.views(), s.views());
  for (std::size_t n = 0; n < s.views(); ++n) {
    EXPECT_EQ(r.images[n], s.images[n]);
    EXPECT_EQ(r.depths[n], s.depths[n]);
    EXPECT_EQ(r.masks[n], s.masks[n]);
    EXPECT_LT((r.poses[n].matrix() - s.poses[n].matrix()).norm(), 1e-15);
  }
  EXPECT_EQ(list_scenes(dir.path()).size(), 1u);
  test::TempDir empty("ds_empty");
  EXPECT_THROW(list_scenes(empty.path()), DataError);
}

// One opaque blob at the origin: the mask is exactly the set of pixels where the projected
// footprint exceeds alpha 0.5, an ellipse, and every masked depth is the blob's own depth.
TEST(RenderDataset, SingleBlobSilhouette) {
  test::Rng rng(21);
  SynthScene scene;
  GaussianPrimitive g;
  g.rotation = test::random_quat(rng);
  g.scale = Vec3(0.3, 0.2, 0.25);
  g.opacity = 1.0;
  g.color = Vec3(0.2, 0.5, 0.8);
  scene.primitives = {g};
  OrbitParams orbit;
  orbit.count = 2;
  const auto cams = sample_orbit_cameras(orbit, 0);
  const Intrinsics k{28.0, 32, 32};
  const DatasetSample s = render_dataset(scene, cams, k, SceneMode::kObject);
  for (std::size_t n = 0; n < 2; ++n) {
    const auto proj = project_gaussian(g, cams[n], k);
    ASSERT_TRUE(proj.has_value());
    const Mat2 inv = proj->cov.inverse();
    std::size_t inside = 0;
    for (int j = 0; j < 32; ++j)
      for (int i = 0; i < 32; ++i) {
        const Vec2 d = Vec2(i, j) - proj->mean;
        const bool in = d.dot(inv * d) < 2.0 * std::log(2.0);
        inside += in;
        EXPECT_EQ(s.masks[n](i, j), in ? 1 : 0) << i << "," << j;
        if (in) EXPECT_NEAR(s.depths[n](i, j), 2.0, 1e-6);
      }
    EXPECT_GT(inside, 5u);
  }
}

TEST(RenderDataset, EmptySceneRejected) {
  SynthScene scene;
  const auto cams = sample_orbit_cameras(OrbitParams{}, 0);
  EXPECT_THROW(render_dataset(scene, cams, Intrinsics{28.0, 32, 32}, SceneMode::kObject), DataError);
}

// Focal estimation and PnP on a sample's own ground truth recover its cameras.
TEST(RenderDataset, OracleClosure) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DatasetSample s = make_sample(seed, SynthOptions{});
    for (std::size_t n = 0; n < s.views(); ++n) {
      const PointMap cam = transform_points(s.points[n], invert(s.poses[n]));
      EXPECT_NEAR(estimate_focal_single(cam, s.masks[n]).focal, s.intrinsics.f, 1e-6 * s.intrinsics.f);
      if (n == 0) continue;
      const PnpResult r = solve_pnp_ransac(s.points[n], pixel_grid(32, 32), s.masks[n], s.intrinsics, RansacParams{});
      EXPECT_LT((r.pose.rotation - s.poses[n].rotation).norm(), 1e-6);
      EXPECT_LT((r.pose.translation - s.poses[n].translation).norm(), 1e-6);
    }
  }
}

TEST(SynthOptions, Validation) {
  SynthOptions opt;
  EXPECT_DOUBLE_EQ(opt.intrinsics().f, 28.0);
  opt.min_blobs = 5;
  opt.max_blobs = 4;
  EXPECT_THROW(opt.validate(), DataError);
  opt = SynthOptions{};
  opt.views = 0;
  EXPECT_THROW(opt.validate(), DataError);
}

}  // namespace
}  // namespace gsr
