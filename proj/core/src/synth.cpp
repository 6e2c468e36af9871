#include "gsrecon/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gsrecon/calib.hpp"
#include "gsrecon/error.hpp"
#include "gsrecon/io.hpp"
#include "gsrecon/renderer.hpp"

namespace gsr {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

SE3Pose look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitY());  // looking straight up or down
  right.normalize();
  const Vec3 down = forward.cross(right);
  SE3Pose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  pose.translation = eye;
  return pose;
}

Grid<double> round_to_float(const Grid<double>& g) {
  Grid<double> out = g;
  for (double& v : out.values()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

}  // namespace

std::string_view to_string(SceneMode mode) { return mode == SceneMode::kObject ? "object" : "scene"; }

SceneMode parse_scene_mode(std::string_view text) {
  if (text == "object") return SceneMode::kObject;
  if (text == "scene") return SceneMode::kScene;
  throw DataError("unknown mode '" + std::string(text) + "' (expected object or scene)");
}

Vec3 background_for(SceneMode mode) { return mode == SceneMode::kObject ? Vec3::Ones() : Vec3::Zero(); }

SynthScene make_scene(std::uint64_t seed, int blobs) {
  if (blobs < 1) throw DataError("a scene needs at least one blob, got " + std::to_string(blobs));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SynthScene scene;
  scene.seed = seed;
  for (int b = 0; b < blobs; ++b) {
    GaussianPrimitive g;
    for (int a = 0; a < 3; ++a) g.mu[a] = uniform(-kBlobExtent, kBlobExtent);
    g.rotation = Quat{normal(rng), normal(rng), normal(rng), normal(rng)}.normalized();
    for (int a = 0; a < 3; ++a) g.scale[a] = uniform(kBlobMinScale, kBlobMaxScale);
    g.opacity = uniform(0.7, 1.0);
    for (int a = 0; a < 3; ++a) g.color[a] = unit(rng);
    scene.bounding_radius = std::max(scene.bounding_radius, g.mu.norm() + g.scale.maxCoeff());
    scene.primitives.push_back(g);
  }
  return scene;
}

std::vector<SE3Pose> sample_orbit_cameras(const OrbitParams& params, std::uint64_t seed) {
  if (params.count < 1) throw DataError("orbit needs at least one camera");
  if (!(params.radius > 0)) throw DataError("orbit radius must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> azimuth(0.0, 360.0);
  const double el = params.elevation_deg * kDeg;
  std::vector<SE3Pose> poses;
  for (int n = 0; n < params.count; ++n) {
    const double az_deg =
        params.structured ? params.start_azimuth_deg + 360.0 * n / params.count : azimuth(rng);
    const double az = az_deg * kDeg;
    const Vec3 eye = params.center + params.radius * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                                          std::sin(el));
    poses.push_back(look_at(eye, params.center));
  }
  return poses;
}

double orbit_azimuth_deg(const SE3Pose& pose, const Vec3& center) {
  const Vec3 d = pose.translation - center;
  double az = std::atan2(d.y(), d.x()) / kDeg;
  if (az < 0) az += 360.0;
  return az;
}

DatasetSample render_dataset(const SynthScene& scene, std::span<const SE3Pose> cameras, const Intrinsics& k,
                             SceneMode mode) {
  k.validate();
  if (cameras.empty()) throw DataError("render_dataset needs at least one camera");

  DatasetSample s;
  s.mode = mode;
  s.intrinsics = k;
  s.seed = scene.seed;
  const Vec3 bg = background_for(mode);
  std::vector<DepthMap> world_depths;
  for (std::size_t n = 0; n < cameras.size(); ++n) {
    const RenderOutput r = render(scene.primitives, cameras[n], k, bg);
    ValidMask mask(k.width, k.height, 0);
    for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = (r.alpha[p] > 0.5 && r.depth[p] > 0) ? 1 : 0;
    if (count_valid(mask) == 0)
      throw DataError("view " + std::to_string(n + 1) + " of scene " + std::to_string(scene.seed) +
                      " has an empty mask");
    s.images.push_back(quantize_8bit(r.color));
    world_depths.push_back(r.depth);
    s.masks.push_back(std::move(mask));
  }

  if (mode == SceneMode::kObject) {
    const ObjectNormalization norm = normalize_cameras_object(cameras, scene.object_center);
    s.poses = norm.poses;
    s.scale = norm.scale;
    s.object_center = norm.center;
  } else {
    std::vector<PointMap> world_points;
    for (std::size_t n = 0; n < cameras.size(); ++n)
      world_points.push_back(unproject_depth(round_to_float(world_depths[n]), k, cameras[n], s.masks[n]));
    const SceneNormalization norm = normalize_cameras_scene(cameras, world_points, s.masks);
    s.poses = norm.poses;
    s.scale = norm.scale;
    s.object_center = s.scale * invert(cameras[0]).apply(scene.object_center);
  }

  for (std::size_t n = 0; n < cameras.size(); ++n) {
    DepthMap d = world_depths[n];
    for (double& v : d.values()) v *= s.scale;
    d = round_to_float(d);
    s.points.push_back(unproject_depth(d, k, s.poses[n], s.masks[n]));
    s.depths.push_back(std::move(d));
  }
  return s;
}

Intrinsics SynthOptions::intrinsics() const {
  return Intrinsics{focal > 0 ? focal : 0.875 * width, width, height};
}

void SynthOptions::validate() const {
  if (views < 1) throw DataError("views must be at least 1");
  if (width <= 0 || height <= 0) throw DataError("resolution must be positive");
  if (min_blobs < 1 || max_blobs < min_blobs) throw DataError("invalid blob count range");
  if (!(radius > 0)) throw DataError("orbit radius must be positive");
  if (!(min_mask_fraction >= 0.0 && min_mask_fraction < 1.0)) throw DataError("min_mask_fraction must lie in [0, 1)");
}

DatasetSample make_sample(std::uint64_t seed, const SynthOptions& options) {
  options.validate();
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 16; ++attempt) {
    const std::uint64_t scene_seed = rng();
    const std::uint64_t camera_seed = rng();
    const int blobs = std::uniform_int_distribution<int>(options.min_blobs, options.max_blobs)(rng);
    OrbitParams orbit;
    orbit.count = options.views;
    orbit.elevation_deg = options.elevation_deg;
    orbit.radius = options.radius;
    orbit.structured = options.structured;
    orbit.start_azimuth_deg = std::uniform_real_distribution<double>(0.0, 360.0)(rng);
    const SynthScene scene = make_scene(scene_seed, blobs);
    try {
      DatasetSample s = render_dataset(scene, sample_orbit_cameras(orbit, camera_seed), options.intrinsics(),
                                       options.mode);
      const double min_pixels = options.min_mask_fraction * options.width * options.height;
      bool usable = true;
      for (const auto& m : s.masks) usable = usable && static_cast<double>(count_valid(m)) >= min_pixels;
      if (!usable) continue;
      s.seed = seed;
      return s;
    } catch (const DataError&) {
      // an empty view; draw another scene
    }
  }
  throw DataError("could not generate a usable sample from seed " + std::to_string(seed));
}

}  // namespace gsr
