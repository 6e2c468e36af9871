#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsrecon/geometry.hpp"
#include "gsrecon/gsmap.hpp"
#include "gsrecon/image.hpp"

namespace gsr {

enum class SceneMode { kObject, kScene };

std::string_view to_string(SceneMode mode);
/// Accepts "object" or "scene"; throws DataError otherwise.
SceneMode parse_scene_mode(std::string_view text);

/// Blob centers are drawn from [-kBlobExtent, kBlobExtent]^3 so that every blob, including one
/// standard deviation along its largest axis, stays inside the unit cube.
inline constexpr double kBlobExtent = 0.7;
inline constexpr double kBlobMinScale = 0.05;
inline constexpr double kBlobMaxScale = 0.3;

struct SynthScene {
  std::vector<GaussianPrimitive> primitives;
  Vec3 object_center = Vec3::Zero();
  double bounding_radius = 0.0;
  std::uint64_t seed = 0;
};

/// `blobs` colored anisotropic Gaussians around the origin. Throws DataError if blobs < 1.
SynthScene make_scene(std::uint64_t seed, int blobs);

struct OrbitParams {
  int count = 4;
  double elevation_deg = 20.0;
  double radius = 4.0;
  bool structured = true;
  /// Azimuth of the first camera in structured mode.
  double start_azimuth_deg = 0.0;
  Vec3 center = Vec3::Zero();
};

/// Cameras on a z-up orbit, each looking at `center`. Structured mode spaces azimuths evenly from
/// the start azimuth; random mode draws them uniformly from `seed`.
std::vector<SE3Pose> sample_orbit_cameras(const OrbitParams& params, std::uint64_t seed);

/// Azimuth in degrees of an orbit camera around `center`, in [0, 360).
double orbit_azimuth_deg(const SE3Pose& pose, const Vec3& center);

struct DatasetSample {
  SceneMode mode = SceneMode::kObject;
  Intrinsics intrinsics;
  std::vector<Image> images;
  std::vector<DepthMap> depths;
  std::vector<ValidMask> masks;
  std::vector<PointMap> points;  // reference frame of view 1
  std::vector<SE3Pose> poses;    // normalized, view 1 is the identity
  double scale = 1.0;            // world-to-normalized scale factor
  Vec3 object_center = Vec3::Zero();  // in the normalized frame
  std::uint64_t seed = 0;

  std::size_t views() const { return images.size(); }
};

Vec3 background_for(SceneMode mode);

/// Renders every camera, thresholds alpha into masks, normalizes the rig and lifts the stored
/// depths into point maps. Images are 8-bit quantized and depths float32-rounded, so the sample
/// is identical after a trip through disk. Throws DataError if any view has an empty mask.
DatasetSample render_dataset(const SynthScene& scene, std::span<const SE3Pose> cameras, const Intrinsics& k,
                             SceneMode mode);

struct SynthOptions {
  int views = 4;
  int width = 32;
  int height = 32;
  double focal = 0.0;  // non-positive selects 0.875 * width
  SceneMode mode = SceneMode::kObject;
  int min_blobs = 3;
  int max_blobs = 10;
  double elevation_deg = 20.0;
  double radius = 4.0;
  bool structured = true;
  /// Samples with a view whose mask covers less than this fraction of the image are redrawn;
  /// PnP needs room for inliers. 0.025 is 26 pixels at 32 x 32.
  double min_mask_fraction = 0.025;

  Intrinsics intrinsics() const;
  void validate() const;
};

/// One complete sample (scene, orbit with random start azimuth, render) from a single seed.
/// Retries with derived seeds when a view's mask is smaller than min_mask_fraction.
DatasetSample make_sample(std::uint64_t seed, const SynthOptions& options);

/// `scene_<id>/view_<k>.png`, `view_<k>_depth.pfm`, `view_<k>_mask.png`, `cameras.json`,
/// `meta.json`. Views are numbered from 1.
void write_sample(const std::filesystem::path& dir, const DatasetSample& sample);
DatasetSample read_sample(const std::filesystem::path& dir);

/// Sorted `scene_*` subdirectories of a dataset root. Throws DataError if there are none.
std::vector<std::filesystem::path> list_scenes(const std::filesystem::path& root);

}  // namespace gsr
