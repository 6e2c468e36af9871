#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gsrecon/geometry.hpp"

namespace gsr {

// ---------------------------------------------------------------------------------------------
// Focal estimation
// ---------------------------------------------------------------------------------------------

struct FocalOptions {
  int max_iterations = 10;
  double relative_tolerance = 1e-6;  // stop when |df| < tol * f
  double min_residual = 1e-8;        // floor on residuals in the reweighting
  std::size_t min_points = 8;
};

struct FocalEstimate {
  double focal = 0.0;
  int iterations = 0;
  /// Robust objective sum ||p - f u|| at the initial estimate and after every iteration.
  std::vector<double> objective;
};

/// Focal minimizing the summed pixel-projection distance of camera-frame points, by Weiszfeld
/// reweighting from the least-squares start. `points` must be in the view's own camera frame.
FocalEstimate estimate_focal_single(const PointMap& points, const ValidMask& mask,
                                    const FocalOptions& options = {});

/// Arithmetic mean of per-view focals.
double estimate_focal_multi(std::span<const double> focals);

// ---------------------------------------------------------------------------------------------
// Masks
// ---------------------------------------------------------------------------------------------

ValidMask build_mask_object(const Grid<double>& alpha);
ValidMask build_mask_scene(const Grid<double>& opacity, double tau = 0.5);

// ---------------------------------------------------------------------------------------------
// PnP-RANSAC
// ---------------------------------------------------------------------------------------------

struct RansacParams {
  int iterations = 256;
  /// Inlier threshold in pixels; non-positive selects 0.5% of the image diagonal.
  double threshold_px = 0.0;
  int min_inliers = 12;
  std::uint64_t seed = 0;

  double threshold_for(const Intrinsics& k) const;
  void validate() const;
};

struct PnpResult {
  SE3Pose pose;  // camera-to-reference
  ValidMask inliers;
  std::size_t inlier_count = 0;
  int refinement_steps = 0;
};

/// Camera-to-reference pose from reference-frame points X and their pixels Y. Hypotheses are
/// 6-point DLT solutions; the best consensus set is refined by Gauss-Newton.
PnpResult solve_pnp_ransac(const PointMap& points, const PixelMap& pixels, const ValidMask& mask,
                           const Intrinsics& k, const RansacParams& params);

/// 6+-point DLT on the given correspondences; throws SolverError if rank deficient.
SE3Pose solve_pnp_dlt(std::span<const Vec3> points, std::span<const Vec2> pixels, const Intrinsics& k);

struct RefineResult {
  SE3Pose pose;
  int steps = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
};

/// Gauss-Newton on squared reprojection residuals: at most 20 steps, damping 1e-6, stop when
/// the step norm falls below 1e-10 or the cost stops decreasing.
RefineResult refine_pose(const SE3Pose& initial, std::span<const Vec3> points, std::span<const Vec2> pixels,
                         const Intrinsics& k);

// ---------------------------------------------------------------------------------------------
// Camera normalization
// ---------------------------------------------------------------------------------------------

struct ObjectNormalization {
  std::vector<SE3Pose> poses;
  double scale = 1.0;
  Vec3 center = Vec3::Zero();  // object center in the new reference frame
};

/// Scales the rig so camera 1 sits at distance 2 from the object center, then re-expresses
/// every pose relative to camera 1.
ObjectNormalization normalize_cameras_object(std::span<const SE3Pose> poses, const Vec3& object_center);

struct SceneNormalization {
  std::vector<SE3Pose> poses;
  std::vector<PointMap> points;  // in the new reference frame, scaled
  double scale = 1.0;
};

/// Re-expresses poses and world-frame point maps relative to camera 1, then scales both by the
/// inverse masked mean point distance. Callers scale ground-truth depths by the same factor.
SceneNormalization normalize_cameras_scene(std::span<const SE3Pose> poses, std::span<const PointMap> points,
                                           std::span<const ValidMask> masks);

// ---------------------------------------------------------------------------------------------
// Pose metrics
// ---------------------------------------------------------------------------------------------

struct PoseErrors {
  double rre = 0.0;   // degrees, mean over pairs
  double rra15 = 0.0;
  double rra30 = 0.0;
  double te = 0.0;    // mean aligned camera-center distance
  std::vector<double> pair_rre;  // ordered (0,1), (0,2), ..., (N-2,N-1)
};

/// Angle between two relative rotations, in degrees.
double relative_rotation_error(const SE3Pose& pred_a, const SE3Pose& pred_b, const SE3Pose& gt_a,
                               const SE3Pose& gt_b);

struct Similarity {
  Mat3 rotation = Mat3::Identity();
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();
  Vec3 apply(const Vec3& x) const { return scale * (rotation * x) + translation; }
};

/// Global rotation from the chordal mean of per-camera rotation offsets, then least-squares scale
/// and translation on camera centers.
Similarity align_cameras(std::span<const SE3Pose> pred, std::span<const SE3Pose> gt);

PoseErrors pose_errors(std::span<const SE3Pose> pred, std::span<const SE3Pose> gt);

}  // namespace gsr
