#include "gsrecon/calib.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "gsrecon/error.hpp"
#include "gsrecon/gsmap.hpp"

namespace gsr {

namespace {

struct FocalTerm {
  Vec2 pixel;  // relative to the principal point
  Vec2 ray;    // (X0, X1) / X2
};

double focal_objective(std::span<const FocalTerm> terms, double f) {
  double total = 0.0;
  for (const auto& t : terms) total += (t.pixel - f * t.ray).norm();
  return total;
}

}  // namespace

FocalEstimate estimate_focal_single(const PointMap& points, const ValidMask& mask, const FocalOptions& options) {
  if (!points.same_shape(mask)) throw DataError("focal estimation: point map and mask shapes differ");
  const double cx = points.width() / 2.0;
  const double cy = points.height() / 2.0;

  std::vector<FocalTerm> terms;
  std::size_t masked = 0;
  for (int j = 0; j < points.height(); ++j) {
    for (int i = 0; i < points.width(); ++i) {
      if (!mask(i, j)) continue;
      ++masked;
      const Vec3& x = points(i, j);
      if (!x.allFinite() || !(x.z() > 0)) continue;
      terms.push_back({Vec2(i - cx, j - cy), Vec2(x.x() / x.z(), x.y() / x.z())});
    }
  }
  if (masked < options.min_points)
    throw SolverError("focal estimation needs at least " + std::to_string(options.min_points) +
                      " valid pixels, got " + std::to_string(masked));
  if (terms.size() < options.min_points)
    throw SolverError("focal estimation: only " + std::to_string(terms.size()) +
                      " valid pixels have positive depth");

  double num = 0.0;
  double den = 0.0;
  for (const auto& t : terms) {
    num += t.pixel.dot(t.ray);
    den += t.ray.squaredNorm();
  }
  if (!(den > 0)) throw SolverError("focal estimation: all rays are on the optical axis");

  FocalEstimate est;
  est.focal = num / den;
  est.objective.push_back(focal_objective(terms, est.focal));
  for (int it = 0; it < options.max_iterations; ++it) {
    num = 0.0;
    den = 0.0;
    for (const auto& t : terms) {
      const double w = 1.0 / std::max((t.pixel - est.focal * t.ray).norm(), options.min_residual);
      num += w * t.pixel.dot(t.ray);
      den += w * t.ray.squaredNorm();
    }
    const double next = num / den;
    const double step = std::abs(next - est.focal);
    est.focal = next;
    est.iterations = it + 1;
    est.objective.push_back(focal_objective(terms, est.focal));
    if (step < options.relative_tolerance * std::abs(est.focal)) break;
  }
  if (!(est.focal > 0) || !std::isfinite(est.focal))
    throw SolverError("focal estimation produced a non-positive focal " + std::to_string(est.focal));
  return est;
}

double estimate_focal_multi(std::span<const double> focals) {
  if (focals.empty()) throw DataError("focal averaging needs at least one view");
  double total = 0.0;
  for (double f : focals) {
    if (!(f > 0)) throw DataError("focal averaging: non-positive focal " + std::to_string(f));
    total += f;
  }
  return total / static_cast<double>(focals.size());
}

ValidMask build_mask_object(const Grid<double>& alpha) {
  ValidMask mask(alpha.width(), alpha.height());
  for (std::size_t k = 0; k < alpha.size(); ++k) mask[k] = alpha[k] > 0.5 ? 1 : 0;
  return mask;
}

ValidMask build_mask_scene(const Grid<double>& opacity, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DataError("visibility threshold must lie in (0, 1)");
  ValidMask mask(opacity.width(), opacity.height());
  for (std::size_t k = 0; k < opacity.size(); ++k) mask[k] = opacity[k] > tau ? 1 : 0;
  return mask;
}

ObjectNormalization normalize_cameras_object(std::span<const SE3Pose> poses, const Vec3& object_center) {
  if (poses.empty()) throw DataError("camera normalization needs at least one pose");
  const double dist = (poses[0].translation - object_center).norm();
  if (!(dist > 0)) throw DataError("first camera coincides with the object center");

  ObjectNormalization out;
  out.scale = 2.0 / dist;
  std::vector<SE3Pose> scaled(poses.begin(), poses.end());
  for (auto& p : scaled) p.translation = object_center + out.scale * (p.translation - object_center);
  const SE3Pose to_ref = invert(scaled[0]);
  out.poses.reserve(scaled.size());
  for (const auto& p : scaled) out.poses.push_back(compose(to_ref, p));
  out.poses[0] = SE3Pose::identity();
  out.center = to_ref.apply(object_center);
  return out;
}

SceneNormalization normalize_cameras_scene(std::span<const SE3Pose> poses, std::span<const PointMap> points,
                                           std::span<const ValidMask> masks) {
  if (poses.empty()) throw DataError("camera normalization needs at least one pose");
  if (points.size() != poses.size() || masks.size() != poses.size())
    throw DataError("camera normalization: pose, point map and mask counts differ");

  const SE3Pose to_ref = invert(poses[0]);
  SceneNormalization out;
  out.points.reserve(points.size());
  for (const auto& p : points) out.points.push_back(transform_points(p, to_ref));
  const double d = mean_masked_distance(out.points, masks);
  out.scale = 1.0 / d;
  for (auto& p : out.points)
    for (auto& x : p.values()) x *= out.scale;
  out.poses.reserve(poses.size());
  for (const auto& p : poses) {
    SE3Pose rel = compose(to_ref, p);
    rel.translation *= out.scale;
    out.poses.push_back(rel);
  }
  out.poses[0] = SE3Pose::identity();
  return out;
}

double relative_rotation_error(const SE3Pose& pred_a, const SE3Pose& pred_b, const SE3Pose& gt_a,
                               const SE3Pose& gt_b) {
  const Mat3 rel_pred = pred_a.rotation.transpose() * pred_b.rotation;
  const Mat3 rel_gt = gt_a.rotation.transpose() * gt_b.rotation;
  return rotation_angle_deg(rel_pred.transpose() * rel_gt);
}

Similarity align_cameras(std::span<const SE3Pose> pred, std::span<const SE3Pose> gt) {
  Mat3 acc = Mat3::Zero();
  for (std::size_t a = 0; a < pred.size(); ++a) acc += gt[a].rotation * pred[a].rotation.transpose();
  Similarity sim;
  sim.rotation = project_to_rotation(acc);

  const std::size_t n = pred.size();
  std::vector<Vec3> q(n);
  Vec3 q_mean = Vec3::Zero();
  Vec3 g_mean = Vec3::Zero();
  for (std::size_t a = 0; a < n; ++a) {
    q[a] = sim.rotation * pred[a].center();
    q_mean += q[a];
    g_mean += gt[a].center();
  }
  q_mean /= static_cast<double>(n);
  g_mean /= static_cast<double>(n);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    num += (q[a] - q_mean).dot(gt[a].center() - g_mean);
    den += (q[a] - q_mean).squaredNorm();
  }
  sim.scale = den > 1e-300 ? num / den : 1.0;
  sim.translation = g_mean - sim.scale * q_mean;
  return sim;
}

PoseErrors pose_errors(std::span<const SE3Pose> pred, std::span<const SE3Pose> gt) {
  if (pred.size() != gt.size())
    throw DataError("pose errors: " + std::to_string(pred.size()) + " predicted vs " +
                    std::to_string(gt.size()) + " ground-truth poses");
  if (pred.size() < 2) throw DataError("pose errors need at least two cameras");

  PoseErrors e;
  std::size_t below15 = 0;
  std::size_t below30 = 0;
  for (std::size_t a = 0; a < pred.size(); ++a) {
    for (std::size_t b = a + 1; b < pred.size(); ++b) {
      const double err = relative_rotation_error(pred[a], pred[b], gt[a], gt[b]);
      e.pair_rre.push_back(err);
      e.rre += err;
      below15 += err < 15.0 ? 1 : 0;
      below30 += err < 30.0 ? 1 : 0;
    }
  }
  const double pairs = static_cast<double>(e.pair_rre.size());
  e.rre /= pairs;
  e.rra15 = static_cast<double>(below15) / pairs;
  e.rra30 = static_cast<double>(below30) / pairs;

  const Similarity sim = align_cameras(pred, gt);
  for (std::size_t a = 0; a < pred.size(); ++a) e.te += (sim.apply(pred[a].center()) - gt[a].center()).norm();
  e.te /= static_cast<double>(pred.size());
  return e;
}

}  // namespace gsr
