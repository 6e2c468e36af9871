#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsrecon/calib.hpp"
#include "gsrecon/error.hpp"

namespace gsr {

namespace {

constexpr int kSampleSize = 6;
constexpr int kMaxRefineSteps = 20;
constexpr double kRefineDamping = 1e-6;
constexpr double kRefineStepTol = 1e-10;
// Smallest-to-largest singular value ratio below which a DLT sample is treated as rank deficient.
constexpr double kRankTolerance = 1e-9;

struct WorldToCamera {
  Mat3 r;
  Vec3 t;
};

WorldToCamera to_world_to_camera(const SE3Pose& p) {
  return {p.rotation.transpose(), -(p.rotation.transpose() * p.translation)};
}

SE3Pose to_camera_to_world(const WorldToCamera& w) {
  return {w.r.transpose(), -(w.r.transpose() * w.t)};
}

double reprojection_cost(const WorldToCamera& w, std::span<const Vec3> points, std::span<const Vec2> pixels,
                         const Intrinsics& k) {
  double cost = 0.0;
  for (std::size_t n = 0; n < points.size(); ++n) {
    const Vec3 xc = w.r * points[n] + w.t;
    if (!(xc.z() > 0)) return std::numeric_limits<double>::infinity();
    const Vec2 uv(k.f * xc.x() / xc.z() + k.cx(), k.f * xc.y() / xc.z() + k.cy());
    cost += (uv - pixels[n]).squaredNorm();
  }
  return cost;
}

}  // namespace

double RansacParams::threshold_for(const Intrinsics& k) const {
  if (threshold_px > 0) return threshold_px;
  return 0.005 * std::hypot(static_cast<double>(k.width), static_cast<double>(k.height));
}

void RansacParams::validate() const {
  if (iterations < 1) throw DataError("RANSAC needs at least one iteration");
  if (min_inliers < kSampleSize)
    throw DataError("RANSAC min inliers must be at least " + std::to_string(kSampleSize));
  if (!std::isfinite(threshold_px)) throw DataError("RANSAC threshold must be finite");
}

SE3Pose solve_pnp_dlt(std::span<const Vec3> points, std::span<const Vec2> pixels, const Intrinsics& k) {
  const std::size_t n = points.size();
  if (n < static_cast<std::size_t>(kSampleSize) || pixels.size() != n)
    throw SolverError("DLT needs at least 6 correspondences");

  // Condition the 3D points: zero centroid, mean distance sqrt(3).
  Vec3 centroid = Vec3::Zero();
  for (const auto& x : points) centroid += x;
  centroid /= static_cast<double>(n);
  double spread = 0.0;
  for (const auto& x : points) spread += (x - centroid).norm();
  spread /= static_cast<double>(n);
  if (!(spread > 0)) throw SolverError("DLT sample points coincide");
  const double s = std::sqrt(3.0) / spread;

  Eigen::MatrixXd a(2 * n, 12);
  for (std::size_t r = 0; r < n; ++r) {
    const Vec3 x = s * (points[r] - centroid);
    const double u = (pixels[r].x() - k.cx()) / k.f;
    const double v = (pixels[r].y() - k.cy()) / k.f;
    const Eigen::RowVector4d xh(x.x(), x.y(), x.z(), 1.0);
    a.row(2 * r) << xh, Eigen::RowVector4d::Zero(), -u * xh;
    a.row(2 * r + 1) << Eigen::RowVector4d::Zero(), xh, -v * xh;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(10) > kRankTolerance * sv(0))) throw SolverError("DLT sample is rank deficient");

  const Eigen::VectorXd p = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> pn;
  pn << p.segment<4>(0).transpose(), p.segment<4>(4).transpose(), p.segment<4>(8).transpose();

  // Undo the conditioning: P = Pn * [sI, -s c; 0 1].
  Eigen::Matrix<double, 3, 4> proj;
  proj.leftCols<3>() = s * pn.leftCols<3>();
  proj.col(3) = pn.col(3) - s * pn.leftCols<3>() * centroid;

  Mat3 m = proj.leftCols<3>();
  if (m.determinant() < 0) {
    proj = -proj;
    m = -m;
  }
  Eigen::JacobiSVD<Mat3> msvd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double scale = msvd.singularValues().mean();
  if (!(scale > 0)) throw SolverError("DLT produced a degenerate projection");
  WorldToCamera w;
  w.r = project_to_rotation(m);
  w.t = proj.col(3) / scale;
  return to_camera_to_world(w);
}

RefineResult refine_pose(const SE3Pose& initial, std::span<const Vec3> points, std::span<const Vec2> pixels,
                         const Intrinsics& k) {
  WorldToCamera w = to_world_to_camera(initial);
  RefineResult res;
  res.initial_cost = reprojection_cost(w, points, pixels, k);
  double cost = res.initial_cost;

  for (int step = 0; step < kMaxRefineSteps; ++step) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t n = 0; n < points.size(); ++n) {
      const Vec3 xc = w.r * points[n] + w.t;
      const double iz = 1.0 / xc.z();
      const Vec2 r(k.f * xc.x() * iz + k.cx() - pixels[n].x(), k.f * xc.y() * iz + k.cy() - pixels[n].y());
      Eigen::Matrix<double, 2, 3> jp;
      jp << k.f * iz, 0.0, -k.f * xc.x() * iz * iz, 0.0, k.f * iz, -k.f * xc.y() * iz * iz;
      // Left perturbation: xc' = exp([w]x) xc + v.
      Eigen::Matrix<double, 3, 6> jx;
      jx.leftCols<3>() = -skew(xc);
      jx.rightCols<3>() = Mat3::Identity();
      const Eigen::Matrix<double, 2, 6> j = jp * jx;
      h.noalias() += j.transpose() * j;
      g.noalias() += j.transpose() * r;
    }
    h.diagonal().array() += kRefineDamping;
    const Eigen::Matrix<double, 6, 1> delta = -h.ldlt().solve(g);
    if (!delta.allFinite()) break;

    const Mat3 dr = rodrigues(delta.head<3>());
    WorldToCamera next{dr * w.r, dr * w.t + delta.tail<3>()};
    next.r = project_to_rotation(next.r);
    const double next_cost = reprojection_cost(next, points, pixels, k);
    if (!(next_cost <= cost)) break;
    w = next;
    cost = next_cost;
    res.steps = step + 1;
    if (delta.norm() < kRefineStepTol) break;
  }
  res.pose = to_camera_to_world(w);
  res.final_cost = cost;
  return res;
}

PnpResult solve_pnp_ransac(const PointMap& points, const PixelMap& pixels, const ValidMask& mask,
                           const Intrinsics& k, const RansacParams& params) {
  params.validate();
  k.validate();
  if (!points.same_shape(pixels) || !points.same_shape(mask))
    throw DataError("PnP: point map, pixel map and mask shapes differ");

  std::vector<std::size_t> valid;
  for (std::size_t n = 0; n < points.size(); ++n)
    if (mask[n] && points[n].allFinite()) valid.push_back(n);
  if (valid.size() < static_cast<std::size_t>(params.min_inliers))
    throw SolverError("PnP: " + std::to_string(valid.size()) + " valid correspondences, need " +
                      std::to_string(params.min_inliers));

  const double threshold = params.threshold_for(k);
  const double threshold_sq = threshold * threshold;
  auto inliers_of = [&](const WorldToCamera& w, std::vector<std::size_t>* out) {
    std::size_t count = 0;
    for (std::size_t n : valid) {
      const Vec3 xc = w.r * points[n] + w.t;
      if (!(xc.z() > 0)) continue;
      const Vec2 uv(k.f * xc.x() / xc.z() + k.cx(), k.f * xc.y() / xc.z() + k.cy());
      if ((uv - pixels[n]).squaredNorm() < threshold_sq) {
        ++count;
        if (out) out->push_back(n);
      }
    }
    return count;
  };

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  std::size_t best_count = 0;
  std::optional<SE3Pose> best;
  std::array<Vec3, kSampleSize> sample_x;
  std::array<Vec2, kSampleSize> sample_y;
  for (int it = 0; it < params.iterations; ++it) {
    std::array<std::size_t, kSampleSize> idx{};
    for (int s = 0; s < kSampleSize; ++s) {
      std::size_t candidate;
      do {
        candidate = valid[pick(rng)];
      } while (std::find(idx.begin(), idx.begin() + s, candidate) != idx.begin() + s);
      idx[static_cast<std::size_t>(s)] = candidate;
      sample_x[static_cast<std::size_t>(s)] = points[candidate];
      sample_y[static_cast<std::size_t>(s)] = pixels[candidate];
    }
    SE3Pose hypothesis;
    try {
      hypothesis = solve_pnp_dlt(sample_x, sample_y, k);
    } catch (const SolverError&) {
      continue;  // degenerate sample; draw again on the next iteration
    }
    const std::size_t count = inliers_of(to_world_to_camera(hypothesis), nullptr);
    if (count > best_count) {
      best_count = count;
      best = hypothesis;
    }
  }
  if (!best || best_count < static_cast<std::size_t>(params.min_inliers))
    throw SolverError("PnP-RANSAC: best hypothesis has " + std::to_string(best_count) + " inliers, need " +
                      std::to_string(params.min_inliers));

  std::vector<std::size_t> consensus;
  inliers_of(to_world_to_camera(*best), &consensus);
  std::vector<Vec3> xs;
  std::vector<Vec2> ys;
  for (std::size_t n : consensus) {
    xs.push_back(points[n]);
    ys.push_back(pixels[n]);
  }
  const RefineResult refined = refine_pose(*best, xs, ys, k);

  PnpResult result;
  result.pose = refined.pose;
  result.refinement_steps = refined.steps;
  result.inliers = ValidMask(points.width(), points.height(), 0);
  std::vector<std::size_t> final_inliers;
  result.inlier_count = inliers_of(to_world_to_camera(refined.pose), &final_inliers);
  for (std::size_t n : final_inliers) result.inliers[n] = 1;
  return result;
}

}  // namespace gsr
