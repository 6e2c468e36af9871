#include "gsrecon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/SVD>

#include "gsrecon/error.hpp"

namespace gsr {

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat Quat::normalized() const {
  const double n = norm();
  if (!(n > 1e-12)) return Quat::identity();
  return {w / n, x / n, y / n, z / n};
}

Mat3 quat_to_mat(const Quat& q) {
  const Quat u = q.normalized();
  const double w = u.w, x = u.x, y = u.y, z = u.z;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Quat mat_to_quat(const Mat3& r) {
  // Shepperd's method: pivot on the largest diagonal term.
  const double trace = r.trace();
  Quat q;
  if (trace > r(0, 0) && trace > r(1, 1) && trace > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  if (q.w < 0) q = {-q.w, -q.x, -q.y, -q.z};
  return q.normalized();
}

Quat quat_multiply(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

Mat3 rodrigues(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = skew(w);
  if (theta < 1e-8) return Mat3::Identity() + k + 0.5 * k * k;
  return Mat3::Identity() + (std::sin(theta) / theta) * k +
         ((1.0 - std::cos(theta)) / (theta * theta)) * k * k;
}

double rotation_angle_deg(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

Mat3 project_to_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Mat4 SE3Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

SE3Pose SE3Pose::from_matrix(const Mat4& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

SE3Pose compose(const SE3Pose& a, const SE3Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

SE3Pose invert(const SE3Pose& p) {
  const Mat3 rt = p.rotation.transpose();
  return {rt, -(rt * p.translation)};
}

SE3Pose reorthonormalize(const SE3Pose& p) {
  return {project_to_rotation(p.rotation), p.translation};
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << f, 0, cx(), 0, f, cy(), 0, 0, 1;
  return k;
}

void Intrinsics::validate() const {
  if (!(f > 0) || !std::isfinite(f))
    throw DataError("focal length must be positive, got " + std::to_string(f));
  if (width <= 0 || height <= 0)
    throw DataError("image size must be positive, got " + std::to_string(width) + "x" +
                    std::to_string(height));
}

std::optional<Projection> project(const Vec3& point, const SE3Pose& pose, const Intrinsics& k) {
  const Vec3 xc = pose.apply_inverse(point);
  if (!(xc.z() > 0)) return std::nullopt;
  return Projection{{k.f * xc.x() / xc.z() + k.cx(), k.f * xc.y() / xc.z() + k.cy()}, xc.z()};
}

Vec3 unproject_pixel(const Vec2& pixel, double depth, const Intrinsics& k, const SE3Pose& pose) {
  const Vec3 xc{depth * (pixel.x() - k.cx()) / k.f, depth * (pixel.y() - k.cy()) / k.f, depth};
  return pose.apply(xc);
}

PointMap unproject_depth(const DepthMap& depth, const Intrinsics& k, const SE3Pose& pose,
                         const ValidMask& mask) {
  if (!depth.same_shape(mask))
    throw DataError("depth map and mask shapes differ");
  if (depth.width() != k.width || depth.height() != k.height)
    throw DataError("depth map size does not match intrinsics");
  PointMap points(depth.width(), depth.height(), nan_point());
  for (int j = 0; j < depth.height(); ++j) {
    for (int i = 0; i < depth.width(); ++i) {
      if (!mask(i, j)) continue;
      const double z = depth(i, j);
      if (!(z > 0) || !std::isfinite(z))
        throw DataError("non-positive depth " + std::to_string(z) + " at masked pixel (" +
                        std::to_string(i) + ", " + std::to_string(j) + ")");
      points(i, j) = unproject_pixel(Vec2(i, j), z, k, pose);
    }
  }
  return points;
}

PixelMap pixel_grid(int width, int height) {
  PixelMap grid(width, height);
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i) grid(i, j) = Vec2(i, j);
  return grid;
}

PointMap transform_points(const PointMap& points, const SE3Pose& pose) {
  PointMap out(points.width(), points.height(), nan_point());
  for (std::size_t k = 0; k < points.size(); ++k)
    if (points[k].allFinite()) out[k] = pose.apply(points[k]);
  return out;
}

std::size_t count_valid(const ValidMask& mask) {
  std::size_t n = 0;
  for (auto v : mask.values()) n += v ? 1 : 0;
  return n;
}

}  // namespace gsr
