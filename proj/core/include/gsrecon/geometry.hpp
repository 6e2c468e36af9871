#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gsr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Dense row-major W x H grid. Pixel (i, j) is column i, row j, at image coordinate (i, j).
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int i, int j) { return data_[static_cast<std::size_t>(j) * width_ + i]; }
  const T& operator()(int i, int j) const { return data_[static_cast<std::size_t>(j) * width_ + i]; }
  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  template <class U>
  bool same_shape(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using PointMap = Grid<Vec3>;
using DepthMap = Grid<double>;
using ValidMask = Grid<std::uint8_t>;
using PixelMap = Grid<Vec2>;

/// Unit quaternion (w, x, y, z).
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat identity() { return {}; }
  double norm() const;
  /// Returns the normalized quaternion, or the identity if the norm is below 1e-12.
  Quat normalized() const;
  bool operator==(const Quat&) const = default;
};

Mat3 quat_to_mat(const Quat& q);
Quat mat_to_quat(const Mat3& r);
Quat quat_multiply(const Quat& a, const Quat& b);

Mat3 skew(const Vec3& v);
/// Rotation matrix exp([w]x).
Mat3 rodrigues(const Vec3& w);
/// Geodesic angle of a rotation matrix, in degrees.
double rotation_angle_deg(const Mat3& r);
/// Nearest rotation matrix in the Frobenius sense (SVD, det-corrected).
Mat3 project_to_rotation(const Mat3& m);

/// Camera-to-reference rigid transform: x_ref = rotation * x_cam + translation.
struct SE3Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static SE3Pose identity() { return {}; }

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  Vec3 apply_inverse(const Vec3& x) const { return rotation.transpose() * (x - translation); }
  Vec3 center() const { return translation; }

  Mat4 matrix() const;
  static SE3Pose from_matrix(const Mat4& m);
};

/// a o b: first apply b, then a.
SE3Pose compose(const SE3Pose& a, const SE3Pose& b);
SE3Pose invert(const SE3Pose& p);
SE3Pose reorthonormalize(const SE3Pose& p);

/// Pinhole camera with square pixels and principal point fixed at (W/2, H/2).
struct Intrinsics {
  double f = 1.0;
  int width = 0;
  int height = 0;

  double cx() const { return width / 2.0; }
  double cy() const { return height / 2.0; }
  Mat3 matrix() const;
  /// Throws DataError unless f > 0 and the image size is positive.
  void validate() const;
};

struct Projection {
  Vec2 pixel;
  double depth;
};

/// Projects a reference-frame point; empty when the camera-frame depth is not positive.
std::optional<Projection> project(const Vec3& point, const SE3Pose& pose, const Intrinsics& k);

Vec3 unproject_pixel(const Vec2& pixel, double depth, const Intrinsics& k, const SE3Pose& pose);

/// Lifts masked depths into the pose's reference frame. Unmasked pixels carry NaN.
PointMap unproject_depth(const DepthMap& depth, const Intrinsics& k, const SE3Pose& pose,
                         const ValidMask& mask);

/// Pixel coordinate of every grid cell.
PixelMap pixel_grid(int width, int height);

/// Applies `pose` to every finite entry of `points`.
PointMap transform_points(const PointMap& points, const SE3Pose& pose);

std::size_t count_valid(const ValidMask& mask);

inline Vec3 nan_point() {
  return Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
}

}  // namespace gsr
