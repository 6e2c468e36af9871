#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "gsrecon/geometry.hpp"
#include "gsrecon/gsmap.hpp"
#include "gsrecon/image.hpp"

namespace gsr {

inline constexpr double kNearPlane = 0.01;
inline constexpr double kCovarianceRegularizer = 0.1;  // px^2
inline constexpr double kAlphaClamp = 0.999;
inline constexpr double kFootprintSigmas = 3.0;

struct ProjectedGaussian {
  Vec2 mean;
  Mat2 cov;  // includes the regularizer
  double depth;
};

/// R(r) diag(s^2) R(r)^T.
Mat3 world_covariance(const GaussianPrimitive& g);

/// EWA projection to the image plane; empty when the center is in front of the near plane.
std::optional<ProjectedGaussian> project_gaussian(const GaussianPrimitive& g, const SE3Pose& pose,
                                                  const Intrinsics& k);

struct RenderOutput {
  Image color;          // composited over the background
  Grid<double> alpha;   // accumulated opacity
  Grid<double> depth;   // alpha-normalized expected splat depth; 0 where alpha is 0
  Vec3 background = Vec3::Ones();
  std::size_t culled = 0;  // primitives skipped by the near plane
};

/// Depth-sorted front-to-back alpha compositing of every primitive at every pixel it covers
/// within its 3-sigma ellipse. Ties in depth keep input order.
RenderOutput render(std::span<const GaussianPrimitive> prims, const SE3Pose& pose, const Intrinsics& k,
                    const Vec3& background);

}  // namespace gsr
