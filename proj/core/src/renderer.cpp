#include "gsrecon/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace gsr {

Mat3 world_covariance(const GaussianPrimitive& g) {
  const Mat3 r = quat_to_mat(g.rotation);
  return r * g.scale.array().square().matrix().asDiagonal() * r.transpose();
}

std::optional<ProjectedGaussian> project_gaussian(const GaussianPrimitive& g, const SE3Pose& pose,
                                                  const Intrinsics& k) {
  const Vec3 xc = pose.apply_inverse(g.mu);
  if (!(xc.z() > kNearPlane)) return std::nullopt;

  const double inv_z = 1.0 / xc.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << k.f * inv_z, 0.0, -k.f * xc.x() * inv_z * inv_z,
         0.0, k.f * inv_z, -k.f * xc.y() * inv_z * inv_z;
  const Eigen::Matrix<double, 2, 3> jw = jac * pose.rotation.transpose();

  ProjectedGaussian p;
  p.mean = {k.f * xc.x() * inv_z + k.cx(), k.f * xc.y() * inv_z + k.cy()};
  p.cov = jw * world_covariance(g) * jw.transpose();
  p.cov(0, 1) = p.cov(1, 0) = 0.5 * (p.cov(0, 1) + p.cov(1, 0));
  p.cov += kCovarianceRegularizer * Mat2::Identity();
  p.depth = xc.z();
  return p;
}

RenderOutput render(std::span<const GaussianPrimitive> prims, const SE3Pose& pose, const Intrinsics& k,
                    const Vec3& background) {
  k.validate();
  const int w = k.width;
  const int h = k.height;

  struct Splat {
    std::size_t index;
    ProjectedGaussian proj;
    Mat2 inv_cov;
    double opacity;
    Vec3 color;
  };
  std::vector<Splat> splats;
  splats.reserve(prims.size());
  RenderOutput out;
  for (std::size_t n = 0; n < prims.size(); ++n) {
    auto proj = project_gaussian(prims[n], pose, k);
    if (!proj) {
      ++out.culled;
      continue;
    }
    splats.push_back({n, *proj, proj->cov.inverse(), prims[n].opacity, prims[n].color});
  }
  // A per-pixel depth sort equals one global sort because depth is per primitive.
  std::stable_sort(splats.begin(), splats.end(),
                   [](const Splat& a, const Splat& b) { return a.proj.depth < b.proj.depth; });

  Grid<double> transmittance(w, h, 1.0);
  Image accum(w, h, 3, 0.0);
  Grid<double> depth_accum(w, h, 0.0);
  constexpr double kCutoff = kFootprintSigmas * kFootprintSigmas;

  for (const Splat& s : splats) {
    const double rx = kFootprintSigmas * std::sqrt(s.proj.cov(0, 0));
    const double ry = kFootprintSigmas * std::sqrt(s.proj.cov(1, 1));
    const int i0 = std::max(0, static_cast<int>(std::ceil(s.proj.mean.x() - rx)));
    const int i1 = std::min(w - 1, static_cast<int>(std::floor(s.proj.mean.x() + rx)));
    const int j0 = std::max(0, static_cast<int>(std::ceil(s.proj.mean.y() - ry)));
    const int j1 = std::min(h - 1, static_cast<int>(std::floor(s.proj.mean.y() + ry)));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const Vec2 d(i - s.proj.mean.x(), j - s.proj.mean.y());
        const double m = d.dot(s.inv_cov * d);
        if (m > kCutoff) continue;
        const double alpha = std::min(kAlphaClamp, s.opacity * std::exp(-0.5 * m));
        double& t = transmittance(i, j);
        const double weight = alpha * t;
        for (int c = 0; c < 3; ++c) accum.at(i, j, c) += weight * s.color[c];
        depth_accum(i, j) += weight * s.proj.depth;
        t *= 1.0 - alpha;
      }
    }
  }

  out.background = background;
  out.color = Image(w, h, 3);
  out.alpha = Grid<double>(w, h);
  out.depth = Grid<double>(w, h);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const double t = transmittance(i, j);
      const double a = 1.0 - t;
      out.alpha(i, j) = a;
      for (int c = 0; c < 3; ++c) out.color.at(i, j, c) = accum.at(i, j, c) + t * background[c];
      out.depth(i, j) = a > 0.0 ? depth_accum(i, j) / std::max(a, 1e-12) : 0.0;
    }
  }
  return out;
}

}  // namespace gsr
