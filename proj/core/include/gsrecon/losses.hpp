#pragma once

#include <span>
#include <vector>

#include "gsrecon/geometry.hpp"
#include "gsrecon/image.hpp"

namespace gsr {

struct LossWeights {
  double lambda_align = 1.0;
  double lambda_pos = 10.0;
  long t_max = 2000;  // last step (inclusive) with position supervision

  void validate() const;
};

/// Loss value plus its gradient with respect to each predicted point map.
struct GeometricLoss {
  double value = 0.0;
  std::vector<PointMap> grad;
};

/// Mean over masked pixels (all views) of the per-pixel L2 distance ||pred - gt||.
GeometricLoss position_loss(std::span<const PointMap> pred, std::span<const PointMap> gt,
                            std::span<const ValidMask> masks);

/// Mean over masked pixels of 1 - cos(pred - origin, gt - origin), with `origins[n]` the camera
/// center of view n. Pixels where either ray is shorter than 1e-8 contribute zero.
GeometricLoss alignment_loss(std::span<const PointMap> pred, std::span<const Vec3> origins,
                             std::span<const PointMap> gt, std::span<const ValidMask> masks);

/// Point maps divided by their masked mean distance, as used to remove the scale ambiguity
/// between predictions and supervision.
struct ScaleNormalized {
  std::vector<PointMap> points;
  double distance = 1.0;  // masked mean distance before scaling; scale factor is 1 / distance
};

ScaleNormalized scale_normalize(std::span<const PointMap> points, std::span<const ValidMask> masks);

/// Pulls a gradient with respect to scale_normalize's output back to its input.
std::vector<PointMap> scale_normalize_backward(std::span<const PointMap> points, std::span<const ValidMask> masks,
                                               double distance, std::span<const PointMap> grad_out);

/// MSE plus 0.2 * (1 - SSIM). Forward only.
double render_loss(const Image& rendered, const Image& target);

struct LossComponents {
  double render = 0.0;
  double align = 0.0;
  double pos = 0.0;
};

/// L_render + lambda_a L_align + [t <= T_max] lambda_p L_pos.
double total_loss(long step, const LossComponents& c, const LossWeights& w);

inline bool position_term_active(long step, const LossWeights& w) { return step <= w.t_max; }

}  // namespace gsr
