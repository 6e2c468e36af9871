#include "gsrecon/losses.hpp"

#include <cmath>
#include <string>

#include "gsrecon/error.hpp"
#include "gsrecon/gsmap.hpp"
#include "gsrecon/metrics.hpp"

namespace gsr {

namespace {

constexpr double kMinRayNorm = 1e-8;

void check_shapes(std::span<const PointMap> pred, std::span<const PointMap> gt, std::span<const ValidMask> masks,
                  const char* what) {
  if (pred.size() != gt.size() || pred.size() != masks.size())
    throw DataError(std::string(what) + ": view counts differ");
  for (std::size_t n = 0; n < pred.size(); ++n)
    if (!pred[n].same_shape(gt[n]) || !pred[n].same_shape(masks[n]))
      throw DataError(std::string(what) + ": shapes differ in view " + std::to_string(n));
}

std::vector<PointMap> zero_like(std::span<const PointMap> maps) {
  std::vector<PointMap> out;
  out.reserve(maps.size());
  for (const auto& m : maps) out.emplace_back(m.width(), m.height(), Vec3::Zero());
  return out;
}

std::size_t total_valid(std::span<const ValidMask> masks) {
  std::size_t n = 0;
  for (const auto& m : masks) n += count_valid(m);
  return n;
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_align >= 0) || !(lambda_pos >= 0)) throw DataError("loss weights must be non-negative");
}

GeometricLoss position_loss(std::span<const PointMap> pred, std::span<const PointMap> gt,
                            std::span<const ValidMask> masks) {
  check_shapes(pred, gt, masks, "position loss");
  GeometricLoss loss;
  loss.grad = zero_like(pred);
  const std::size_t count = total_valid(masks);
  if (count == 0) return loss;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t n = 0; n < pred.size(); ++n) {
    for (std::size_t k = 0; k < pred[n].size(); ++k) {
      if (!masks[n][k]) continue;
      const Vec3 d = pred[n][k] - gt[n][k];
      const double len = d.norm();
      loss.value += len;
      if (len > 0) loss.grad[n][k] = d * (inv / len);
    }
  }
  loss.value *= inv;
  return loss;
}

GeometricLoss alignment_loss(std::span<const PointMap> pred, std::span<const Vec3> origins,
                             std::span<const PointMap> gt, std::span<const ValidMask> masks) {
  check_shapes(pred, gt, masks, "alignment loss");
  if (origins.size() != pred.size()) throw DataError("alignment loss: one camera origin per view required");
  GeometricLoss loss;
  loss.grad = zero_like(pred);
  const std::size_t count = total_valid(masks);
  if (count == 0) return loss;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t n = 0; n < pred.size(); ++n) {
    for (std::size_t k = 0; k < pred[n].size(); ++k) {
      if (!masks[n][k]) continue;
      const Vec3 a = pred[n][k] - origins[n];
      const Vec3 b = gt[n][k] - origins[n];
      const double na = a.norm();
      const double nb = b.norm();
      if (na < kMinRayNorm || nb < kMinRayNorm) continue;
      const double cos = a.dot(b) / (na * nb);
      loss.value += 1.0 - cos;
      // d(1 - cos)/da = -(b / (|a||b|) - cos * a / |a|^2)
      loss.grad[n][k] = -(b / (na * nb) - cos * a / (na * na)) * inv;
    }
  }
  loss.value *= inv;
  return loss;
}

ScaleNormalized scale_normalize(std::span<const PointMap> points, std::span<const ValidMask> masks) {
  ScaleNormalized out;
  out.distance = mean_masked_distance(points, masks);
  const double s = 1.0 / out.distance;
  out.points.assign(points.begin(), points.end());
  for (auto& p : out.points)
    for (auto& x : p.values()) x *= s;
  return out;
}

std::vector<PointMap> scale_normalize_backward(std::span<const PointMap> points, std::span<const ValidMask> masks,
                                               double distance, std::span<const PointMap> grad_out) {
  // y = x / d(x), d = sum_j m_j |x_j| / |M|
  // dL/dx_k = g_k / d - (sum_j g_j . x_j) / d^2 * m_k x_k / (|x_k| |M|)
  const std::size_t count = total_valid(masks);
  double gx = 0.0;
  for (std::size_t n = 0; n < points.size(); ++n)
    for (std::size_t k = 0; k < points[n].size(); ++k)
      if (grad_out[n][k].allFinite() && points[n][k].allFinite()) gx += grad_out[n][k].dot(points[n][k]);
  const double coeff = gx / (distance * distance * static_cast<double>(count));

  std::vector<PointMap> grad = zero_like(points);
  for (std::size_t n = 0; n < points.size(); ++n) {
    for (std::size_t k = 0; k < points[n].size(); ++k) {
      Vec3 g = grad_out[n][k] / distance;
      if (masks[n][k]) {
        const double len = points[n][k].norm();
        if (len > 0) g -= coeff * points[n][k] / len;
      }
      grad[n][k] = g;
    }
  }
  return grad;
}

double render_loss(const Image& rendered, const Image& target) {
  return mse(rendered, target) + 0.2 * (1.0 - ssim(rendered, target));
}

double total_loss(long step, const LossComponents& c, const LossWeights& w) {
  double total = c.render + w.lambda_align * c.align;
  if (position_term_active(step, w)) total += w.lambda_pos * c.pos;
  return total;
}

}  // namespace gsr
