#include "gsrecon/gsmap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gsrecon/error.hpp"

namespace gsr {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double inverse_softplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

bool is_valid(const GaussianPrimitive& g, double tol) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  return g.mu.allFinite() && std::abs(g.rotation.norm() - 1.0) <= tol && (g.scale.array() > 0).all() &&
         unit(g.opacity) && unit(g.color.x()) && unit(g.color.y()) && unit(g.color.z());
}

GaussianPrimitive decode_raw(std::span<const double> raw) {
  if (raw.size() != kGaussianChannels)
    throw DataError("raw Gaussian must have " + std::to_string(kGaussianChannels) + " channels, got " +
                    std::to_string(raw.size()));
  for (double v : raw)
    if (!std::isfinite(v)) throw DataError("raw Gaussian contains a non-finite value");

  using namespace channel;
  GaussianPrimitive g;
  g.mu = {raw[kPosition], raw[kPosition + 1], raw[kPosition + 2]};
  g.rotation = Quat{raw[kRotation], raw[kRotation + 1], raw[kRotation + 2], raw[kRotation + 3]}.normalized();
  for (int a = 0; a < 3; ++a) g.scale[a] = std::clamp(softplus(raw[kScale + a]), kMinScale, kMaxScale);
  g.opacity = sigmoid(raw[kOpacity]);
  for (int c = 0; c < 3; ++c) g.color[c] = sigmoid(raw[kColor + c]);
  return g;
}

RawGaussian encode_raw(const GaussianPrimitive& g) {
  using namespace channel;
  RawGaussian raw{};
  for (int a = 0; a < 3; ++a) raw[kPosition + a] = g.mu[a];
  const Quat q = g.rotation.normalized();
  raw[kRotation] = q.w;
  raw[kRotation + 1] = q.x;
  raw[kRotation + 2] = q.y;
  raw[kRotation + 3] = q.z;
  for (int a = 0; a < 3; ++a) raw[kScale + a] = inverse_softplus(g.scale[a]);
  raw[kOpacity] = logit(g.opacity);
  for (int c = 0; c < 3; ++c) raw[kColor + c] = logit(g.color[c]);
  return raw;
}

GaussianMap GaussianMap::from_raw(int width, int height, std::span<const double> raw) {
  const std::size_t expected = static_cast<std::size_t>(width) * height * kGaussianChannels;
  if (raw.size() != expected)
    throw DataError("raw Gaussian map has " + std::to_string(raw.size()) + " values, expected " +
                    std::to_string(expected));
  GaussianMap map(width, height);
  for (std::size_t k = 0; k < map.prims_.size(); ++k)
    map.prims_[k] = decode_raw(raw.subspan(k * kGaussianChannels, kGaussianChannels));
  return map;
}

std::vector<double> GaussianMap::raw() const {
  std::vector<double> out;
  out.reserve(prims_.size() * kGaussianChannels);
  for (const auto& g : prims_.values()) {
    const RawGaussian r = encode_raw(g);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

PointMap GaussianMap::positions() const {
  PointMap points(width(), height());
  for (std::size_t k = 0; k < prims_.size(); ++k) points[k] = prims_[k].mu;
  return points;
}

Grid<double> GaussianMap::opacity() const {
  Grid<double> o(width(), height());
  for (std::size_t k = 0; k < prims_.size(); ++k) o[k] = prims_[k].opacity;
  return o;
}

double mean_masked_distance(std::span<const PointMap> points, std::span<const ValidMask> masks) {
  if (points.size() != masks.size()) throw DataError("point map and mask counts differ");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < points.size(); ++n) {
    if (!points[n].same_shape(masks[n])) throw DataError("point map and mask shapes differ");
    for (std::size_t k = 0; k < points[n].size(); ++k) {
      if (!masks[n][k]) continue;
      total += points[n][k].norm();
      ++count;
    }
  }
  if (count == 0) throw DataError("mean masked distance: no valid pixels in any view");
  return total / static_cast<double>(count);
}

RescaledMaps rescale_gaussians(std::span<const GaussianMap> maps, std::span<const ValidMask> masks) {
  std::vector<PointMap> positions;
  positions.reserve(maps.size());
  for (const auto& m : maps) positions.push_back(m.positions());
  const double d = mean_masked_distance(positions, masks);
  RescaledMaps out;
  out.scale = 1.0 / d;
  out.maps.assign(maps.begin(), maps.end());
  for (auto& m : out.maps) {
    for (auto& g : m.primitives()) {
      g.mu *= out.scale;
      g.scale *= out.scale;
    }
  }
  return out;
}

std::vector<GaussianPrimitive> flatten(std::span<const GaussianMap> maps) {
  std::vector<GaussianPrimitive> out;
  for (const auto& m : maps) out.insert(out.end(), m.primitives().begin(), m.primitives().end());
  return out;
}

}  // namespace gsr
