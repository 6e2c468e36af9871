#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "gsrecon/geometry.hpp"

namespace gsr {

/// Channels per Gaussian: position 3, rotation 4, scale 3, opacity 1, DC color 3.
inline constexpr int kGaussianChannels = 14;
inline constexpr double kMinScale = 1e-4;
inline constexpr double kMaxScale = 1.0;

namespace channel {
inline constexpr int kPosition = 0;
inline constexpr int kRotation = 3;
inline constexpr int kScale = 7;
inline constexpr int kOpacity = 10;
inline constexpr int kColor = 11;
}  // namespace channel

struct GaussianPrimitive {
  Vec3 mu = Vec3::Zero();
  Quat rotation;
  Vec3 scale = Vec3::Constant(0.01);
  double opacity = 1.0;
  Vec3 color = Vec3::Constant(0.5);
};

/// True when the rotation is unit, scales positive, opacity and color within [0, 1].
bool is_valid(const GaussianPrimitive& g, double tol = 1e-9);

using RawGaussian = std::array<double, kGaussianChannels>;

double sigmoid(double x);
double logit(double p);
double softplus(double x);
double inverse_softplus(double y);

/// Maps a raw network output to a valid primitive: raw position, normalized quaternion,
/// clamped softplus scale, sigmoid opacity and color. Throws DataError on bad input.
GaussianPrimitive decode_raw(std::span<const double> raw);
/// Inverse of decode_raw for primitives whose scale lies inside [kMinScale, kMaxScale].
RawGaussian encode_raw(const GaussianPrimitive& g);

/// Per-pixel Gaussian primitives for one view.
class GaussianMap {
 public:
  GaussianMap() = default;
  GaussianMap(int width, int height) : prims_(width, height) {}
  explicit GaussianMap(Grid<GaussianPrimitive> prims) : prims_(std::move(prims)) {}

  /// `raw` holds width * height * 14 values, pixel-major in row order.
  static GaussianMap from_raw(int width, int height, std::span<const double> raw);

  int width() const { return prims_.width(); }
  int height() const { return prims_.height(); }
  GaussianPrimitive& operator()(int i, int j) { return prims_(i, j); }
  const GaussianPrimitive& operator()(int i, int j) const { return prims_(i, j); }
  std::span<const GaussianPrimitive> primitives() const { return prims_.values(); }
  std::span<GaussianPrimitive> primitives() { return prims_.values(); }

  std::vector<double> raw() const;
  PointMap positions() const;
  Grid<double> opacity() const;

 private:
  Grid<GaussianPrimitive> prims_;
};

/// Mean norm of masked points across all views. Throws DataError if no pixel is valid.
double mean_masked_distance(std::span<const PointMap> points, std::span<const ValidMask> masks);

struct RescaledMaps {
  std::vector<GaussianMap> maps;
  double scale = 1.0;
};

/// Scales positions and Gaussian scales so the masked mean distance of the positions is 1.
RescaledMaps rescale_gaussians(std::span<const GaussianMap> maps, std::span<const ValidMask> masks);

std::vector<GaussianPrimitive> flatten(std::span<const GaussianMap> maps);

/// One vertex of the PLY file, in the conventional 3DGS storage space: position, unit
/// quaternion (w first), log scales, opacity logit and DC spherical-harmonic coefficients.
struct SplatRecord {
  std::array<float, kGaussianChannels> values{};
  bool operator==(const SplatRecord&) const = default;
};

SplatRecord to_record(const GaussianPrimitive& g);
GaussianPrimitive from_record(const SplatRecord& r);

void write_ply_records(const std::filesystem::path& path, std::span<const SplatRecord> records);
std::vector<SplatRecord> read_ply_records(const std::filesystem::path& path);

void write_ply(const std::filesystem::path& path, std::span<const GaussianPrimitive> prims);
std::vector<GaussianPrimitive> read_ply(const std::filesystem::path& path);

}  // namespace gsr
