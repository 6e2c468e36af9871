#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "gsrecon/geometry.hpp"
#include "gsrecon/image.hpp"

namespace gsr {

/// 8-bit PNG with 1, 3 or 4 channels. Values are clamped to [0, 1] and rounded.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Rounds every value to the nearest 8-bit level, exactly as write_png stores it.
Image quantize_8bit(const Image& image);

/// Single-channel little-endian PFM ("Pf", scale -1.0). Rows are stored top-to-bottom in
/// memory and bottom-to-top on disk, per the format.
void write_pfm(const std::filesystem::path& path, const Grid<double>& values);
Grid<double> read_pfm(const std::filesystem::path& path);

/// Shared focal, image size and per-view camera-to-reference poses.
struct CameraRig {
  Intrinsics intrinsics;
  /// Empty entries mark views whose pose could not be recovered.
  std::vector<std::optional<SE3Pose>> poses;
};

/// {"f": float, "width": int, "height": int, "poses": [[16 floats, row-major 4x4]]}
void write_camera_json(const std::filesystem::path& path, const CameraRig& rig);
CameraRig read_camera_json(const std::filesystem::path& path);
/// Throws DataError if any pose is missing.
std::vector<SE3Pose> complete_poses(const CameraRig& rig);

}  // namespace gsr
