#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsrecon/calib.hpp"
#include "gsrecon/io.hpp"
#include "gsrecon/model.hpp"
#include "gsrecon/synth.hpp"

namespace gsr {

struct ReconstructOptions {
  SceneMode mode = SceneMode::kObject;
  RansacParams ransac;
  FocalOptions focal;
  double opacity_threshold = 0.5;  // scene-mode PnP mask
  /// Object mode without a supplied mask: a pixel is foreground if any channel differs from the
  /// white background by more than this.
  double matte_tolerance = 0.02;
};

struct ViewReport {
  double focal = 0.0;  // monocular estimate; 0 if it failed
  std::size_t mask_pixels = 0;
  std::size_t inliers = 0;
  std::string error;  // empty on success
};

struct Reconstruction {
  std::vector<GaussianMap> maps;  // in the frame of view 1
  CameraRig rig;                  // view 1 is the identity; failed views are empty
  std::vector<ValidMask> masks;
  std::vector<ViewReport> views;

  bool complete() const;
};

/// Foreground mask of an image rendered over a white background.
ValidMask white_matte_mask(const Image& image, double tolerance);

/// Full inference: multi-view forward, per-view monocular focal estimation averaged over views,
/// mode-dependent masks, and PnP-RANSAC for every view after the first. `masks` is either empty
/// or holds one optional object mask per image. Throws DataError for inconsistent inputs and
/// SolverError when no view yields a focal estimate. Per-view PnP failures are reported in
/// `views` and leave that pose empty.
Reconstruction reconstruct(const Transformer<float>& model, std::span<const Image> images,
                           std::span<const std::optional<ValidMask>> masks, const ReconstructOptions& options);

}  // namespace gsr
