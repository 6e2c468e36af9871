#include "gsrecon/pipeline.hpp"

#include <cmath>

#include "gsrecon/error.hpp"

namespace gsr {

bool Reconstruction::complete() const {
  for (const auto& p : rig.poses)
    if (!p) return false;
  return true;
}

ValidMask white_matte_mask(const Image& image, double tolerance) {
  Grid<double> alpha(image.width, image.height, 0.0);
  for (int j = 0; j < image.height; ++j)
    for (int i = 0; i < image.width; ++i)
      for (int c = 0; c < std::min(image.channels, 3); ++c)
        if (std::abs(1.0 - image.at(i, j, c)) > tolerance) alpha(i, j) = 1.0;
  return build_mask_object(alpha);
}

Reconstruction reconstruct(const Transformer<float>& model, std::span<const Image> images,
                           std::span<const std::optional<ValidMask>> masks, const ReconstructOptions& options) {
  if (images.empty()) throw DataError("reconstruct needs at least one image");
  for (const auto& img : images)
    if (!img.same_shape(images[0]))
      throw DataError("input images differ in size: " + std::to_string(images[0].width) + "x" +
                      std::to_string(images[0].height) + " vs " + std::to_string(img.width) + "x" +
                      std::to_string(img.height));
  if (!masks.empty() && masks.size() != images.size()) throw DataError("one mask per image required");
  for (std::size_t n = 0; n < masks.size(); ++n)
    if (masks[n] && (masks[n]->width() != images[n].width || masks[n]->height() != images[n].height))
      throw DataError("mask " + std::to_string(n + 1) + " does not match its image size");
  options.ransac.validate();

  const std::size_t n_views = images.size();
  const int w = images[0].width;
  const int h = images[0].height;

  Reconstruction rec;
  rec.maps = model.predict(images);
  rec.views.resize(n_views);

  for (std::size_t n = 0; n < n_views; ++n) {
    if (options.mode == SceneMode::kObject)
      rec.masks.push_back(!masks.empty() && masks[n] ? *masks[n] : white_matte_mask(images[n], options.matte_tolerance));
    else
      rec.masks.push_back(build_mask_scene(rec.maps[n].opacity(), options.opacity_threshold));
    rec.views[n].mask_pixels = count_valid(rec.masks[n]);
  }

  // Focal from each view alone, where the prediction is in that view's own camera frame.
  std::vector<double> focals;
  for (std::size_t n = 0; n < n_views; ++n) {
    const GaussianMap mono = model.predict(images.subspan(n, 1)).front();
    const ValidMask mask =
        options.mode == SceneMode::kObject ? rec.masks[n] : build_mask_scene(mono.opacity(), options.opacity_threshold);
    try {
      rec.views[n].focal = estimate_focal_single(mono.positions(), mask, options.focal).focal;
      focals.push_back(rec.views[n].focal);
    } catch (const Error& e) {
      rec.views[n].error = std::string("focal: ") + e.what();
    }
  }
  if (focals.empty()) throw SolverError("focal estimation failed on every view");
  rec.rig.intrinsics = Intrinsics{estimate_focal_multi(focals), w, h};

  const PixelMap pixels = pixel_grid(w, h);
  rec.rig.poses.assign(n_views, std::nullopt);
  rec.rig.poses[0] = SE3Pose::identity();
  for (std::size_t n = 1; n < n_views; ++n) {
    RansacParams params = options.ransac;
    params.seed = options.ransac.seed + n;
    try {
      const PnpResult r = solve_pnp_ransac(rec.maps[n].positions(), pixels, rec.masks[n], rec.rig.intrinsics, params);
      rec.rig.poses[n] = r.pose;
      rec.views[n].inliers = r.inlier_count;
    } catch (const Error& e) {
      if (!rec.views[n].error.empty()) rec.views[n].error += "; ";
      rec.views[n].error += std::string("pose: ") + e.what();
    }
  }
  return rec;
}

}  // namespace gsr
