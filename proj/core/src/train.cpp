#include "gsrecon/train.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gsrecon/error.hpp"
#include "gsrecon/renderer.hpp"

namespace gsr {

namespace {

// One batch item with its ground truth in the frame of its first view.
struct Item {
  std::vector<Image> images;
  std::vector<PointMap> points;
  std::vector<ValidMask> masks;
  std::vector<SE3Pose> poses;
  Intrinsics intrinsics;
  Vec3 background = Vec3::Ones();
};

Item make_item(const DatasetSample& s, std::size_t ref, bool mono) {
  const std::size_t n_views = mono ? 1 : s.views();
  const SE3Pose to_ref = invert(s.poses[ref]);
  Item item;
  item.intrinsics = s.intrinsics;
  item.background = background_for(s.mode);
  for (std::size_t k = 0; k < n_views; ++k) {
    const std::size_t v = (ref + k) % s.views();
    item.images.push_back(s.images[v]);
    item.points.push_back(transform_points(s.points[v], to_ref));
    item.masks.push_back(s.masks[v]);
    item.poses.push_back(k == 0 ? SE3Pose::identity() : compose(to_ref, s.poses[v]));
  }
  return item;
}

struct ItemLoss {
  double pos = 0.0, align = 0.0, color = 0.0, opacity = 0.0, render = 0.0;
};

// Losses and d(weighted loss)/d(raw maps) for one item. Raw maps are W x H x 14 images.
ItemLoss item_losses(const TrainConfig& cfg, long step, const Item& item, const std::vector<Image>& raw,
                     std::vector<Image>& grad, bool with_render) {
  const std::size_t n_views = raw.size();
  const int w = raw[0].width;
  const int h = raw[0].height;
  std::vector<PointMap> pred(n_views, PointMap(w, h));
  for (std::size_t n = 0; n < n_views; ++n)
    for (int j = 0; j < h; ++j)
      for (int i = 0; i < w; ++i)
        pred[n](i, j) = Vec3(raw[n].at(i, j, 0), raw[n].at(i, j, 1), raw[n].at(i, j, 2));

  const ScaleNormalized p = scale_normalize(pred, item.masks);
  const ScaleNormalized g = scale_normalize(item.points, item.masks);
  std::vector<Vec3> origins;
  for (const auto& pose : item.poses) origins.push_back(pose.translation / g.distance);

  ItemLoss out;
  const bool use_pos = position_term_active(step, cfg.weights);
  const GeometricLoss la = alignment_loss(p.points, origins, g.points, item.masks);
  out.align = la.value;
  std::vector<PointMap> d_norm = la.grad;
  for (auto& m : d_norm)
    for (auto& v : m.values()) v *= cfg.weights.lambda_align;
  const GeometricLoss lp = position_loss(p.points, g.points, item.masks);
  out.pos = lp.value;
  if (use_pos)
    for (std::size_t n = 0; n < n_views; ++n)
      for (std::size_t k = 0; k < d_norm[n].size(); ++k) d_norm[n][k] += cfg.weights.lambda_pos * lp.grad[n][k];
  const std::vector<PointMap> d_pred = scale_normalize_backward(pred, item.masks, p.distance, d_norm);

  grad.assign(n_views, Image(w, h, kGaussianChannels));
  const double inv_pixels = 1.0 / static_cast<double>(n_views * static_cast<std::size_t>(w) * h);
  for (std::size_t n = 0; n < n_views; ++n) {
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        const Vec3& dp = d_pred[n](i, j);
        for (int a = 0; a < 3; ++a) grad[n].at(i, j, channel::kPosition + a) = dp[a];

        for (int c = 0; c < 3; ++c) {
          const double s = sigmoid(raw[n].at(i, j, channel::kColor + c));
          const double e = s - item.images[n].at(i, j, c);
          out.color += e * e * inv_pixels / 3.0;
          grad[n].at(i, j, channel::kColor + c) = cfg.color_weight * 2.0 * e * s * (1.0 - s) * inv_pixels / 3.0;
        }

        const double z = raw[n].at(i, j, channel::kOpacity);
        const double target = item.masks[n](i, j) ? 1.0 : 0.0;
        // numerically stable BCE with logits
        out.opacity += (std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)))) * inv_pixels;
        grad[n].at(i, j, channel::kOpacity) = cfg.opacity_weight * (sigmoid(z) - target) * inv_pixels;
      }
    }
  }

  if (with_render) {
    std::vector<GaussianMap> maps;
    for (const auto& r : raw) maps.push_back(GaussianMap::from_raw(w, h, r.data));
    const RescaledMaps scaled = rescale_gaussians(maps, item.masks);
    const std::vector<GaussianPrimitive> prims = flatten(scaled.maps);
    for (std::size_t n = 0; n < n_views; ++n) {
      SE3Pose pose = item.poses[n];
      pose.translation /= g.distance;
      const RenderOutput r = render(prims, pose, item.intrinsics, item.background);
      out.render += render_loss(r.color, item.images[n]) / static_cast<double>(n_views);
    }
  }
  return out;
}

double grad_norm(const ParameterStore<float>& params) {
  double sq = 0.0;
  for (const auto& p : params.all()) sq += p.grad.template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  weights.validate();
  if (steps < 0) throw DataError("steps must be non-negative");
  if (batch < 1) throw DataError("batch size must be at least 1");
  if (!(lr > 0)) throw DataError("learning rate must be positive");
  if (warmup < 0) throw DataError("warmup must be non-negative");
  if (!(mono_fraction >= 0 && mono_fraction <= 1)) throw DataError("mono_fraction must lie in [0, 1]");
  if (!(color_weight >= 0) || !(opacity_weight >= 0)) throw DataError("appearance weights must be non-negative");
}

double learning_rate(const TrainConfig& c, long step) {
  if (c.warmup > 0 && step <= c.warmup) return c.lr * static_cast<double>(step) / static_cast<double>(c.warmup);
  const double span = static_cast<double>(std::max(1L, c.steps - c.warmup));
  const double t = std::clamp(static_cast<double>(step - c.warmup) / span, 0.0, 1.0);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  return c.lr * (c.final_lr_ratio + (1.0 - c.final_lr_ratio) * cosine);
}

TrainResult train(const TrainConfig& config, std::span<const DatasetSample> dataset,
                  const std::function<void(const TrainLogEntry&)>& on_step) {
  config.validate();
  Transformer<float> model(config.model);
  model.initialize(config.seed);
  return train(config, std::move(model.params()), dataset, on_step);
}

TrainResult train(const TrainConfig& config, ParameterStore<float> init, std::span<const DatasetSample> dataset,
                  const std::function<void(const TrainLogEntry&)>& on_step) {
  config.validate();
  if (!(init.config() == config.model)) throw DataError("initial parameters do not match the model config");
  if (config.steps > 0 && dataset.empty()) throw DataError("training needs at least one sample");
  for (const auto& s : dataset) {
    if (static_cast<int>(s.views()) > config.model.max_views)
      throw DataError("sample has " + std::to_string(s.views()) + " views, model supports " +
                      std::to_string(config.model.max_views));
    if (s.intrinsics.width != config.model.image_width || s.intrinsics.height != config.model.image_height)
      throw DataError("sample resolution does not match the model config");
  }

  Transformer<float> model(std::move(init));
  AdamW<float> opt(model.params(), config.adam);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& mc = config.model;

  TrainResult result;
  for (long step = 1; step <= config.steps; ++step) {
    auto& params = model.params();
    params.zero_grad();
    TrainLogEntry entry;
    entry.step = step;
    entry.lr = learning_rate(config, step);
    const bool log_render = config.render_every > 0 && step % config.render_every == 0;
    const double inv_batch = 1.0 / config.batch;

    for (int b = 0; b < config.batch; ++b) {
      const auto& sample = dataset[std::uniform_int_distribution<std::size_t>(0, dataset.size() - 1)(rng)];
      const auto ref = std::uniform_int_distribution<std::size_t>(0, sample.views() - 1)(rng);
      const bool mono = unit(rng) < config.mono_fraction;
      const Item item = make_item(sample, ref, mono);

      typename Transformer<float>::Cache cache;
      const nn::Matrix<float> out = model.forward(item.images, &cache);
      const int n_views = static_cast<int>(item.images.size());
      const std::vector<Image> raw =
          unpatchify<float>(out, n_views, mc.image_width, mc.image_height, mc.patch, kGaussianChannels);
      std::vector<Image> grad;
      const ItemLoss l = item_losses(config, step, item, raw, grad, log_render && b == 0);

      entry.l_pos += l.pos * inv_batch;
      entry.l_align += l.align * inv_batch;
      entry.l_color += l.color * inv_batch;
      entry.l_opacity += l.opacity * inv_batch;
      if (b == 0) entry.l_render = l.render;

      nn::Matrix<float> d_out = patchify<float>(grad, mc.patch);
      d_out *= static_cast<float>(inv_batch);
      model.backward(cache, d_out);
    }

    entry.total = total_loss(step, {entry.l_render, entry.l_align, entry.l_pos}, config.weights);
    if (!std::isfinite(entry.total) || !std::isfinite(entry.l_color) || !std::isfinite(entry.l_opacity))
      throw NumericalError("non-finite loss at step " + std::to_string(step));

    if (config.grad_clip > 0) {
      const double norm = grad_norm(params);
      if (!std::isfinite(norm)) throw NumericalError("non-finite gradient at step " + std::to_string(step));
      if (norm > config.grad_clip)
        for (auto& p : params.all()) p.grad *= static_cast<float>(config.grad_clip / norm);
    }
    opt.step(params, entry.lr);

    result.log.push_back(entry);
    if (on_step) on_step(entry);
  }
  result.params = std::move(model.params());
  return result;
}

}  // namespace gsr
