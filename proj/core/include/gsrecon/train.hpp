#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gsrecon/losses.hpp"
#include "gsrecon/model.hpp"
#include "gsrecon/synth.hpp"

namespace gsr {

struct TrainConfig {
  ModelConfig model;
  LossWeights weights;
  AdamConfig adam;
  long steps = 5000;
  int batch = 4;
  double lr = 1e-3;
  long warmup = 200;
  double final_lr_ratio = 0.05;  // cosine decay ends at lr * final_lr_ratio
  double grad_clip = 1.0;        // global gradient-norm clip; non-positive disables
  std::uint64_t seed = 0;
  /// Fraction of batch items trained as a single view, which feeds the monocular focal path.
  double mono_fraction = 0.25;
  /// Per-pixel supervision of the appearance channels: color against the input pixel (MSE) and
  /// opacity against the foreground mask (binary cross-entropy).
  double color_weight = 1.0;
  double opacity_weight = 0.1;
  /// Render loss is evaluated (forward only) every `render_every` steps; 0 disables it.
  long render_every = 1;

  void validate() const;
};

struct TrainLogEntry {
  long step = 0;
  double lr = 0.0;
  double l_pos = 0.0;
  double l_align = 0.0;
  double l_render = 0.0;
  double l_color = 0.0;
  double l_opacity = 0.0;
  double total = 0.0;
};

struct TrainResult {
  ParameterStore<float> params;
  std::vector<TrainLogEntry> log;
};

/// Learning rate at 1-based `step`: linear warmup then cosine decay.
double learning_rate(const TrainConfig& config, long step);

/// Staged training of a freshly initialized transformer. Each batch item picks a sample, a random
/// reference view (the others follow in cyclic order, ground truth re-expressed in its frame) and,
/// with probability mono_fraction, keeps only that view. Throws NumericalError on a non-finite loss.
TrainResult train(const TrainConfig& config, std::span<const DatasetSample> dataset,
                  const std::function<void(const TrainLogEntry&)>& on_step = {});

/// Same, continuing from given parameters.
TrainResult train(const TrainConfig& config, ParameterStore<float> init, std::span<const DatasetSample> dataset,
                  const std::function<void(const TrainLogEntry&)>& on_step = {});

}  // namespace gsr
