#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsrecon/gsmap.hpp"
#include "gsrecon/image.hpp"
#include "gsrecon/nn.hpp"

namespace gsr {

struct ModelConfig {
  int layers = 2;
  int width = 64;
  int heads = 4;
  int patch = 4;
  int mlp_ratio = 4;
  int image_width = 32;
  int image_height = 32;
  int max_views = 4;
  // Output-head bias: decoded positions start at (0, 0, init_depth), scales at init_scale.
  double init_depth = 2.0;
  double init_scale = 0.045;

  int tokens_per_view() const { return (image_width / patch) * (image_height / patch); }
  int patch_dim() const { return patch * patch * 3; }
  int head_dim() const { return patch * patch * kGaussianChannels; }
  int mlp_width() const { return width * mlp_ratio; }
  /// Throws DataError on indivisible sizes or non-positive dimensions.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Splits each image into row-major p x p patches, flattened pixel-major with channels innermost.
template <class T>
nn::Matrix<T> patchify(std::span<const Image> images, int patch);

/// Inverse of patchify for `views` images of the given size and channel count.
template <class T>
std::vector<Image> unpatchify(const nn::Matrix<T>& tokens, int views, int width, int height, int patch,
                              int channels);

template <class T>
struct Parameter {
  std::string name;
  nn::Matrix<T> value;
  nn::Matrix<T> grad;
  /// Rank-2 weight matrices take weight decay; gains, embeddings vectors and biases do not.
  bool decay = true;
};

/// Learnable tensors of the transformer, each with a same-shape gradient slot.
template <class T>
class ParameterStore {
 public:
  struct BlockSlots {
    std::size_t norm1, wq, wk, wv, wo, norm2, w1, w2;
  };

  ParameterStore() = default;
  explicit ParameterStore(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter<T>>& all() { return params_; }
  const std::vector<Parameter<T>>& all() const { return params_; }
  Parameter<T>& at(std::size_t slot) { return params_[slot]; }
  const Parameter<T>& at(std::size_t slot) const { return params_[slot]; }
  /// Throws DataError for an unknown name.
  Parameter<T>& operator[](std::string_view name);
  const Parameter<T>& operator[](std::string_view name) const;

  void zero_grad();
  std::size_t parameter_count() const;

  std::size_t patch_embed = 0, pos_embed = 0, view_ref = 0, view_src = 0, head_weight = 0, head_bias = 0;
  std::vector<BlockSlots> blocks;

 private:
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols, bool decay);

  ModelConfig config_;
  std::vector<Parameter<T>> params_;
};

/// Single-stream multi-view transformer that maps N images to N raw Gaussian maps.
template <class T>
class Transformer {
 public:
  struct BlockCache {
    nn::LayerNormCache<T> norm1, norm2;
    nn::AttentionCache<T> attn;
    nn::MlpCache<T> mlp;
  };
  struct Cache {
    int views = 0;
    nn::Matrix<T> patches;
    std::vector<BlockCache> blocks;
    nn::Matrix<T> tokens;  // output of the last block
  };

  Transformer() = default;
  explicit Transformer(const ModelConfig& config) : params_(config) {}
  explicit Transformer(ParameterStore<T> params) : params_(std::move(params)) {}

  /// Truncated-normal(0.02) matrices and embeddings, unit gains, and the position/scale head bias.
  void initialize(std::uint64_t seed);

  const ModelConfig& config() const { return params_.config(); }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }

  /// Tokens after patch embedding plus position and view embeddings; view 0 gets the reference
  /// embedding, all others the source embedding.
  nn::Matrix<T> embed(std::span<const Image> images, nn::Matrix<T>* patches) const;

  /// Raw head output, one row of p*p*14 values per token (N * M rows).
  nn::Matrix<T> forward(std::span<const Image> images, Cache* cache = nullptr) const;

  /// Accumulates parameter gradients for dL/d(forward output).
  void backward(const Cache& cache, const nn::Matrix<T>& d_out);

  /// Raw maps as 14-channel images.
  std::vector<Image> predict_raw(std::span<const Image> images) const;
  std::vector<GaussianMap> predict(std::span<const Image> images) const;

 private:
  void check_images(std::span<const Image> images) const;

  ParameterStore<T> params_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// One decoupled-weight-decay Adam update of a single tensor at 1-based step `step`.
template <class T>
void adam_update(nn::Matrix<T>& value, const nn::Matrix<T>& grad, nn::Matrix<T>& m, nn::Matrix<T>& v, long step,
                 double lr, const AdamConfig& config, bool decay);

template <class T>
class AdamW {
 public:
  AdamW(const ParameterStore<T>& params, AdamConfig config);
  void step(ParameterStore<T>& params, double lr);
  long steps() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  long step_ = 0;
  std::vector<nn::Matrix<T>> m_, v_;
};

/// Model weights on disk: `<dir>/manifest.json` (config, names, shapes, offsets, dtype) and
/// `<dir>/params.bin` (concatenated little-endian float32 tensors).
void save_checkpoint(const std::filesystem::path& dir, const ParameterStore<float>& params);
ParameterStore<float> load_checkpoint(const std::filesystem::path& dir);

}  // namespace gsr
