#include "gsrecon/model.hpp"

#include <cmath>
#include <random>

#include "gsrecon/error.hpp"

namespace gsr {

void ModelConfig::validate() const {
  if (layers < 0 || width <= 0 || heads <= 0 || patch <= 0 || mlp_ratio <= 0 || max_views <= 0)
    throw DataError("model dimensions must be positive");
  if (image_width <= 0 || image_height <= 0) throw DataError("image size must be positive");
  if (image_width % patch != 0 || image_height % patch != 0)
    throw DataError("image size " + std::to_string(image_width) + "x" + std::to_string(image_height) +
                    " is not divisible by patch size " + std::to_string(patch));
  if (width % heads != 0)
    throw DataError("model width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) +
                    " heads");
  if (!(init_scale > 0)) throw DataError("initial Gaussian scale must be positive");
}

template <class T>
nn::Matrix<T> patchify(std::span<const Image> images, int patch) {
  if (images.empty()) throw DataError("patchify: no images");
  const int w = images[0].width;
  const int h = images[0].height;
  const int c = images[0].channels;
  if (w % patch != 0 || h % patch != 0)
    throw DataError("patchify: " + std::to_string(w) + "x" + std::to_string(h) + " is not divisible by " +
                    std::to_string(patch));
  const int px = w / patch;
  const int per_view = px * (h / patch);
  nn::Matrix<T> tokens(static_cast<Eigen::Index>(images.size()) * per_view, patch * patch * c);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = images[n];
    if (img.width != w || img.height != h || img.channels != c) throw DataError("patchify: image shapes differ");
    for (int m = 0; m < per_view; ++m) {
      const int ox = (m % px) * patch;
      const int oy = (m / px) * patch;
      auto row = tokens.row(static_cast<Eigen::Index>(n) * per_view + m);
      for (int dy = 0; dy < patch; ++dy)
        for (int dx = 0; dx < patch; ++dx)
          for (int ch = 0; ch < c; ++ch) row((dy * patch + dx) * c + ch) = static_cast<T>(img.at(ox + dx, oy + dy, ch));
    }
  }
  return tokens;
}

template <class T>
std::vector<Image> unpatchify(const nn::Matrix<T>& tokens, int views, int width, int height, int patch,
                              int channels) {
  if (width % patch != 0 || height % patch != 0) throw DataError("unpatchify: indivisible size");
  const int px = width / patch;
  const int per_view = px * (height / patch);
  if (tokens.rows() != static_cast<Eigen::Index>(views) * per_view || tokens.cols() != patch * patch * channels)
    throw DataError("unpatchify: token matrix has the wrong shape");
  std::vector<Image> images(static_cast<std::size_t>(views), Image(width, height, channels));
  for (int n = 0; n < views; ++n) {
    Image& img = images[static_cast<std::size_t>(n)];
    for (int m = 0; m < per_view; ++m) {
      const int ox = (m % px) * patch;
      const int oy = (m / px) * patch;
      const auto row = tokens.row(static_cast<Eigen::Index>(n) * per_view + m);
      for (int dy = 0; dy < patch; ++dy)
        for (int dx = 0; dx < patch; ++dx)
          for (int ch = 0; ch < channels; ++ch)
            img.at(ox + dx, oy + dy, ch) = static_cast<double>(row((dy * patch + dx) * channels + ch));
    }
  }
  return images;
}

template <class T>
ParameterStore<T>::ParameterStore(const ModelConfig& config) : config_(config) {
  config_.validate();
  const int d = config.width;
  patch_embed = add("patch_embed", config.patch_dim(), d, true);
  pos_embed = add("pos_embed", config.tokens_per_view(), d, true);
  view_ref = add("view_embed.ref", 1, d, false);
  view_src = add("view_embed.src", 1, d, false);
  for (int l = 0; l < config.layers; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    BlockSlots b{};
    b.norm1 = add(p + "norm1.gain", 1, d, false);
    b.wq = add(p + "attn.wq", d, d, true);
    b.wk = add(p + "attn.wk", d, d, true);
    b.wv = add(p + "attn.wv", d, d, true);
    b.wo = add(p + "attn.wo", d, d, true);
    b.norm2 = add(p + "norm2.gain", 1, d, false);
    b.w1 = add(p + "mlp.w1", d, config.mlp_width(), true);
    b.w2 = add(p + "mlp.w2", config.mlp_width(), d, true);
    blocks.push_back(b);
  }
  head_weight = add("head.weight", d, config.head_dim(), true);
  head_bias = add("head.bias", 1, config.head_dim(), false);
}

template <class T>
std::size_t ParameterStore<T>::add(std::string name, Eigen::Index rows, Eigen::Index cols, bool decay) {
  params_.push_back({std::move(name), nn::Matrix<T>::Zero(rows, cols), nn::Matrix<T>::Zero(rows, cols), decay});
  return params_.size() - 1;
}

template <class T>
Parameter<T>& ParameterStore<T>::operator[](std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw DataError("unknown parameter '" + std::string(name) + "'");
}

template <class T>
const Parameter<T>& ParameterStore<T>::operator[](std::string_view name) const {
  return const_cast<ParameterStore&>(*this)[name];
}

template <class T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

template <class T>
std::size_t ParameterStore<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

template <class T>
void Transformer<T>::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto trunc_normal = [&](nn::Matrix<T>& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      double v;
      do {
        v = normal(rng);
      } while (std::abs(v) > 2.0);
      m.data()[k] = static_cast<T>(0.02 * v);
    }
  };
  auto& ps = params_;
  for (auto& p : ps.all()) p.grad.setZero();
  trunc_normal(ps.at(ps.patch_embed).value);
  trunc_normal(ps.at(ps.pos_embed).value);
  trunc_normal(ps.at(ps.view_ref).value);
  trunc_normal(ps.at(ps.view_src).value);
  for (const auto& b : ps.blocks) {
    ps.at(b.norm1).value.setOnes();
    ps.at(b.norm2).value.setOnes();
    for (std::size_t slot : {b.wq, b.wk, b.wv, b.wo, b.w1, b.w2}) trunc_normal(ps.at(slot).value);
  }
  trunc_normal(ps.at(ps.head_weight).value);

  auto& bias = ps.at(ps.head_bias).value;
  bias.setZero();
  const int p2 = config().patch * config().patch;
  for (int k = 0; k < p2; ++k) {
    const int base = k * kGaussianChannels;
    bias(0, base + channel::kPosition + 2) = static_cast<T>(config().init_depth);
    bias(0, base + channel::kRotation) = T(1);
    for (int a = 0; a < 3; ++a)
      bias(0, base + channel::kScale + a) = static_cast<T>(inverse_softplus(config().init_scale));
  }
}

template <class T>
void Transformer<T>::check_images(std::span<const Image> images) const {
  const auto& c = config();
  if (images.empty()) throw DataError("model needs at least one image");
  if (static_cast<int>(images.size()) > c.max_views)
    throw DataError("model supports at most " + std::to_string(c.max_views) + " views, got " +
                    std::to_string(images.size()));
  for (const auto& img : images)
    if (img.width != c.image_width || img.height != c.image_height || img.channels != 3)
      throw DataError("model expects " + std::to_string(c.image_width) + "x" + std::to_string(c.image_height) +
                      " RGB images, got " + std::to_string(img.width) + "x" + std::to_string(img.height) + "x" +
                      std::to_string(img.channels));
}

template <class T>
nn::Matrix<T> Transformer<T>::embed(std::span<const Image> images, nn::Matrix<T>* patches_out) const {
  check_images(images);
  const auto& ps = params_;
  nn::Matrix<T> patches = patchify<T>(images, config().patch);
  nn::Matrix<T> x = patches * ps.at(ps.patch_embed).value;
  const int m = config().tokens_per_view();
  const auto& pos = ps.at(ps.pos_embed).value;
  for (std::size_t n = 0; n < images.size(); ++n) {
    const auto& view = ps.at(n == 0 ? ps.view_ref : ps.view_src).value;
    auto rows = x.middleRows(static_cast<Eigen::Index>(n) * m, m);
    rows += pos;
    rows.rowwise() += view.row(0);
  }
  if (patches_out) *patches_out = std::move(patches);
  return x;
}

template <class T>
nn::Matrix<T> Transformer<T>::forward(std::span<const Image> images, Cache* cache) const {
  const auto& ps = params_;
  const int heads = config().heads;
  nn::Matrix<T> x = embed(images, cache ? &cache->patches : nullptr);
  if (cache) {
    cache->views = static_cast<int>(images.size());
    cache->blocks.assign(ps.blocks.size(), BlockCache{});
  }
  for (std::size_t l = 0; l < ps.blocks.size(); ++l) {
    const auto& b = ps.blocks[l];
    BlockCache* bc = cache ? &cache->blocks[l] : nullptr;
    const nn::Matrix<T> a = nn::layer_norm<T>(x, ps.at(b.norm1).value, bc ? &bc->norm1 : nullptr);
    x += nn::attention<T>(a, ps.at(b.wq).value, ps.at(b.wk).value, ps.at(b.wv).value, ps.at(b.wo).value, heads,
                          bc ? &bc->attn : nullptr);
    const nn::Matrix<T> h = nn::layer_norm<T>(x, ps.at(b.norm2).value, bc ? &bc->norm2 : nullptr);
    x += nn::mlp<T>(h, ps.at(b.w1).value, ps.at(b.w2).value, bc ? &bc->mlp : nullptr);
  }
  nn::Matrix<T> out = x * ps.at(ps.head_weight).value;
  out.rowwise() += ps.at(ps.head_bias).value.row(0);
  if (!out.allFinite()) throw NumericalError("transformer produced non-finite outputs");
  if (cache) cache->tokens = std::move(x);
  return out;
}

template <class T>
void Transformer<T>::backward(const Cache& cache, const nn::Matrix<T>& d_out) {
  auto& ps = params_;
  const int heads = config().heads;
  ps.at(ps.head_weight).grad.noalias() += cache.tokens.transpose() * d_out;
  ps.at(ps.head_bias).grad.row(0) += d_out.colwise().sum();
  nn::Matrix<T> dx = d_out * ps.at(ps.head_weight).value.transpose();

  for (std::size_t l = ps.blocks.size(); l-- > 0;) {
    const auto& b = ps.blocks[l];
    const BlockCache& bc = cache.blocks[l];
    {
      const nn::Matrix<T> dh =
          nn::mlp_backward<T>(dx, ps.at(b.w1).value, ps.at(b.w2).value, bc.mlp, ps.at(b.w1).grad, ps.at(b.w2).grad);
      dx += nn::layer_norm_backward<T>(dh, ps.at(b.norm2).value, bc.norm2, ps.at(b.norm2).grad);
    }
    {
      const nn::Matrix<T> da = nn::attention_backward<T>(
          dx, ps.at(b.wq).value, ps.at(b.wk).value, ps.at(b.wv).value, ps.at(b.wo).value, heads, bc.attn,
          {ps.at(b.wq).grad, ps.at(b.wk).grad, ps.at(b.wv).grad, ps.at(b.wo).grad});
      dx += nn::layer_norm_backward<T>(da, ps.at(b.norm1).value, bc.norm1, ps.at(b.norm1).grad);
    }
  }

  const int m = config().tokens_per_view();
  for (int n = 0; n < cache.views; ++n) {
    const auto rows = dx.middleRows(static_cast<Eigen::Index>(n) * m, m);
    ps.at(ps.pos_embed).grad += rows;
    ps.at(n == 0 ? ps.view_ref : ps.view_src).grad.row(0) += rows.colwise().sum();
  }
  ps.at(ps.patch_embed).grad.noalias() += cache.patches.transpose() * dx;
}

template <class T>
std::vector<Image> Transformer<T>::predict_raw(std::span<const Image> images) const {
  const nn::Matrix<T> out = forward(images);
  const auto& c = config();
  return unpatchify<T>(out, static_cast<int>(images.size()), c.image_width, c.image_height, c.patch,
                       kGaussianChannels);
}

template <class T>
std::vector<GaussianMap> Transformer<T>::predict(std::span<const Image> images) const {
  std::vector<GaussianMap> maps;
  for (const Image& raw : predict_raw(images)) maps.push_back(GaussianMap::from_raw(raw.width, raw.height, raw.data));
  return maps;
}

template <class T>
void adam_update(nn::Matrix<T>& value, const nn::Matrix<T>& grad, nn::Matrix<T>& m, nn::Matrix<T>& v, long step,
                 double lr, const AdamConfig& config, bool decay) {
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  if (decay && config.weight_decay != 0.0) value *= static_cast<T>(1.0 - lr * config.weight_decay);
  m = b1 * m + (T(1) - b1) * grad;
  v = b2 * v + (T(1) - b2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  const T step_size = static_cast<T>(lr / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(config.eps);
  value.array() -= step_size * m.array() / ((v.array() * inv_c2).sqrt() + eps);
}

template <class T>
AdamW<T>::AdamW(const ParameterStore<T>& params, AdamConfig config) : config_(config) {
  for (const auto& p : params.all()) {
    m_.push_back(nn::Matrix<T>::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(nn::Matrix<T>::Zero(p.value.rows(), p.value.cols()));
  }
}

template <class T>
void AdamW<T>::step(ParameterStore<T>& params, double lr) {
  ++step_;
  auto& all = params.all();
  for (std::size_t k = 0; k < all.size(); ++k)
    adam_update<T>(all[k].value, all[k].grad, m_[k], v_[k], step_, lr, config_, all[k].decay);
}

#define GSR_INSTANTIATE_MODEL(T)                                                                              \
  template nn::Matrix<T> patchify<T>(std::span<const Image>, int);                                            \
  template std::vector<Image> unpatchify<T>(const nn::Matrix<T>&, int, int, int, int, int);                   \
  template class ParameterStore<T>;                                                                           \
  template class Transformer<T>;                                                                              \
  template void adam_update<T>(nn::Matrix<T>&, const nn::Matrix<T>&, nn::Matrix<T>&, nn::Matrix<T>&, long,    \
                               double, const AdamConfig&, bool);                                              \
  template class AdamW<T>;

GSR_INSTANTIATE_MODEL(float)
GSR_INSTANTIATE_MODEL(double)

#undef GSR_INSTANTIATE_MODEL

}  // namespace gsr
