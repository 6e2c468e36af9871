#include "gsrecon/nn.hpp"

#include <cmath>
#include <numbers>

namespace gsr::nn {

template <class T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(std::numbers::sqrt2 / 2)));
}

template <class T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(std::numbers::sqrt2 / 2)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  return cdf + x * pdf;
}

template <class T>
Matrix<T> layer_norm(const Matrix<T>& x, const Matrix<T>& gain, LayerNormCache<T>* cache) {
  const auto cols = x.cols();
  Matrix<T> normalized(x.rows(), cols);
  Vector<T> inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mean = x.row(r).mean();
    const auto centered = (x.row(r).array() - mean).eval();
    const T var = centered.square().sum() / static_cast<T>(cols);
    inv_std(r) = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    normalized.row(r) = centered * inv_std(r);
  }
  Matrix<T> y = normalized.array().rowwise() * gain.row(0).array();
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <class T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const Matrix<T>& gain, const LayerNormCache<T>& cache,
                              Matrix<T>& dgain) {
  dgain.row(0) += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  const Matrix<T> dn = dy.array().rowwise() * gain.row(0).array();
  Matrix<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T mean_dn = dn.row(r).mean();
    const T mean_dn_n = (dn.row(r).array() * cache.normalized.row(r).array()).mean();
    dx.row(r) = cache.inv_std(r) *
                (dn.row(r).array() - mean_dn - cache.normalized.row(r).array() * mean_dn_n).matrix();
  }
  return dx;
}

template <class T>
Matrix<T> attention(const Matrix<T>& x, const Matrix<T>& wq, const Matrix<T>& wk, const Matrix<T>& wv,
                    const Matrix<T>& wo, int heads, AttentionCache<T>* cache) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index dh = wq.cols() / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  Matrix<T> q = x * wq;
  Matrix<T> k = x * wk;
  Matrix<T> v = x * wv;
  Matrix<T> context(rows, wq.cols());
  std::vector<Matrix<T>> probs;
  if (cache) probs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const auto qh = q.middleCols(h * dh, dh);
    const auto kh = k.middleCols(h * dh, dh);
    const auto vh = v.middleCols(h * dh, dh);
    Matrix<T> s = (qh * kh.transpose()) * scale;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const T m = s.row(r).maxCoeff();
      s.row(r) = (s.row(r).array() - m).exp().matrix();
      s.row(r) /= s.row(r).sum();
    }
    context.middleCols(h * dh, dh).noalias() = s * vh;
    if (cache) probs.push_back(std::move(s));
  }
  Matrix<T> y = context * wo;
  if (cache) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->context = std::move(context);
    cache->probs = std::move(probs);
  }
  return y;
}

template <class T>
Matrix<T> attention_backward(const Matrix<T>& dy, const Matrix<T>& wq, const Matrix<T>& wk, const Matrix<T>& wv,
                             const Matrix<T>& wo, int heads, const AttentionCache<T>& cache,
                             AttentionGrads<T> grads) {
  const Eigen::Index rows = dy.rows();
  const Eigen::Index dh = wq.cols() / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  grads.wo.noalias() += cache.context.transpose() * dy;
  const Matrix<T> dcontext = dy * wo.transpose();
  Matrix<T> dq(rows, wq.cols()), dk(rows, wk.cols()), dv(rows, wv.cols());
  for (int h = 0; h < heads; ++h) {
    const Matrix<T>& p = cache.probs[static_cast<std::size_t>(h)];
    const auto dctx = dcontext.middleCols(h * dh, dh);
    dv.middleCols(h * dh, dh).noalias() = p.transpose() * dctx;
    Matrix<T> dp = dctx * cache.v.middleCols(h * dh, dh).transpose();
    // softmax backward: ds = p * (dp - rowsum(dp * p))
    const Vector<T> inner = (dp.array() * p.array()).rowwise().sum();
    Matrix<T> ds = (p.array() * (dp.array().colwise() - inner.array())).matrix() * scale;
    dq.middleCols(h * dh, dh).noalias() = ds * cache.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = ds.transpose() * cache.q.middleCols(h * dh, dh);
  }
  grads.wq.noalias() += cache.input.transpose() * dq;
  grads.wk.noalias() += cache.input.transpose() * dk;
  grads.wv.noalias() += cache.input.transpose() * dv;
  Matrix<T> dx = dq * wq.transpose();
  dx.noalias() += dk * wk.transpose();
  dx.noalias() += dv * wv.transpose();
  return dx;
}

template <class T>
Matrix<T> mlp(const Matrix<T>& x, const Matrix<T>& w1, const Matrix<T>& w2, MlpCache<T>* cache) {
  Matrix<T> pre = x * w1;
  const Matrix<T> act = pre.unaryExpr([](T v) { return gelu(v); });
  Matrix<T> y = act * w2;
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
  }
  return y;
}

template <class T>
Matrix<T> mlp_backward(const Matrix<T>& dy, const Matrix<T>& w1, const Matrix<T>& w2, const MlpCache<T>& cache,
                       Matrix<T>& dw1, Matrix<T>& dw2) {
  const Matrix<T> act = cache.pre.unaryExpr([](T v) { return gelu(v); });
  dw2.noalias() += act.transpose() * dy;
  const Matrix<T> dpre =
      ((dy * w2.transpose()).array() * cache.pre.unaryExpr([](T v) { return gelu_grad(v); }).array()).matrix();
  dw1.noalias() += cache.input.transpose() * dpre;
  return dpre * w1.transpose();
}

#define GSR_INSTANTIATE_NN(T)                                                                                 \
  template T gelu<T>(T);                                                                                      \
  template T gelu_grad<T>(T);                                                                                 \
  template Matrix<T> layer_norm<T>(const Matrix<T>&, const Matrix<T>&, LayerNormCache<T>*);                   \
  template Matrix<T> layer_norm_backward<T>(const Matrix<T>&, const Matrix<T>&, const LayerNormCache<T>&,     \
                                            Matrix<T>&);                                                      \
  template Matrix<T> attention<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,     \
                                  const Matrix<T>&, int, AttentionCache<T>*);                                 \
  template Matrix<T> attention_backward<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,              \
                                           const Matrix<T>&, const Matrix<T>&, int, const AttentionCache<T>&, \
                                           AttentionGrads<T>);                                                \
  template Matrix<T> mlp<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, MlpCache<T>*);              \
  template Matrix<T> mlp_backward<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, const MlpCache<T>&, \
                                     Matrix<T>&, Matrix<T>&);

GSR_INSTANTIATE_NN(float)
GSR_INSTANTIATE_NN(double)

#undef GSR_INSTANTIATE_NN

}  // namespace gsr::nn
