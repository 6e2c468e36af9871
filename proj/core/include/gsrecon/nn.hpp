#pragma once

#include <vector>

#include <Eigen/Core>

namespace gsr::nn {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline constexpr double kLayerNormEps = 1e-5;

// Row-wise LayerNorm with a learned gain and no offset.
template <class T>
struct LayerNormCache {
  Matrix<T> normalized;
  Vector<T> inv_std;
};

template <class T>
Matrix<T> layer_norm(const Matrix<T>& x, const Matrix<T>& gain, LayerNormCache<T>* cache);

/// Returns dL/dx and accumulates dL/dgain.
template <class T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const Matrix<T>& gain, const LayerNormCache<T>& cache,
                              Matrix<T>& dgain);

// Multi-head scaled dot-product self-attention over all rows, bias-free projections.
template <class T>
struct AttentionCache {
  Matrix<T> input, q, k, v, context;
  std::vector<Matrix<T>> probs;  // one rows x rows matrix per head
};

template <class T>
struct AttentionGrads {
  Matrix<T>& wq;
  Matrix<T>& wk;
  Matrix<T>& wv;
  Matrix<T>& wo;
};

template <class T>
Matrix<T> attention(const Matrix<T>& x, const Matrix<T>& wq, const Matrix<T>& wk, const Matrix<T>& wv,
                    const Matrix<T>& wo, int heads, AttentionCache<T>* cache);

template <class T>
Matrix<T> attention_backward(const Matrix<T>& dy, const Matrix<T>& wq, const Matrix<T>& wk, const Matrix<T>& wv,
                             const Matrix<T>& wo, int heads, const AttentionCache<T>& cache,
                             AttentionGrads<T> grads);

// Two-layer GELU MLP without biases.
template <class T>
struct MlpCache {
  Matrix<T> input, pre;
};

template <class T>
Matrix<T> mlp(const Matrix<T>& x, const Matrix<T>& w1, const Matrix<T>& w2, MlpCache<T>* cache);

template <class T>
Matrix<T> mlp_backward(const Matrix<T>& dy, const Matrix<T>& w1, const Matrix<T>& w2, const MlpCache<T>& cache,
                       Matrix<T>& dw1, Matrix<T>& dw2);

/// Exact GELU, x * Phi(x).
template <class T>
T gelu(T x);
template <class T>
T gelu_grad(T x);

}  // namespace gsr::nn
