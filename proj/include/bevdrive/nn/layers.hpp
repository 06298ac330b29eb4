#pragma once

#include <string>
#include <vector>

#include "bevdrive/nn/tensor.hpp"
#include "bevdrive/rng.hpp"

namespace bevdrive::nn {

enum class LayerKind : uint8_t {
  Conv2d = 0,
  Dense = 1,
  ReLU = 2,
  SelfAttention = 3,
  CrossAttention = 4,
  Sigmoid = 5,
  Flatten = 6,
  AvgPool = 7,
  Upsample = 8,
};

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int in_ch = 0, out_ch = 0;
  int kernel = 0, stride = 1, pad = 0;
  int dim = 0, heads = 1;
  int pool = 1;
};

// Typed gemm: float goes through the dispatched kernels, double through a
// plain loop (only used by the 64-bit gradient-check mode).
template <typename T>
void gemm(bool ta, bool tb, int m, int n, int k, T alpha, const T* a, int lda, const T* b,
          int ldb, T beta, T* c, int ldc);

template <typename T>
void softmax_rows(T* data, int rows, int cols);

// ---------------------------------------------------------------------------
// Layers. Each owns its parameters and gradient buffers, caches what backward
// needs, and accumulates parameter gradients on backward.
// ---------------------------------------------------------------------------

template <typename T>
class Conv2d {
 public:
  Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad);
  void init(Rng& rng);

  TensorT<T> forward(const TensorT<T>& x);   // (B, C, H, W) -> (B, OC, OH, OW)
  TensorT<T> backward(const TensorT<T>& dy);
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>* out);
  LayerSpec spec() const;

  TensorT<T> weight;  // (C*K*K, OC)
  TensorT<T> bias;    // (OC)
  TensorT<T> grad_weight, grad_bias;

 private:
  void im2col(const T* src, int h, int w, int oh, int ow, T* col) const;
  void col2im(const T* col, int h, int w, int oh, int ow, T* dst) const;
  int in_ch_, out_ch_, kernel_, stride_, pad_;
  TensorT<T> cached_input_;
};

template <typename T>
class Dense {
 public:
  Dense(int in_dim, int out_dim);
  void init(Rng& rng);

  TensorT<T> forward(const TensorT<T>& x);   // (B, In) -> (B, Out)
  TensorT<T> backward(const TensorT<T>& dy);
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>* out);
  LayerSpec spec() const;

  TensorT<T> weight;  // (In, Out)
  TensorT<T> bias;    // (Out)
  TensorT<T> grad_weight, grad_bias;

 private:
  int in_dim_, out_dim_;
  TensorT<T> cached_input_;
};

template <typename T>
class ReLU {
 public:
  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& dy);
  LayerSpec spec() const { return {LayerKind::ReLU}; }

 private:
  TensorT<T> cached_input_;
};

template <typename T>
class Sigmoid {
 public:
  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& dy);
  LayerSpec spec() const { return {LayerKind::Sigmoid}; }

 private:
  TensorT<T> cached_output_;
};

template <typename T>
class Flatten {
 public:
  TensorT<T> forward(const TensorT<T>& x);  // (B, ...) -> (B, N)
  TensorT<T> backward(const TensorT<T>& dy);
  LayerSpec spec() const { return {LayerKind::Flatten}; }

 private:
  std::vector<int> cached_shape_;
};

template <typename T>
class AvgPool2d {
 public:
  explicit AvgPool2d(int pool) : pool_(pool) {}
  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& dy);
  LayerSpec spec() const {
    LayerSpec s{LayerKind::AvgPool};
    s.pool = pool_;
    return s;
  }

 private:
  int pool_;
  std::vector<int> cached_shape_;
};

template <typename T>
class UpsampleNearest {
 public:
  explicit UpsampleNearest(int factor) : factor_(factor) {}
  TensorT<T> forward(const TensorT<T>& x);
  TensorT<T> backward(const TensorT<T>& dy);
  LayerSpec spec() const {
    LayerSpec s{LayerKind::Upsample};
    s.pool = factor_;
    return s;
  }

 private:
  int factor_;
  std::vector<int> cached_shape_;
};

// Scaled dot-product attention over (B, T, D) tokens, h heads, no biases.
template <typename T>
class SelfAttention {
 public:
  SelfAttention(int dim, int heads);
  void init(Rng& rng);

  TensorT<T> forward(const TensorT<T>& x);   // (B, T, D) -> (B, T, D)
  TensorT<T> backward(const TensorT<T>& dy);
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>* out);
  LayerSpec spec() const;

  TensorT<T> wq, wk, wv, wo;  // (D, D) each
  TensorT<T> grad_wq, grad_wk, grad_wv, grad_wo;

 private:
  int dim_, heads_;
  TensorT<T> cached_x_, q_, k_, v_, attn_, concat_;
};

// Cross attention: queries (B, Tq, D) attend over context (B, Tk, D).
// The post-softmax attention maps (B, h, Tq, Tk) are exposed so downstream
// heads can consume them; their gradient joins backward via d_attn.
template <typename T>
class CrossAttention {
 public:
  CrossAttention(int dim, int heads);
  void init(Rng& rng);

  TensorT<T> forward(const TensorT<T>& queries, const TensorT<T>& context);
  // Returns (d_queries, d_context). d_attn may be empty.
  std::pair<TensorT<T>, TensorT<T>> backward(const TensorT<T>& dy, const TensorT<T>& d_attn);
  const TensorT<T>& attention() const { return attn_; }  // (B, h, Tq, Tk)
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>* out);
  LayerSpec spec() const;

  TensorT<T> wq, wk, wv, wo;
  TensorT<T> grad_wq, grad_wk, grad_wv, grad_wo;

 private:
  int dim_, heads_;
  TensorT<T> cached_q_in_, cached_ctx_, q_, k_, v_, attn_, concat_;
};

template <typename T>
void kaiming_uniform(TensorT<T>* t, int fan_in, Rng& rng);

// Bare scaled dot-product attention (no projections): softmax(q k^T / sqrt(dh)) v
// over (B, T, D) tensors split into heads.
template <typename T>
TensorT<T> scaled_dot_attention(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                                int heads = 1);

}  // namespace bevdrive::nn
