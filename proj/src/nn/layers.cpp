#include "bevdrive/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "bevdrive/kern/kernels.hpp"

namespace bevdrive::nn {

template <typename T>
void gemm(bool ta, bool tb, int m, int n, int k, T alpha, const T* a, int lda, const T* b,
          int ldb, T beta, T* c, int ldc) {
  if constexpr (std::is_same_v<T, float>) {
    kern::ops().gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
  } else {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int p = 0; p < k; ++p) {
          const T av = ta ? a[static_cast<size_t>(p) * lda + i] : a[static_cast<size_t>(i) * lda + p];
          const T bv = tb ? b[static_cast<size_t>(j) * ldb + p] : b[static_cast<size_t>(p) * ldb + j];
          acc += static_cast<double>(av) * bv;
        }
        T& out = c[static_cast<size_t>(i) * ldc + j];
        out = static_cast<T>(alpha * acc + (beta == T(0) ? 0.0 : static_cast<double>(beta) * out));
      }
    }
  }
}

template void gemm<float>(bool, bool, int, int, int, float, const float*, int, const float*, int,
                          float, float*, int);
template void gemm<double>(bool, bool, int, int, int, double, const double*, int, const double*,
                           int, double, double*, int);

template <typename T>
void softmax_rows(T* data, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    T* row = data + static_cast<size_t>(r) * cols;
    T mx = row[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
    T sum = T(0);
    for (int c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    const T inv = T(1) / sum;
    for (int c = 0; c < cols; ++c) row[c] *= inv;
  }
}

template void softmax_rows<float>(float*, int, int);
template void softmax_rows<double>(double*, int, int);

template <typename T>
void kaiming_uniform(TensorT<T>* t, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  for (T& v : t->data) v = static_cast<T>(rng.uniform(-bound, bound));
}

template void kaiming_uniform<float>(TensorT<float>*, int, Rng&);
template void kaiming_uniform<double>(TensorT<double>*, int, Rng&);

// --------------------------------------------------------------------------
// Conv2d
// --------------------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad)
    : weight({in_ch * kernel * kernel, out_ch}),
      bias({out_ch}),
      grad_weight({in_ch * kernel * kernel, out_ch}),
      grad_bias({out_ch}),
      in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      pad_(pad) {}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
  kaiming_uniform(&weight, in_ch_ * kernel_ * kernel_, rng);
  bias.fill(T(0));
}

template <typename T>
LayerSpec Conv2d<T>::spec() const {
  LayerSpec s{LayerKind::Conv2d};
  s.in_ch = in_ch_;
  s.out_ch = out_ch_;
  s.kernel = kernel_;
  s.stride = stride_;
  s.pad = pad_;
  return s;
}

template <typename T>
void Conv2d<T>::im2col(const T* src, int h, int w, int oh, int ow, T* col) const {
  const int kk = kernel_ * kernel_;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      T* dst = col + (static_cast<size_t>(oy) * ow + ox) * in_ch_ * kk;
      const int y0 = oy * stride_ - pad_;
      const int x0 = ox * stride_ - pad_;
      for (int c = 0; c < in_ch_; ++c) {
        const T* plane = src + static_cast<size_t>(c) * h * w;
        for (int ky = 0; ky < kernel_; ++ky) {
          const int y = y0 + ky;
          for (int kx = 0; kx < kernel_; ++kx) {
            const int x = x0 + kx;
            *dst++ = (y >= 0 && y < h && x >= 0 && x < w)
                         ? plane[static_cast<size_t>(y) * w + x]
                         : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void Conv2d<T>::col2im(const T* col, int h, int w, int oh, int ow, T* dst) const {
  const int kk = kernel_ * kernel_;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const T* src = col + (static_cast<size_t>(oy) * ow + ox) * in_ch_ * kk;
      const int y0 = oy * stride_ - pad_;
      const int x0 = ox * stride_ - pad_;
      for (int c = 0; c < in_ch_; ++c) {
        T* plane = dst + static_cast<size_t>(c) * h * w;
        for (int ky = 0; ky < kernel_; ++ky) {
          const int y = y0 + ky;
          for (int kx = 0; kx < kernel_; ++kx) {
            const int x = x0 + kx;
            if (y >= 0 && y < h && x >= 0 && x < w) {
              plane[static_cast<size_t>(y) * w + x] += *src;
            }
            ++src;
          }
        }
      }
    }
  }
}

template <typename T>
TensorT<T> Conv2d<T>::forward(const TensorT<T>& x) {
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (c != in_ch_) throw std::invalid_argument("conv2d: channel mismatch");
  const int oh = (h + 2 * pad_ - kernel_) / stride_ + 1;
  const int ow = (w + 2 * pad_ - kernel_) / stride_ + 1;
  if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv2d: output collapses");
  cached_input_ = x;

  TensorT<T> out({b, out_ch_, oh, ow});
  const int positions = oh * ow;
  const int ckk = in_ch_ * kernel_ * kernel_;
  std::vector<T> col(static_cast<size_t>(positions) * ckk);
  for (int s = 0; s < b; ++s) {
    const T* src = x.ptr() + static_cast<size_t>(s) * c * h * w;
    T* dst = out.ptr() + static_cast<size_t>(s) * out_ch_ * positions;
    im2col(src, h, w, oh, ow, col.data());
    // (OC, positions) = weight^T (OC, CKK) x col^T (CKK, positions)
    gemm<T>(true, true, out_ch_, positions, ckk, T(1), weight.ptr(), out_ch_, col.data(), ckk,
            T(0), dst, positions);
    for (int oc = 0; oc < out_ch_; ++oc) {
      T* row = dst + static_cast<size_t>(oc) * positions;
      const T bv = bias.data[static_cast<size_t>(oc)];
      for (int p = 0; p < positions; ++p) row[p] += bv;
    }
  }
  return out;
}

template <typename T>
TensorT<T> Conv2d<T>::backward(const TensorT<T>& dy) {
  const TensorT<T>& x = cached_input_;
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int oh = dy.dim(2), ow = dy.dim(3);
  const int positions = oh * ow;
  const int ckk = in_ch_ * kernel_ * kernel_;

  TensorT<T> dx({b, c, h, w});
  std::vector<T> col(static_cast<size_t>(positions) * ckk);
  std::vector<T> dcol(static_cast<size_t>(positions) * ckk);
  for (int s = 0; s < b; ++s) {
    const T* src = x.ptr() + static_cast<size_t>(s) * c * h * w;
    const T* dys = dy.ptr() + static_cast<size_t>(s) * out_ch_ * positions;  // (OC, P)
    im2col(src, h, w, oh, ow, col.data());
    // grad_weight (CKK, OC) += col^T (CKK, P) x dys^T (P, OC)
    gemm<T>(true, true, ckk, out_ch_, positions, T(1), col.data(), ckk, dys, positions, T(1),
            grad_weight.ptr(), out_ch_);
    // dcol (P, CKK) = dys^T (P, OC) x weight^T (OC, CKK)
    gemm<T>(true, true, positions, ckk, out_ch_, T(1), dys, positions, weight.ptr(), out_ch_,
            T(0), dcol.data(), ckk);
    col2im(dcol.data(), h, w, oh, ow, dx.ptr() + static_cast<size_t>(s) * c * h * w);
    for (int oc = 0; oc < out_ch_; ++oc) {
      const T* row = dys + static_cast<size_t>(oc) * positions;
      T acc = T(0);
      for (int p = 0; p < positions; ++p) acc += row[p];
      grad_bias.data[static_cast<size_t>(oc)] += acc;
    }
  }
  return dx;
}

template <typename T>
void Conv2d<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>* out) {
  out->push_back({prefix + ".weight", &weight, &grad_weight});
  out->push_back({prefix + ".bias", &bias, &grad_bias});
}

// --------------------------------------------------------------------------
// Dense
// --------------------------------------------------------------------------

template <typename T>
Dense<T>::Dense(int in_dim, int out_dim)
    : weight({in_dim, out_dim}),
      bias({out_dim}),
      grad_weight({in_dim, out_dim}),
      grad_bias({out_dim}),
      in_dim_(in_dim),
      out_dim_(out_dim) {}

template <typename T>
void Dense<T>::init(Rng& rng) {
  kaiming_uniform(&weight, in_dim_, rng);
  bias.fill(T(0));
}

template <typename T>
LayerSpec Dense<T>::spec() const {
  LayerSpec s{LayerKind::Dense};
  s.in_ch = in_dim_;
  s.out_ch = out_dim_;
  return s;
}

template <typename T>
TensorT<T> Dense<T>::forward(const TensorT<T>& x) {
  const int b = x.dim(0);
  if (x.dim(1) != in_dim_ || x.shape.size() != 2) {
    throw std::invalid_argument("dense: input shape mismatch");
  }
  cached_input_ = x;
  TensorT<T> out({b, out_dim_});
  gemm<T>(false, false, b, out_dim_, in_dim_, T(1), x.ptr(), in_dim_, weight.ptr(), out_dim_,
          T(0), out.ptr(), out_dim_);
  for (int s = 0; s < b; ++s) {
    T* row = out.ptr() + static_cast<size_t>(s) * out_dim_;
    for (int j = 0; j < out_dim_; ++j) row[j] += bias.data[static_cast<size_t>(j)];
  }
  return out;
}

template <typename T>
TensorT<T> Dense<T>::backward(const TensorT<T>& dy) {
  const TensorT<T>& x = cached_input_;
  const int b = x.dim(0);
  TensorT<T> dx({b, in_dim_});
  gemm<T>(false, true, b, in_dim_, out_dim_, T(1), dy.ptr(), out_dim_, weight.ptr(), out_dim_,
          T(0), dx.ptr(), in_dim_);
  gemm<T>(true, false, in_dim_, out_dim_, b, T(1), x.ptr(), in_dim_, dy.ptr(), out_dim_, T(1),
          grad_weight.ptr(), out_dim_);
  for (int s = 0; s < b; ++s) {
    const T* row = dy.ptr() + static_cast<size_t>(s) * out_dim_;
    for (int j = 0; j < out_dim_; ++j) grad_bias.data[static_cast<size_t>(j)] += row[j];
  }
  return dx;
}

template <typename T>
void Dense<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>* out) {
  out->push_back({prefix + ".weight", &weight, &grad_weight});
  out->push_back({prefix + ".bias", &bias, &grad_bias});
}

// --------------------------------------------------------------------------
// Activations / shape ops
// --------------------------------------------------------------------------

template <typename T>
TensorT<T> ReLU<T>::forward(const TensorT<T>& x) {
  cached_input_ = x;
  TensorT<T> out = x;
  for (T& v : out.data) v = v > T(0) ? v : T(0);
  return out;
}

template <typename T>
TensorT<T> ReLU<T>::backward(const TensorT<T>& dy) {
  TensorT<T> dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i) {
    if (cached_input_.data[i] <= T(0)) dx.data[i] = T(0);
  }
  return dx;
}

template <typename T>
TensorT<T> Sigmoid<T>::forward(const TensorT<T>& x) {
  TensorT<T> out = x;
  for (T& v : out.data) v = T(1) / (T(1) + std::exp(-v));
  cached_output_ = out;
  return out;
}

template <typename T>
TensorT<T> Sigmoid<T>::backward(const TensorT<T>& dy) {
  TensorT<T> dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i) {
    const T y = cached_output_.data[i];
    dx.data[i] *= y * (T(1) - y);
  }
  return dx;
}

template <typename T>
TensorT<T> Flatten<T>::forward(const TensorT<T>& x) {
  cached_shape_ = x.shape;
  TensorT<T> out = x;
  out.reshape({x.dim(0), static_cast<int>(x.size()) / x.dim(0)});
  return out;
}

template <typename T>
TensorT<T> Flatten<T>::backward(const TensorT<T>& dy) {
  TensorT<T> dx = dy;
  dx.reshape(cached_shape_);
  return dx;
}

template <typename T>
TensorT<T> AvgPool2d<T>::forward(const TensorT<T>& x) {
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % pool_ != 0 || w % pool_ != 0) throw std::invalid_argument("avgpool: indivisible dims");
  cached_shape_ = x.shape;
  const int oh = h / pool_, ow = w / pool_;
  TensorT<T> out({b, c, oh, ow});
  const T inv = T(1) / static_cast<T>(pool_ * pool_);
  for (int s = 0; s < b * c; ++s) {
    const T* plane = x.ptr() + static_cast<size_t>(s) * h * w;
    T* dst = out.ptr() + static_cast<size_t>(s) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T acc = T(0);
        for (int dy = 0; dy < pool_; ++dy) {
          const T* row = plane + static_cast<size_t>(oy * pool_ + dy) * w + ox * pool_;
          for (int dx = 0; dx < pool_; ++dx) acc += row[dx];
        }
        dst[static_cast<size_t>(oy) * ow + ox] = acc * inv;
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> AvgPool2d<T>::backward(const TensorT<T>& dy) {
  const int b = cached_shape_[0], c = cached_shape_[1], h = cached_shape_[2],
            w = cached_shape_[3];
  const int oh = h / pool_, ow = w / pool_;
  TensorT<T> dx({b, c, h, w});
  const T inv = T(1) / static_cast<T>(pool_ * pool_);
  for (int s = 0; s < b * c; ++s) {
    const T* src = dy.ptr() + static_cast<size_t>(s) * oh * ow;
    T* plane = dx.ptr() + static_cast<size_t>(s) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const T g = src[static_cast<size_t>(oy) * ow + ox] * inv;
        for (int dyk = 0; dyk < pool_; ++dyk) {
          T* row = plane + static_cast<size_t>(oy * pool_ + dyk) * w + ox * pool_;
          for (int dxk = 0; dxk < pool_; ++dxk) row[dxk] += g;
        }
      }
    }
  }
  return dx;
}

template <typename T>
TensorT<T> UpsampleNearest<T>::forward(const TensorT<T>& x) {
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  cached_shape_ = x.shape;
  const int oh = h * factor_, ow = w * factor_;
  TensorT<T> out({b, c, oh, ow});
  for (int s = 0; s < b * c; ++s) {
    const T* plane = x.ptr() + static_cast<size_t>(s) * h * w;
    T* dst = out.ptr() + static_cast<size_t>(s) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      const T* row = plane + static_cast<size_t>(oy / factor_) * w;
      for (int ox = 0; ox < ow; ++ox) {
        dst[static_cast<size_t>(oy) * ow + ox] = row[ox / factor_];
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> UpsampleNearest<T>::backward(const TensorT<T>& dy) {
  const int b = cached_shape_[0], c = cached_shape_[1], h = cached_shape_[2],
            w = cached_shape_[3];
  const int ow = w * factor_;
  TensorT<T> dx({b, c, h, w});
  for (int s = 0; s < b * c; ++s) {
    const T* src = dy.ptr() + static_cast<size_t>(s) * h * factor_ * ow;
    T* plane = dx.ptr() + static_cast<size_t>(s) * h * w;
    for (int oy = 0; oy < h * factor_; ++oy) {
      T* row = plane + static_cast<size_t>(oy / factor_) * w;
      const T* srow = src + static_cast<size_t>(oy) * ow;
      for (int ox = 0; ox < ow; ++ox) row[ox / factor_] += srow[ox];
    }
  }
  return dx;
}

// --------------------------------------------------------------------------
// Attention
// --------------------------------------------------------------------------

namespace {

// Shared core: queries (B, Tq, D) over context (B, Tk, D).
template <typename T>
void attention_forward(const TensorT<T>& q_in, const TensorT<T>& ctx, const TensorT<T>& wq,
                       const TensorT<T>& wk, const TensorT<T>& wv, const TensorT<T>& wo,
                       int heads, TensorT<T>* q, TensorT<T>* k, TensorT<T>* v, TensorT<T>* attn,
                       TensorT<T>* concat, TensorT<T>* out) {
  const int b = q_in.dim(0), tq = q_in.dim(1), d = q_in.dim(2);
  const int tk = ctx.dim(1);
  const int dh = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  *q = TensorT<T>({b, tq, d});
  *k = TensorT<T>({b, tk, d});
  *v = TensorT<T>({b, tk, d});
  *attn = TensorT<T>({b, heads, tq, tk});
  *concat = TensorT<T>({b, tq, d});
  *out = TensorT<T>({b, tq, d});

  for (int s = 0; s < b; ++s) {
    const T* xq = q_in.ptr() + static_cast<size_t>(s) * tq * d;
    const T* xc = ctx.ptr() + static_cast<size_t>(s) * tk * d;
    T* qs = q->ptr() + static_cast<size_t>(s) * tq * d;
    T* ks = k->ptr() + static_cast<size_t>(s) * tk * d;
    T* vs = v->ptr() + static_cast<size_t>(s) * tk * d;
    gemm<T>(false, false, tq, d, d, T(1), xq, d, wq.ptr(), d, T(0), qs, d);
    gemm<T>(false, false, tk, d, d, T(1), xc, d, wk.ptr(), d, T(0), ks, d);
    gemm<T>(false, false, tk, d, d, T(1), xc, d, wv.ptr(), d, T(0), vs, d);
    T* cat = concat->ptr() + static_cast<size_t>(s) * tq * d;
    for (int h = 0; h < heads; ++h) {
      const int off = h * dh;
      T* sc = attn->ptr() + ((static_cast<size_t>(s) * heads + h) * tq) * tk;
      gemm<T>(false, true, tq, tk, dh, scale, qs + off, d, ks + off, d, T(0), sc, tk);
      softmax_rows(sc, tq, tk);
      gemm<T>(false, false, tq, dh, tk, T(1), sc, tk, vs + off, d, T(0), cat + off, d);
    }
    gemm<T>(false, false, tq, d, d, T(1), cat, d, wo.ptr(), d, T(0),
            out->ptr() + static_cast<size_t>(s) * tq * d, d);
  }
}

template <typename T>
void attention_backward(const TensorT<T>& dy, const TensorT<T>& d_attn, const TensorT<T>& q_in,
                        const TensorT<T>& ctx, const TensorT<T>& wq, const TensorT<T>& wk,
                        const TensorT<T>& wv, const TensorT<T>& wo, const TensorT<T>& q,
                        const TensorT<T>& k, const TensorT<T>& v, const TensorT<T>& attn,
                        const TensorT<T>& concat, int heads, TensorT<T>* gwq, TensorT<T>* gwk,
                        TensorT<T>* gwv, TensorT<T>* gwo, TensorT<T>* dq_in, TensorT<T>* dctx) {
  const int b = q_in.dim(0), tq = q_in.dim(1), d = q_in.dim(2);
  const int tk = ctx.dim(1);
  const int dh = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  *dq_in = TensorT<T>({b, tq, d});
  *dctx = TensorT<T>({b, tk, d});
  TensorT<T> dq({b, tq, d}), dk({b, tk, d}), dv({b, tk, d});
  std::vector<T> dcat(static_cast<size_t>(tq) * d);
  std::vector<T> ds(static_cast<size_t>(tq) * tk);

  for (int s = 0; s < b; ++s) {
    const T* dys = dy.ptr() + static_cast<size_t>(s) * tq * d;
    const T* cat = concat.ptr() + static_cast<size_t>(s) * tq * d;
    const T* qs = q.ptr() + static_cast<size_t>(s) * tq * d;
    const T* ks = k.ptr() + static_cast<size_t>(s) * tk * d;
    const T* vs = v.ptr() + static_cast<size_t>(s) * tk * d;
    T* dqs = dq.ptr() + static_cast<size_t>(s) * tq * d;
    T* dks = dk.ptr() + static_cast<size_t>(s) * tk * d;
    T* dvs = dv.ptr() + static_cast<size_t>(s) * tk * d;

    gemm<T>(true, false, d, d, tq, T(1), cat, d, dys, d, T(1), gwo->ptr(), d);
    gemm<T>(false, true, tq, d, d, T(1), dys, d, wo.ptr(), d, T(0), dcat.data(), d);

    for (int h = 0; h < heads; ++h) {
      const int off = h * dh;
      const T* sc = attn.ptr() + ((static_cast<size_t>(s) * heads + h) * tq) * tk;
      // dS = dConcat_h x V_h^T (+ the externally supplied attention gradient)
      gemm<T>(false, true, tq, tk, dh, T(1), dcat.data() + off, d, vs + off, d, T(0), ds.data(),
              tk);
      if (d_attn.size() == attn.size()) {
        const T* da = d_attn.ptr() + ((static_cast<size_t>(s) * heads + h) * tq) * tk;
        for (size_t i = 0; i < ds.size(); ++i) ds[i] += da[i];
      }
      // dV_h += S^T x dConcat_h
      gemm<T>(true, false, tk, dh, tq, T(1), sc, tk, dcat.data() + off, d, T(1), dvs + off, d);
      // softmax backward in place on ds
      for (int r = 0; r < tq; ++r) {
        const T* srow = sc + static_cast<size_t>(r) * tk;
        T* drow = ds.data() + static_cast<size_t>(r) * tk;
        T dot = T(0);
        for (int c2 = 0; c2 < tk; ++c2) dot += srow[c2] * drow[c2];
        for (int c2 = 0; c2 < tk; ++c2) drow[c2] = srow[c2] * (drow[c2] - dot);
      }
      gemm<T>(false, false, tq, dh, tk, scale, ds.data(), tk, ks + off, d, T(1), dqs + off, d);
      gemm<T>(true, false, tk, dh, tq, scale, ds.data(), tk, qs + off, d, T(1), dks + off, d);
    }

    const T* xq = q_in.ptr() + static_cast<size_t>(s) * tq * d;
    const T* xc = ctx.ptr() + static_cast<size_t>(s) * tk * d;
    gemm<T>(true, false, d, d, tq, T(1), xq, d, dqs, d, T(1), gwq->ptr(), d);
    gemm<T>(true, false, d, d, tk, T(1), xc, d, dks, d, T(1), gwk->ptr(), d);
    gemm<T>(true, false, d, d, tk, T(1), xc, d, dvs, d, T(1), gwv->ptr(), d);
    gemm<T>(false, true, tq, d, d, T(1), dqs, d, wq.ptr(), d, T(0),
            dq_in->ptr() + static_cast<size_t>(s) * tq * d, d);
    gemm<T>(false, true, tk, d, d, T(1), dks, d, wk.ptr(), d, T(0),
            dctx->ptr() + static_cast<size_t>(s) * tk * d, d);
    gemm<T>(false, true, tk, d, d, T(1), dvs, d, wv.ptr(), d, T(1),
            dctx->ptr() + static_cast<size_t>(s) * tk * d, d);
  }
}

}  // namespace

template <typename T>
SelfAttention<T>::SelfAttention(int dim, int heads)
    : wq({dim, dim}),
      wk({dim, dim}),
      wv({dim, dim}),
      wo({dim, dim}),
      grad_wq({dim, dim}),
      grad_wk({dim, dim}),
      grad_wv({dim, dim}),
      grad_wo({dim, dim}),
      dim_(dim),
      heads_(heads) {
  if (dim % heads != 0) throw std::invalid_argument("attention: dim % heads != 0");
}

template <typename T>
void SelfAttention<T>::init(Rng& rng) {
  for (auto* w : {&wq, &wk, &wv, &wo}) kaiming_uniform(w, dim_, rng);
}

template <typename T>
LayerSpec SelfAttention<T>::spec() const {
  LayerSpec s{LayerKind::SelfAttention};
  s.dim = dim_;
  s.heads = heads_;
  return s;
}

template <typename T>
TensorT<T> SelfAttention<T>::forward(const TensorT<T>& x) {
  cached_x_ = x;
  TensorT<T> out;
  attention_forward(x, x, wq, wk, wv, wo, heads_, &q_, &k_, &v_, &attn_, &concat_, &out);
  return out;
}

template <typename T>
TensorT<T> SelfAttention<T>::backward(const TensorT<T>& dy) {
  TensorT<T> dq_in, dctx;
  TensorT<T> no_dattn;
  attention_backward(dy, no_dattn, cached_x_, cached_x_, wq, wk, wv, wo, q_, k_, v_, attn_,
                     concat_, heads_, &grad_wq, &grad_wk, &grad_wv, &grad_wo, &dq_in, &dctx);
  for (size_t i = 0; i < dq_in.data.size(); ++i) dq_in.data[i] += dctx.data[i];
  return dq_in;
}

template <typename T>
void SelfAttention<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>* out) {
  out->push_back({prefix + ".wq", &wq, &grad_wq});
  out->push_back({prefix + ".wk", &wk, &grad_wk});
  out->push_back({prefix + ".wv", &wv, &grad_wv});
  out->push_back({prefix + ".wo", &wo, &grad_wo});
}

template <typename T>
CrossAttention<T>::CrossAttention(int dim, int heads)
    : wq({dim, dim}),
      wk({dim, dim}),
      wv({dim, dim}),
      wo({dim, dim}),
      grad_wq({dim, dim}),
      grad_wk({dim, dim}),
      grad_wv({dim, dim}),
      grad_wo({dim, dim}),
      dim_(dim),
      heads_(heads) {
  if (dim % heads != 0) throw std::invalid_argument("attention: dim % heads != 0");
}

template <typename T>
void CrossAttention<T>::init(Rng& rng) {
  for (auto* w : {&wq, &wk, &wv, &wo}) kaiming_uniform(w, dim_, rng);
}

template <typename T>
LayerSpec CrossAttention<T>::spec() const {
  LayerSpec s{LayerKind::CrossAttention};
  s.dim = dim_;
  s.heads = heads_;
  return s;
}

template <typename T>
TensorT<T> CrossAttention<T>::forward(const TensorT<T>& queries, const TensorT<T>& context) {
  if (queries.dim(2) != context.dim(2)) throw std::invalid_argument("cross attention: width mismatch");
  cached_q_in_ = queries;
  cached_ctx_ = context;
  TensorT<T> out;
  attention_forward(queries, context, wq, wk, wv, wo, heads_, &q_, &k_, &v_, &attn_, &concat_,
                    &out);
  return out;
}

template <typename T>
std::pair<TensorT<T>, TensorT<T>> CrossAttention<T>::backward(const TensorT<T>& dy,
                                                              const TensorT<T>& d_attn) {
  TensorT<T> dq_in, dctx;
  attention_backward(dy, d_attn, cached_q_in_, cached_ctx_, wq, wk, wv, wo, q_, k_, v_, attn_,
                     concat_, heads_, &grad_wq, &grad_wk, &grad_wv, &grad_wo, &dq_in, &dctx);
  return {std::move(dq_in), std::move(dctx)};
}

template <typename T>
void CrossAttention<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>* out) {
  out->push_back({prefix + ".wq", &wq, &grad_wq});
  out->push_back({prefix + ".wk", &wk, &grad_wk});
  out->push_back({prefix + ".wv", &wv, &grad_wv});
  out->push_back({prefix + ".wo", &wo, &grad_wo});
}

template <typename T>
TensorT<T> scaled_dot_attention(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                                int heads) {
  const int b = q.dim(0), tq = q.dim(1), d = q.dim(2);
  const int tk = k.dim(1);
  if (k.dim(2) != d || v.dim(2) != d) throw std::invalid_argument("attention: width mismatch");
  if (v.dim(1) != tk) throw std::invalid_argument("attention: key/value count mismatch");
  const int dh = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  TensorT<T> out({b, tq, d});
  std::vector<T> scores(static_cast<size_t>(tq) * tk);
  for (int s = 0; s < b; ++s) {
    const T* qs = q.ptr() + static_cast<size_t>(s) * tq * d;
    const T* ks = k.ptr() + static_cast<size_t>(s) * tk * d;
    const T* vs = v.ptr() + static_cast<size_t>(s) * tk * d;
    T* os = out.ptr() + static_cast<size_t>(s) * tq * d;
    for (int h = 0; h < heads; ++h) {
      const int off = h * dh;
      gemm<T>(false, true, tq, tk, dh, scale, qs + off, d, ks + off, d, T(0), scores.data(), tk);
      softmax_rows(scores.data(), tq, tk);
      gemm<T>(false, false, tq, dh, tk, T(1), scores.data(), tk, vs + off, d, T(0), os + off, d);
    }
  }
  return out;
}

template TensorT<float> scaled_dot_attention<float>(const TensorT<float>&, const TensorT<float>&,
                                                    const TensorT<float>&, int);
template TensorT<double> scaled_dot_attention<double>(const TensorT<double>&,
                                                      const TensorT<double>&,
                                                      const TensorT<double>&, int);

template class Conv2d<float>;
template class Conv2d<double>;
template class Dense<float>;
template class Dense<double>;
template class ReLU<float>;
template class ReLU<double>;
template class Sigmoid<float>;
template class Sigmoid<double>;
template class Flatten<float>;
template class Flatten<double>;
template class AvgPool2d<float>;
template class AvgPool2d<double>;
template class UpsampleNearest<float>;
template class UpsampleNearest<double>;
template class SelfAttention<float>;
template class SelfAttention<double>;
template class CrossAttention<float>;
template class CrossAttention<double>;

}  // namespace bevdrive::nn
