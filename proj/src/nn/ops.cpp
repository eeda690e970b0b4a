// Copyright 2026 The mtsot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtsot/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "mtsot/errors.hpp"
#include "mtsot/kernels.hpp"

namespace mtsot::nn {

namespace kn = mtsot::kernels;

const char* param_kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::kFrontend: return "frontend";
    case ParamKind::kEmbedding: return "embedding";
    case ParamKind::kPosition: return "position";
    case ParamKind::kAttention: return "attention";
    case ParamKind::kFeedForward: return "feed_forward";
    case ParamKind::kLayerNorm: return "layer_norm";
    case ParamKind::kAdapter: return "adapter";
  }
  return "unknown";
}

template <class T>
void linear_forward(const Mat<T>& x, const Param<T>& w, const Param<T>& b, Mat<T>& y) {
  if (x.cols != w.cols)
    throw ShapeMismatch(fmt::format("{}: input width {} != {}", w.name, x.cols, w.cols));
  y = Mat<T>(x.rows, w.rows);
  kn::matmul_nt(x.v.data(), w.value.data(), y.v.data(), x.rows, w.rows, w.cols, false);
  for (std::size_t i = 0; i < y.rows; ++i) kn::axpy(T(1), b.value.data(), y.row(i), y.cols);
}

template <class T>
void linear_backward(const Mat<T>& x, const Mat<T>& dy, Param<T>& w, Param<T>& b, Mat<T>& dx) {
  kn::matmul_nn_acc(dy.v.data(), w.value.data(), dx.v.data(), dy.rows, w.cols, w.rows);
  kn::matmul_tn_acc(dy.v.data(), x.v.data(), w.grad.data(), w.rows, w.cols, dy.rows);
  for (std::size_t i = 0; i < dy.rows; ++i) kn::axpy(T(1), dy.row(i), b.grad.data(), dy.cols);
}

template <class T>
void layernorm_forward(const Mat<T>& x, const Param<T>& gamma, const Param<T>& beta, Mat<T>& y,
                       NormCache<T>& cache) {
  const std::size_t d = x.cols;
  if (gamma.size() != d) throw ShapeMismatch(fmt::format("{}: width {} != {}", gamma.name, d, gamma.size()));
  cache.x = x;
  cache.mean.assign(x.rows, T(0));
  cache.rstd.assign(x.rows, T(0));
  y = Mat<T>(x.rows, d);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const T* r = x.row(i);
    T mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += r[j];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (r[j] - mean) * (r[j] - mean);
    var /= static_cast<T>(d);
    const T rstd = T(1) / std::sqrt(var + T(1e-5));
    cache.mean[i] = mean;
    cache.rstd[i] = rstd;
    T* o = y.row(i);
    for (std::size_t j = 0; j < d; ++j)
      o[j] = (r[j] - mean) * rstd * gamma.value[j] + beta.value[j];
  }
}

template <class T>
void layernorm_backward(const Mat<T>& dy, const NormCache<T>& cache, Param<T>& gamma,
                        Param<T>& beta, Mat<T>& dx) {
  const std::size_t d = dy.cols;
  std::vector<T> xhat(d), g(d);
  for (std::size_t i = 0; i < dy.rows; ++i) {
    const T* r = cache.x.row(i);
    const T* go = dy.row(i);
    T sum_g = 0, sum_gx = 0;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[j] = (r[j] - cache.mean[i]) * cache.rstd[i];
      gamma.grad[j] += go[j] * xhat[j];
      beta.grad[j] += go[j];
      g[j] = go[j] * gamma.value[j];
      sum_g += g[j];
      sum_gx += g[j] * xhat[j];
    }
    const T inv_d = T(1) / static_cast<T>(d);
    T* o = dx.row(i);
    for (std::size_t j = 0; j < d; ++j)
      o[j] += cache.rstd[i] * (g[j] - inv_d * sum_g - xhat[j] * inv_d * sum_gx);
  }
}

template <class T>
void gelu_forward(const Mat<T>& x, Mat<T>& y) {
  y = Mat<T>(x.rows, x.cols);
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    const T a = x.v[i];
    y.v[i] = T(0.5) * a * (T(1) + std::erf(a * T(0.70710678118654752440)));
  }
}

template <class T>
void gelu_backward(const Mat<T>& x, const Mat<T>& dy, Mat<T>& dx) {
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    const T a = x.v[i];
    const T cdf = T(0.5) * (T(1) + std::erf(a * T(0.70710678118654752440)));
    const T pdf = std::exp(T(-0.5) * a * a) * T(0.39894228040143267794);
    dx.v[i] += dy.v[i] * (cdf + a * pdf);
  }
}

template <class T>
void softmax_rows(Mat<T>& x) {
  for (std::size_t i = 0; i < x.rows; ++i) {
    T* r = x.row(i);
    const T m = *std::max_element(r, r + x.cols);
    T s = 0;
    for (std::size_t j = 0; j < x.cols; ++j) s += (r[j] = std::exp(r[j] - m));
    for (std::size_t j = 0; j < x.cols; ++j) r[j] /= s;
  }
}

template <class T>
void attention_forward(const Mat<T>& xq, const Mat<T>& xkv, const AttnParams<T>& p,
                       std::size_t heads, bool causal, Mat<T>& y, AttnCache<T>& c) {
  const std::size_t d = p.q_w->rows;
  if (d % heads != 0) throw ShapeMismatch(fmt::format("width {} not divisible by {} heads", d, heads));
  const std::size_t dh = d / heads, nq = xq.rows, nk = xkv.rows;
  c.xq = xq;
  c.xkv = xkv;
  c.heads = heads;
  c.causal = causal;
  linear_forward(xq, *p.q_w, *p.q_b, c.q);
  linear_forward(xkv, *p.k_w, *p.k_b, c.k);
  linear_forward(xkv, *p.v_w, *p.v_b, c.v);
  c.probs.assign(heads * nq * nk, T(0));
  c.ctx = Mat<T>(nq, d);
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<T> s(nk);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < nq; ++i) {
      // Keys visible to query i: all, or j <= i when causal.
      const std::size_t visible = causal ? std::min(i + 1, nk) : nk;
      T m = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < visible; ++j) {
        s[j] = kn::dot(c.q.row(i) + h * dh, c.k.row(j) + h * dh, dh) * scale;
        m = std::max(m, s[j]);
      }
      T z = 0;
      for (std::size_t j = 0; j < visible; ++j) z += (s[j] = std::exp(s[j] - m));
      T* pr = c.probs.data() + (h * nq + i) * nk;
      for (std::size_t j = 0; j < visible; ++j) {
        pr[j] = s[j] / z;
        kn::axpy(pr[j], c.v.row(j) + h * dh, c.ctx.row(i) + h * dh, dh);
      }
    }
  linear_forward(c.ctx, *p.o_w, *p.o_b, y);
}

template <class T>
void attention_backward(const Mat<T>& dy, const AttnCache<T>& c, const AttnParams<T>& p,
                        Mat<T>& dxq, Mat<T>& dxkv) {
  const std::size_t d = p.q_w->rows, heads = c.heads, dh = d / heads;
  const std::size_t nq = c.xq.rows, nk = c.xkv.rows;
  Mat<T> dctx(nq, d), dq(nq, d), dk(nk, d), dv(nk, d);
  linear_backward(c.ctx, dy, *p.o_w, *p.o_b, dctx);
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<T> dp(nk);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < nq; ++i) {
      const std::size_t visible = c.causal ? std::min(i + 1, nk) : nk;
      const T* pr = c.probs.data() + (h * nq + i) * nk;
      const T* g = dctx.row(i) + h * dh;
      T dot_pp = 0;
      for (std::size_t j = 0; j < visible; ++j) {
        dp[j] = kn::dot(g, c.v.row(j) + h * dh, dh);
        kn::axpy(pr[j], g, dv.row(j) + h * dh, dh);
        dot_pp += pr[j] * dp[j];
      }
      for (std::size_t j = 0; j < visible; ++j) {
        const T ds = pr[j] * (dp[j] - dot_pp) * scale;
        kn::axpy(ds, c.k.row(j) + h * dh, dq.row(i) + h * dh, dh);
        kn::axpy(ds, c.q.row(i) + h * dh, dk.row(j) + h * dh, dh);
      }
    }
  linear_backward(c.xq, dq, *p.q_w, *p.q_b, dxq);
  linear_backward(c.xkv, dk, *p.k_w, *p.k_b, dxkv);
  linear_backward(c.xkv, dv, *p.v_w, *p.v_b, dxkv);
}

template <class T>
void adapter_forward(const Mat<T>& z, const AdapterParams<T>& p, Mat<T>& y, AdapterCache<T>& c) {
  if (z.cols != p.down_w->cols)
    throw ShapeMismatch(fmt::format("adapter width {} != {}", z.cols, p.down_w->cols));
  c.z = z;
  linear_forward(z, *p.down_w, *p.down_b, c.h);
  Mat<T> r = c.h;
  for (T& x : r.v) x = std::max(x, T(0));
  linear_forward(r, *p.up_w, *p.up_b, y);
  add_inplace(y, z);
}

template <class T>
void adapter_backward(const Mat<T>& dy, const AdapterCache<T>& c, const AdapterParams<T>& p,
                      Mat<T>& dz) {
  Mat<T> r = c.h;
  for (T& x : r.v) x = std::max(x, T(0));
  Mat<T> dr(r.rows, r.cols);
  linear_backward(r, dy, *p.up_w, *p.up_b, dr);
  for (std::size_t i = 0; i < dr.v.size(); ++i)
    if (c.h.v[i] <= T(0)) dr.v[i] = T(0);
  linear_backward(c.z, dr, *p.down_w, *p.down_b, dz);
  add_inplace(dz, dy);
}

template <class T>
Mat<T> sinusoids(std::size_t n, std::size_t d) {
  Mat<T> out(n, d);
  const std::size_t half = d / 2;
  const double inc = half > 1 ? std::log(10000.0) / static_cast<double>(half - 1) : 0.0;
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < half; ++j) {
      const double a = static_cast<double>(t) * std::exp(-inc * static_cast<double>(j));
      out.at(t, j) = static_cast<T>(std::sin(a));
      out.at(t, half + j) = static_cast<T>(std::cos(a));
    }
  return out;
}

template <class T>
void add_inplace(Mat<T>& y, const Mat<T>& x) {
  kn::axpy(T(1), x.v.data(), y.v.data(), y.v.size());
}

#define MTSOT_INSTANTIATE(T)                                                                    \
  template void linear_forward(const Mat<T>&, const Param<T>&, const Param<T>&, Mat<T>&);      \
  template void linear_backward(const Mat<T>&, const Mat<T>&, Param<T>&, Param<T>&, Mat<T>&);  \
  template void layernorm_forward(const Mat<T>&, const Param<T>&, const Param<T>&, Mat<T>&,    \
                                  NormCache<T>&);                                              \
  template void layernorm_backward(const Mat<T>&, const NormCache<T>&, Param<T>&, Param<T>&,   \
                                   Mat<T>&);                                                   \
  template void gelu_forward(const Mat<T>&, Mat<T>&);                                          \
  template void gelu_backward(const Mat<T>&, const Mat<T>&, Mat<T>&);                          \
  template void softmax_rows(Mat<T>&);                                                         \
  template void attention_forward(const Mat<T>&, const Mat<T>&, const AttnParams<T>&,          \
                                  std::size_t, bool, Mat<T>&, AttnCache<T>&);                  \
  template void attention_backward(const Mat<T>&, const AttnCache<T>&, const AttnParams<T>&,   \
                                   Mat<T>&, Mat<T>&);                                          \
  template void adapter_forward(const Mat<T>&, const AdapterParams<T>&, Mat<T>&,               \
                                AdapterCache<T>&);                                             \
  template void adapter_backward(const Mat<T>&, const AdapterCache<T>&, const AdapterParams<T>&, \
                                 Mat<T>&);                                                     \
  template Mat<T> sinusoids(std::size_t, std::size_t);                                         \
  template void add_inplace(Mat<T>&, const Mat<T>&);

MTSOT_INSTANTIATE(float)
MTSOT_INSTANTIATE(double)
#undef MTSOT_INSTANTIATE

}  // namespace mtsot::nn
