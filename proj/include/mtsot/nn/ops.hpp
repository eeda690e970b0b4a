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

// Layer primitives with hand-written backward passes. Activations are
// row-major matrices with one row per time step. Backward functions
// accumulate into parameter grads and into the input-gradient matrix.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mtsot::nn {

template <class T>
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, T(0)) {}

  T* row(std::size_t i) { return v.data() + i * cols; }
  const T* row(std::size_t i) const { return v.data() + i * cols; }
  T& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  T at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

enum class ParamKind { kFrontend, kEmbedding, kPosition, kAttention, kFeedForward, kLayerNorm, kAdapter };
const char* param_kind_name(ParamKind k);

/// Named parameter tensor (rows x cols, row-major) with its gradient.
template <class T>
struct Param {
  std::string name;
  ParamKind kind = ParamKind::kFrontend;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> value;
  std::vector<T> grad;

  std::size_t size() const { return value.size(); }
};

// y = x W^T + b with W: out x in.
template <class T>
void linear_forward(const Mat<T>& x, const Param<T>& w, const Param<T>& b, Mat<T>& y);
template <class T>
void linear_backward(const Mat<T>& x, const Mat<T>& dy, Param<T>& w, Param<T>& b, Mat<T>& dx);

template <class T>
struct NormCache {
  Mat<T> x;
  std::vector<T> mean, rstd;
};
template <class T>
void layernorm_forward(const Mat<T>& x, const Param<T>& gamma, const Param<T>& beta, Mat<T>& y,
                       NormCache<T>& cache);
template <class T>
void layernorm_backward(const Mat<T>& dy, const NormCache<T>& cache, Param<T>& gamma,
                        Param<T>& beta, Mat<T>& dx);

/// Exact (erf) GELU.
template <class T>
void gelu_forward(const Mat<T>& x, Mat<T>& y);
template <class T>
void gelu_backward(const Mat<T>& x, const Mat<T>& dy, Mat<T>& dx);

template <class T>
struct AttnParams {
  Param<T>*q_w, *q_b, *k_w, *k_b, *v_w, *v_b, *o_w, *o_b;
};

template <class T>
struct AttnCache {
  Mat<T> xq, xkv, q, k, v, ctx;
  std::vector<T> probs;  // heads x nq x nk
  std::size_t heads = 1;
  bool causal = false;
};

/// Multi-head scaled dot-product attention of xq over xkv. Causal masking
/// hides keys j > i.
template <class T>
void attention_forward(const Mat<T>& xq, const Mat<T>& xkv, const AttnParams<T>& p,
                       std::size_t heads, bool causal, Mat<T>& y, AttnCache<T>& cache);
template <class T>
void attention_backward(const Mat<T>& dy, const AttnCache<T>& cache, const AttnParams<T>& p,
                        Mat<T>& dxq, Mat<T>& dxkv);

template <class T>
struct AdapterParams {
  Param<T>*down_w, *down_b, *up_w, *up_b;
};

template <class T>
struct AdapterCache {
  Mat<T> z, h;  // input and pre-activation bottleneck
};

/// y = z + U relu(D z + b_D) + b_U, row-wise.
template <class T>
void adapter_forward(const Mat<T>& z, const AdapterParams<T>& p, Mat<T>& y, AdapterCache<T>& cache);
template <class T>
void adapter_backward(const Mat<T>& dy, const AdapterCache<T>& cache, const AdapterParams<T>& p,
                      Mat<T>& dz);

/// Row-wise softmax in place.
template <class T>
void softmax_rows(Mat<T>& x);

/// Sinusoidal position table (n x d): first half sin, second half cos.
template <class T>
Mat<T> sinusoids(std::size_t n, std::size_t d);

template <class T>
void add_inplace(Mat<T>& y, const Mat<T>& x);

}  // namespace mtsot::nn
