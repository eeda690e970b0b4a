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

// Vector kernels with a scalar reference implementation and SIMD variants
// (AVX2+FMA on x86-64, NEON on AArch64) chosen once at runtime.
//
// The backend can be forced with MTSOT_KERNELS=scalar|avx2|neon or
// set_backend(). Results of different backends agree to rounding error only
// (the SIMD variants reassociate sums and use fused multiply-add).

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace mtsot::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  float (*dot_f32)(const float* a, const float* b, std::size_t n);
  double (*dot_f64)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy_f32)(float alpha, const float* x, float* y, std::size_t n);
  void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);
};

namespace scalar {
const KernelTable& table();
}
namespace avx2 {
const KernelTable& table();
}
namespace neon {
const KernelTable& table();
}

const char* backend_name(Backend b);
Backend parse_backend(std::string_view name);

/// Compiled in and supported by the running CPU.
bool backend_supported(Backend b);
/// Best supported backend, unless MTSOT_KERNELS overrides it.
Backend default_backend();

Backend active_backend();
/// Throws ConfigError if `b` is not supported.
void set_backend(Backend b);
const KernelTable& table(Backend b);
const KernelTable& active();

inline float dot(const float* a, const float* b, std::size_t n) { return active().dot_f32(a, b, n); }
inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot_f64(a, b, n);
}
inline void axpy(float alpha, const float* x, float* y, std::size_t n) {
  active().axpy_f32(alpha, x, y, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy_f64(alpha, x, y, n);
}

/// Row-major products built from dot/axpy.
/// C[m x n] (+)= A[m x k] * B[n x k]^T
template <class T>
void matmul_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k,
               bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const T v = dot(a + i * k, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
    }
}

/// C[m x n] += A[m x k] * B[k x n]
template <class T>
void matmul_nn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const T s = a[i * k + p];
      if (s != T(0)) axpy(s, b + p * n, c + i * n, n);
    }
}

/// C[m x n] += A[k x m]^T * B[k x n]
template <class T>
void matmul_tn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t i = 0; i < m; ++i) {
      const T s = a[p * m + i];
      if (s != T(0)) axpy(s, b + p * n, c + i * n, n);
    }
}

}  // namespace mtsot::kernels
