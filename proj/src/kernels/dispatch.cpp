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

#include <atomic>
#include <cstdlib>
#include <string>

#include <fmt/core.h>

#include "mtsot/errors.hpp"
#include "mtsot/kernels.hpp"

namespace mtsot::kernels {

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "scalar";
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  if (name == "neon") return Backend::kNeon;
  throw ConfigError(fmt::format("unknown kernel backend '{}'", name));
}

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(MTSOT_HAVE_AVX2) && defined(__x86_64__)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::kNeon:
#if defined(__aarch64__) && defined(__ARM_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend default_backend() {
  if (const char* env = std::getenv("MTSOT_KERNELS"); env && *env) {
    const Backend b = parse_backend(env);
    if (!backend_supported(b))
      throw ConfigError(fmt::format("kernel backend '{}' not supported here", env));
    return b;
  }
  if (backend_supported(Backend::kAvx2)) return Backend::kAvx2;
  if (backend_supported(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

const KernelTable& table(Backend b) {
  switch (b) {
    case Backend::kAvx2: return avx2::table();
    case Backend::kNeon: return neon::table();
    default: return scalar::table();
  }
}

namespace {

struct State {
  std::atomic<const KernelTable*> table;
  std::atomic<Backend> backend;
  State() {
    const Backend b = default_backend();
    backend.store(b);
    table.store(&kernels::table(b));
  }
};

State& state() {
  static State s;
  return s;
}

}  // namespace

Backend active_backend() { return state().backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_supported(b))
    throw ConfigError(fmt::format("kernel backend '{}' not supported here", backend_name(b)));
  state().backend.store(b);
  state().table.store(&table(b));
}

const KernelTable& active() { return *state().table.load(std::memory_order_relaxed); }

}  // namespace mtsot::kernels
