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

// Central-difference gradient verification in double precision.

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "mtsot/nn/model.hpp"

namespace mtsot::nn {

struct GradcheckConfig {
  int width = 8;
  int heads = 2;
  int layers = 1;  // per side
  int bottleneck = 4;
  int vocab_size = 12;
  int feature_dim = 4;
  int frames = 6;
  int labels = 5;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct GradcheckClass {
  ParamKind kind;
  std::size_t elements = 0;
  /// ||analytic - numeric|| / max(||analytic||, ||numeric||) over the class.
  double relative_error = 0.0;
  double max_abs_error = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  std::vector<GradcheckClass> classes;
  bool pass = false;

  nlohmann::ordered_json to_json() const;
};

/// Builds a small adapter model, randomizes every parameter (adapter
/// up-projections included) and compares the backward pass of the
/// teacher-forced loss with central differences for every element.
GradcheckReport gradient_check(const GradcheckConfig& cfg);

}  // namespace mtsot::nn
