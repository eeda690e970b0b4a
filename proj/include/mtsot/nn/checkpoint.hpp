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

// Checkpoint file layout (little-endian):
//   "MTSOTCKP"            8-byte magic
//   u32 version           currently 1
//   u64 header_bytes      length of the JSON header
//   header                {"model": ModelConfig, "adapters": {"bottleneck"} | null,
//                          "tensors": [{"name", "kind", "shape": [rows, cols]}],
//                          "extra": any}
//   float32 values        every tensor in header order, row-major
//   u8 mask flags         one byte per element, same order

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mtsot/nn/model.hpp"

namespace mtsot::nn {

struct Checkpoint {
  ToyModel<float> model;
  TrainableMask mask;
  nlohmann::json extra;
};

void save_checkpoint(const std::filesystem::path& path, const ToyModel<float>& model,
                     const TrainableMask& mask, const nlohmann::json& extra = nullptr);
/// Throws FormatError on a malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of the raw value bytes of every element whose mask
/// flag is false, in parameter order.
template <class T>
std::string frozen_digest(const ToyModel<T>& model, const TrainableMask& mask);

/// SHA-256 over all parameter values.
template <class T>
std::string model_digest(const ToyModel<T>& model);

}  // namespace mtsot::nn
