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

#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "mtsot/nn/model.hpp"

namespace mtsot::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  long total_steps = 2000;

  nlohmann::ordered_json to_json() const;
};

/// lr0 * (1 - step / total), floored at zero.
double linear_decay_lr(double lr0, long step, long total);

template <class T>
struct AdamWState {
  std::vector<std::vector<T>> m, v;
  long step = 0;
};

template <class T>
AdamWState<T> make_adamw_state(const ToyModel<T>& model);

template <class T>
struct Example {
  FeatureMatrix<T> x;
  PromptSpec prompt;
  TokenSequence labels;
};

struct StepStats {
  double loss = 0.0;
  double lr = 0.0;
  std::size_t correct = 0;
  std::size_t positions = 0;
};

/// One AdamW step on the mean loss of `batch`. Elements with a false mask
/// flag are never written (no update, no weight decay). Decay is decoupled:
/// p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p).
/// Throws ConfigError for an inconsistent mask and NonFiniteLoss(batch_id)
/// before any write when the loss or a gradient is not finite.
template <class T>
StepStats train_step(ToyModel<T>& model, std::span<const Example<T>> batch,
                     const TrainableMask& mask, AdamWState<T>& state, const AdamWConfig& cfg,
                     long batch_id);

}  // namespace mtsot::nn
