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

#include "mtsot/nn/optim.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "mtsot/errors.hpp"

namespace mtsot::nn {

nlohmann::ordered_json AdamWConfig::to_json() const {
  return {{"lr", lr},     {"beta1", beta1},
          {"beta2", beta2}, {"eps", eps},
          {"weight_decay", weight_decay}, {"total_steps", total_steps}};
}

double linear_decay_lr(double lr0, long step, long total) {
  if (total <= 0) return lr0;
  return lr0 * std::max(0.0, 1.0 - static_cast<double>(step) / static_cast<double>(total));
}

template <class T>
AdamWState<T> make_adamw_state(const ToyModel<T>& model) {
  AdamWState<T> s;
  for (const auto& p : model.params) {
    s.m.emplace_back(p.size(), T(0));
    s.v.emplace_back(p.size(), T(0));
  }
  return s;
}

template <class T>
StepStats train_step(ToyModel<T>& model, std::span<const Example<T>> batch,
                     const TrainableMask& mask, AdamWState<T>& state, const AdamWConfig& cfg,
                     long batch_id) {
  std::vector<std::size_t> sizes;
  for (const auto& p : model.params) sizes.push_back(p.size());
  if (!mask.consistent_with(sizes)) throw ConfigError("trainable mask does not match the model");
  if (state.m.size() != model.params.size()) throw ConfigError("optimizer state does not match the model");
  if (batch.empty()) throw ConfigError("empty training batch");

  model.zero_grad();
  StepStats st;
  const T scale = T(1) / static_cast<T>(batch.size());
  for (const Example<T>& ex : batch) {
    const LossResult<T> r = teacher_forced_loss(model, ex.x, ex.prompt, ex.labels, true, scale);
    st.loss += static_cast<double>(r.loss) / static_cast<double>(batch.size());
    st.correct += r.correct;
    st.positions += r.positions;
  }
  if (!std::isfinite(st.loss))
    throw NonFiniteLoss(fmt::format("loss is {}", st.loss), batch_id);
  for (const auto& p : model.params)
    for (T g : p.grad)
      if (!std::isfinite(g))
        throw NonFiniteLoss(fmt::format("non-finite gradient in {}", p.name), batch_id);

  st.lr = linear_decay_lr(cfg.lr, state.step, cfg.total_steps);
  const long t = state.step + 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const auto b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    Param<T>& p = model.params[i];
    const auto& f = mask.flags[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!f[k]) continue;
      const T g = p.grad[k];
      m[k] = b1 * m[k] + (T(1) - b1) * g;
      v[k] = b2 * v[k] + (T(1) - b2) * g * g;
      const double mhat = static_cast<double>(m[k]) / c1;
      const double vhat = static_cast<double>(v[k]) / c2;
      const double upd = mhat / (std::sqrt(vhat) + cfg.eps) +
                         cfg.weight_decay * static_cast<double>(p.value[k]);
      p.value[k] = static_cast<T>(static_cast<double>(p.value[k]) - st.lr * upd);
    }
  }
  state.step = t;
  return st;
}

template AdamWState<float> make_adamw_state(const ToyModel<float>&);
template AdamWState<double> make_adamw_state(const ToyModel<double>&);
template StepStats train_step(ToyModel<float>&, std::span<const Example<float>>,
                              const TrainableMask&, AdamWState<float>&, const AdamWConfig&, long);
template StepStats train_step(ToyModel<double>&, std::span<const Example<double>>,
                              const TrainableMask&, AdamWState<double>&, const AdamWConfig&, long);

}  // namespace mtsot::nn
