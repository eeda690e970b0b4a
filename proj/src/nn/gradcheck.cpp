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

#include "mtsot/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mtsot/rng.hpp"

namespace mtsot::nn {

nlohmann::ordered_json GradcheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["pass"] = pass;
  nlohmann::ordered_json cls = nlohmann::ordered_json::array();
  for (const auto& c : classes)
    cls.push_back({{"class", param_kind_name(c.kind)},
                   {"elements", c.elements},
                   {"relative_error", c.relative_error},
                   {"max_abs_error", c.max_abs_error},
                   {"pass", c.pass}});
  j["classes"] = std::move(cls);
  return j;
}

GradcheckReport gradient_check(const GradcheckConfig& cfg) {
  ModelConfig mc;
  mc.vocab_size = cfg.vocab_size;
  mc.feature_dim = cfg.feature_dim;
  mc.width = cfg.width;
  mc.heads = cfg.heads;
  mc.encoder_layers = cfg.layers;
  mc.decoder_layers = cfg.layers;
  mc.ffn_mult = 2;
  mc.downsample = 2;
  mc.max_tokens = cfg.labels + 4;
  mc.seed = cfg.seed;
  ToyModel<double> model = build_model<double>(mc);
  insert_adapters(model, AdapterConfig{cfg.bottleneck});

  Rng rng(substream_seed(cfg.seed, 7));
  for (auto& p : model.params)
    for (double& v : p.value)
      v = p.kind == ParamKind::kLayerNorm && p.name.ends_with(".weight") ? 1.0 + 0.3 * rng.normal()
                                                                         : 0.4 * rng.normal();

  FeatureMatrix<double> x{static_cast<std::size_t>(cfg.frames), static_cast<std::size_t>(cfg.feature_dim), {}};
  for (std::size_t i = 0; i < x.frames * x.dim; ++i) x.values.push_back(rng.normal());
  PromptSpec prompt{{0, 1}};
  TokenSequence labels;
  for (int i = 0; i < cfg.labels; ++i)
    labels.push_back(static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(cfg.vocab_size))));

  model.zero_grad();
  teacher_forced_loss(model, x, prompt, labels, true);

  struct Acc {
    std::size_t n = 0;
    double diff2 = 0, a2 = 0, n2 = 0, max_abs = 0;
  };
  std::map<ParamKind, Acc> acc;
  for (auto& p : model.params) {
    Acc& a = acc[p.kind];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double orig = p.value[k];
      p.value[k] = orig + cfg.step;
      const double up = teacher_forced_loss(model, x, prompt, labels, false).loss;
      p.value[k] = orig - cfg.step;
      const double down = teacher_forced_loss(model, x, prompt, labels, false).loss;
      p.value[k] = orig;
      const double numeric = (up - down) / (2 * cfg.step);
      const double analytic = p.grad[k];
      a.n += 1;
      a.diff2 += (analytic - numeric) * (analytic - numeric);
      a.a2 += analytic * analytic;
      a.n2 += numeric * numeric;
      a.max_abs = std::max(a.max_abs, std::abs(analytic - numeric));
    }
  }

  GradcheckReport r;
  r.pass = true;
  for (const auto& [kind, a] : acc) {
    GradcheckClass c;
    c.kind = kind;
    c.elements = a.n;
    const double denom = std::max(std::sqrt(std::max(a.a2, a.n2)), 1e-300);
    c.relative_error = std::sqrt(a.diff2) / denom;
    c.max_abs_error = a.max_abs;
    c.pass = a.a2 > 0 && c.relative_error <= cfg.tolerance;
    r.pass = r.pass && c.pass;
    r.classes.push_back(c);
  }
  return r;
}

}  // namespace mtsot::nn
