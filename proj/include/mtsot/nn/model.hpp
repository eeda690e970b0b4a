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

// Toy attention encoder-decoder with optional bottleneck adapters.
//
// Encoder: frame stacking by `downsample`, Linear + GELU, sinusoidal
// positions, pre-norm blocks (self-attention, feed-forward), final norm.
// Decoder: token + learned position embeddings, pre-norm blocks (causal
// self-attention, cross-attention, feed-forward), final norm, logits tied
// to the token embedding.
//
// Adapters sit on the outputs of the self-attention and feed-forward
// sublayers before the residual sum; cross-attention has none.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtsot/core.hpp"
#include "mtsot/nn/ops.hpp"
#include "mtsot/sot_codec.hpp"

namespace mtsot::nn {

struct ModelConfig {
  int vocab_size = 0;
  int feature_dim = 0;
  int width = 64;
  int heads = 4;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int ffn_mult = 4;
  int downsample = 2;
  int max_tokens = 64;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct AdapterConfig {
  int bottleneck = 16;
};

/// Closed-form parameter count added by insert_adapters: 2 L (2 d b + d + b)
/// with L the total number of blocks.
std::size_t adapter_parameter_count(const ModelConfig& cfg, const AdapterConfig& ad);

/// frames x dim, frame-major.
template <class T>
struct FeatureMatrix {
  std::size_t frames = 0;
  std::size_t dim = 0;
  std::vector<T> values;

  T& at(std::size_t t, std::size_t k) { return values[t * dim + k]; }
};

struct LinearIx { std::size_t w, b; };
struct NormIx { std::size_t g, b; };
struct AttnIx { LinearIx q, k, v, o; };
struct AdapterIx { std::size_t down_w, down_b, up_w, up_b; };

struct EncoderBlockIx {
  NormIx ln1;
  AttnIx attn;
  std::optional<AdapterIx> adapter_attn;
  NormIx ln2;
  LinearIx fc1, fc2;
  std::optional<AdapterIx> adapter_ffn;
};

struct DecoderBlockIx {
  NormIx ln1;
  AttnIx self_attn;
  std::optional<AdapterIx> adapter_attn;
  NormIx ln2;
  AttnIx cross_attn;
  NormIx ln3;
  LinearIx fc1, fc2;
  std::optional<AdapterIx> adapter_ffn;
};

template <class T>
class ToyModel {
 public:
  ModelConfig config;
  std::optional<AdapterConfig> adapters;
  std::vector<Param<T>> params;

  LinearIx frontend{};
  std::vector<EncoderBlockIx> encoder;
  NormIx encoder_ln{};
  std::size_t token_embedding = 0;
  std::size_t position_embedding = 0;
  std::vector<DecoderBlockIx> decoder;
  NormIx decoder_ln{};

  std::size_t parameter_count() const;
  std::optional<std::size_t> find(const std::string& name) const;
  void zero_grad();
  std::size_t width() const { return static_cast<std::size_t>(config.width); }
};

/// Random initialization from config.seed. Throws ConfigError.
template <class T>
ToyModel<T> build_model(const ModelConfig& cfg);

/// Two adapters per block with U = 0, b_U = 0, b_D = 0 and D ~ N(0, 1/width);
/// the model output is unchanged. Throws ConfigError if adapters exist.
template <class T>
void insert_adapters(ToyModel<T>& model, const AdapterConfig& ad);

/// Per-element trainable flags, parallel to model.params.
struct TrainableMask {
  std::vector<std::vector<std::uint8_t>> flags;

  std::size_t trainable() const;
  bool consistent_with(const std::vector<std::size_t>& sizes) const;
};

template <class T>
TrainableMask full_mask(const ToyModel<T>& model);
template <class T>
TrainableMask frozen_mask(const ToyModel<T>& model);
/// Adapters, every layer norm and the <sc> row of the token embedding.
template <class T>
TrainableMask adapter_mask(const ToyModel<T>& model, TokenId speaker_change);

/// H (l_h x width) with l_h = ceil(frames / downsample). Throws ShapeMismatch
/// for zero frames or a feature width other than config.feature_dim.
template <class T>
Mat<T> encode(const ToyModel<T>& model, const FeatureMatrix<T>& x);

template <class T>
std::vector<Mat<T>> encode_batch(const ToyModel<T>& model, const std::vector<FeatureMatrix<T>>& xs);

/// Logits for every position of `tokens` (n x vocab).
template <class T>
Mat<T> decoder_logits(const ToyModel<T>& model, std::span<const TokenId> tokens, const Mat<T>& h);

/// Next-token distribution after prompt + prefix. Throws InvalidToken.
template <class T>
std::vector<T> decode_step(const ToyModel<T>& model, const PromptSpec& prompt,
                           std::span<const TokenId> prefix, const Mat<T>& h);

template <class T>
struct LossResult {
  T loss = 0;
  std::size_t positions = 0;
  std::size_t correct = 0;  // argmax equals the label
};

/// Mean cross-entropy of `labels` given prompt and audio; prompt positions
/// are not scored. With `backward`, adds grad_scale * dLoss/dParam to every
/// grad buffer. Throws LabelOutOfVocab, ConfigError (empty prompt) and
/// ShapeMismatch (sequence longer than max_tokens).
template <class T>
LossResult<T> teacher_forced_loss(ToyModel<T>& model, const FeatureMatrix<T>& x,
                                  const PromptSpec& prompt, std::span<const TokenId> labels,
                                  bool backward, T grad_scale = T(1));

struct GreedyResult {
  TokenSequence tokens;  // payload only
  bool truncated = false;
};

/// Argmax decoding, ties to the lowest id, until eos or max_len tokens.
template <class T>
GreedyResult greedy_decode(const ToyModel<T>& model, const FeatureMatrix<T>& x,
                           const PromptSpec& prompt, TokenId eos, std::size_t max_len);

/// Copy of `src` with values converted to U; grads zeroed.
template <class U, class T>
ToyModel<U> convert_model(const ToyModel<T>& src);

}  // namespace mtsot::nn
