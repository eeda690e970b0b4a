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

// Synthetic two-speaker overlapped-symbol task.
//
// Each group has two speakers ("spk0", "spk1"), one utterance each. Every
// word is one symbol held for `frames_per_word` frames of `resolution_s`.
// The second utterance starts while the first is still active. Frame t of
// the features is the sum of the one-hot (voice, symbol) vectors of the
// speakers active during [t, t+1) frames.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "mtsot/nn/model.hpp"
#include "mtsot/nn/optim.hpp"
#include "mtsot/scoring.hpp"
#include "mtsot/vocabulary.hpp"

namespace mtsot::nn {

struct ToyTaskConfig {
  int groups = 32;
  int symbols = 12;
  int min_words = 2;
  int max_words = 4;
  int frames_per_word = 2;
  int timestamp_count = 26;
  double resolution_s = 0.02;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
};

struct ToyCorpus {
  ToyTaskConfig config;
  Vocabulary vocab;
  PromptSpec prompt;
  std::vector<UtteranceGroup> groups;
  std::vector<Example<float>> examples;  // labels are the SOT payload
};

/// Throws ConfigError when the layout does not fit the timestamp range.
ToyCorpus make_toy_corpus(const ToyTaskConfig& cfg);

template <class T>
FeatureMatrix<T> toy_features(const UtteranceGroup& g, const Vocabulary& vocab, int symbols,
                              double resolution_s);

struct ToyTrainConfig {
  int width = 64;
  int heads = 4;
  int layers = 2;  // per side
  int max_steps = 2000;
  int batch_size = 8;
  int eval_every = 25;
  /// Stop once teacher-forced accuracy on the corpus reaches this value.
  double stop_accuracy = 1.0;
  AdamWConfig optim;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
};

struct TrainLogEntry {
  long step = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> accuracy;  // teacher-forced, on evaluation steps
};

struct ToyTrainResult {
  ToyModel<float> model;
  long steps = 0;
  long steps_to_95 = -1;  // first evaluated step with accuracy >= 0.95
  double accuracy = 0.0;
  std::vector<TrainLogEntry> log;
};

/// Trains every parameter from scratch on the corpus.
ToyTrainResult train_toy(const ToyCorpus& corpus, const ToyTrainConfig& cfg,
                         const std::function<void(const TrainLogEntry&)>& on_log = {});

struct AdapterRunResult {
  std::string frozen_before;
  std::string frozen_after;
  std::size_t trainable = 0;
  long steps = 0;
  double final_loss = 0.0;
};

/// Inserts adapters when absent and trains \`steps\` steps under the adapter
/// mask, recording the frozen-parameter digest before and after.
AdapterRunResult train_adapters_toy(ToyModel<float>& model, const ToyCorpus& corpus,
                                    const AdapterConfig& ad, int steps, int batch_size,
                                    const AdamWConfig& optim, std::uint64_t seed);

/// Teacher-forced token accuracy over all examples.
double teacher_forced_accuracy(ToyModel<float>& model, const std::vector<Example<float>>& examples);

struct ToyEvaluation {
  double accuracy = 0.0;
  ErrorRateReport token_error;
  double speaker_count_accuracy = 0.0;
  std::vector<GroupScore> scores;
  std::vector<TokenSequence> decoded;
  long truncated = 0;
  long repaired = 0;

  nlohmann::ordered_json to_json() const;
};

/// Greedy decoding, lenient SOT decoding and permutation-invariant scoring.
ToyEvaluation evaluate_toy(ToyModel<float>& model, const ToyCorpus& corpus, int jobs = 1);

}  // namespace mtsot::nn
