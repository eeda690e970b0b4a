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

#include "mtsot/nn/toy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "mtsot/errors.hpp"
#include "mtsot/nn/checkpoint.hpp"
#include "mtsot/parallel.hpp"
#include "mtsot/rng.hpp"

namespace mtsot::nn {

using nlohmann::ordered_json;

ordered_json ToyTaskConfig::to_json() const {
  return {{"groups", groups},
          {"symbols", symbols},
          {"min_words", min_words},
          {"max_words", max_words},
          {"frames_per_word", frames_per_word},
          {"timestamp_count", timestamp_count},
          {"resolution_s", resolution_s},
          {"seed", seed}};
}

ordered_json ToyTrainConfig::to_json() const {
  return {{"width", width},
          {"heads", heads},
          {"layers", layers},
          {"max_steps", max_steps},
          {"batch_size", batch_size},
          {"eval_every", eval_every},
          {"stop_accuracy", stop_accuracy},
          {"optim", optim.to_json()},
          {"seed", seed}};
}

namespace {

std::string symbol_name(int s) { return fmt::format("s{}", s); }

}  // namespace

template <class T>
FeatureMatrix<T> toy_features(const UtteranceGroup& g, const Vocabulary& vocab, int symbols,
                              double resolution_s) {
  const double origin = group_start(g);
  FeatureMatrix<T> x;
  x.frames = static_cast<std::size_t>(to_frames(group_span(g), resolution_s));
  x.dim = static_cast<std::size_t>(2 * symbols);
  x.values.assign(x.frames * x.dim, T(0));
  for (const Utterance& u : g.utterances) {
    const std::size_t voice = u.speaker_id == "spk0" ? 0 : 1;
    for (const Word& w : u.words) {
      const auto id = vocab.text_id(w.text);
      if (!id || !w.interval) throw ConfigError("toy words need known symbols and timings");
      const auto sym = static_cast<std::size_t>(*id);
      const auto a = static_cast<std::size_t>(to_frames(w.interval->start_s - origin, resolution_s));
      const auto b = static_cast<std::size_t>(to_frames(w.interval->end_s - origin, resolution_s));
      for (std::size_t t = a; t < b && t < x.frames; ++t) x.at(t, voice * static_cast<std::size_t>(symbols) + sym) += T(1);
    }
  }
  return x;
}

template FeatureMatrix<float> toy_features(const UtteranceGroup&, const Vocabulary&, int, double);
template FeatureMatrix<double> toy_features(const UtteranceGroup&, const Vocabulary&, int, double);

ToyCorpus make_toy_corpus(const ToyTaskConfig& cfg) {
  if (cfg.groups < 1 || cfg.symbols < 1 || cfg.min_words < 1 || cfg.max_words < cfg.min_words ||
      cfg.frames_per_word < 1)
    throw ConfigError("invalid toy task configuration");
  const int max_frames = 2 * cfg.max_words * cfg.frames_per_word - 1;
  if (max_frames > cfg.timestamp_count - 1)
    throw ConfigError(fmt::format("toy groups may span {} frames but only {} timestamps exist",
                                  max_frames, cfg.timestamp_count));

  ToyCorpus c;
  c.config = cfg;
  std::vector<std::string> text;
  for (int s = 0; s < cfg.symbols; ++s) text.push_back(symbol_name(s));
  c.vocab = Vocabulary::build(text, {"en"}, cfg.timestamp_count, cfg.resolution_s);
  c.prompt = make_prompt(c.vocab, "en", CodecMode::kTimestamped);

  const double res = cfg.resolution_s;
  const WhitespaceTokenizer tok;
  CodecOptions codec;
  codec.mode = CodecMode::kTimestamped;
  for (int gi = 0; gi < cfg.groups; ++gi) {
    Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(gi)));
    UtteranceGroup g;
    g.group_id = fmt::format("toy-{:04d}", gi);
    g.origin = GroupOrigin::kSimulated;
    const int first = static_cast<int>(rng.below(2));
    long long start = 0;
    long long first_len = 0;
    for (int k = 0; k < 2; ++k) {
      const int n = static_cast<int>(rng.between(cfg.min_words, cfg.max_words));
      const long long len = static_cast<long long>(n) * cfg.frames_per_word;
      if (k == 0) first_len = len;
      else start = rng.between(0, first_len - 1);
      Utterance u;
      u.session_id = g.group_id;
      u.speaker_id = fmt::format("spk{}", k == 0 ? first : 1 - first);
      u.interval = {static_cast<double>(start) * res, static_cast<double>(start + len) * res};
      for (int w = 0; w < n; ++w) {
        const long long a = start + static_cast<long long>(w) * cfg.frames_per_word;
        u.words.push_back({symbol_name(static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.symbols)))),
                           TimeInterval{static_cast<double>(a) * res,
                                        static_cast<double>(a + cfg.frames_per_word) * res}});
      }
      g.utterances.push_back(std::move(u));
    }
    Example<float> ex;
    ex.x = toy_features<float>(g, c.vocab, cfg.symbols, res);
    ex.prompt = c.prompt;
    ex.labels = encode_sot(g, codec, PromptSpec{}, c.vocab, tok);
    c.examples.push_back(std::move(ex));
    c.groups.push_back(std::move(g));
  }
  return c;
}

double teacher_forced_accuracy(ToyModel<float>& model, const std::vector<Example<float>>& examples) {
  std::size_t correct = 0, total = 0;
  for (const auto& ex : examples) {
    const auto r = teacher_forced_loss(model, ex.x, ex.prompt, ex.labels, false);
    correct += r.correct;
    total += r.positions;
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

namespace {

// Reshuffled pass over the corpus, batch by batch.
class BatchCursor {
 public:
  BatchCursor(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    std::iota(order_.begin(), order_.end(), 0);
    cursor_ = n;
  }
  std::vector<Example<float>> next(const std::vector<Example<float>>& all, int batch_size) {
    std::vector<Example<float>> batch;
    for (int b = 0; b < batch_size; ++b) {
      if (cursor_ == order_.size()) {
        for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
        cursor_ = 0;
      }
      batch.push_back(all[order_[cursor_++]]);
    }
    return batch;
  }

 private:
  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t cursor_;
};

}  // namespace

ToyTrainResult train_toy(const ToyCorpus& corpus, const ToyTrainConfig& cfg,
                         const std::function<void(const TrainLogEntry&)>& on_log) {
  if (cfg.max_steps < 1 || cfg.batch_size < 1 || cfg.eval_every < 1)
    throw ConfigError("invalid toy training configuration");
  ModelConfig mc;
  mc.vocab_size = corpus.vocab.size();
  mc.feature_dim = 2 * corpus.config.symbols;
  mc.width = cfg.width;
  mc.heads = cfg.heads;
  mc.encoder_layers = cfg.layers;
  mc.decoder_layers = cfg.layers;
  mc.seed = cfg.seed;
  std::size_t longest = 0;
  for (const auto& ex : corpus.examples)
    longest = std::max(longest, ex.prompt.tokens.size() + ex.labels.size());
  mc.max_tokens = static_cast<int>(std::max<std::size_t>(64, longest + 8));

  ToyTrainResult r{build_model<float>(mc), 0, -1, 0.0, {}};
  const TrainableMask mask = full_mask(r.model);
  AdamWState<float> state = make_adamw_state(r.model);
  AdamWConfig opt = cfg.optim;
  opt.total_steps = cfg.max_steps;

  BatchCursor batches(corpus.examples.size(), substream_seed(cfg.seed, 2));
  for (long step = 0; step < cfg.max_steps; ++step) {
    const auto batch = batches.next(corpus.examples, cfg.batch_size);
    const StepStats st = train_step(r.model, std::span<const Example<float>>(batch), mask, state, opt, step);
    TrainLogEntry e{step, st.loss, st.lr, std::nullopt};
    r.steps = step + 1;
    if (r.steps % cfg.eval_every == 0 || r.steps == cfg.max_steps) {
      r.accuracy = teacher_forced_accuracy(r.model, corpus.examples);
      e.accuracy = r.accuracy;
      if (r.steps_to_95 < 0 && r.accuracy >= 0.95) r.steps_to_95 = r.steps;
    }
    r.log.push_back(e);
    if (on_log) on_log(e);
    if (e.accuracy && *e.accuracy >= cfg.stop_accuracy) break;
  }
  return r;
}

AdapterRunResult train_adapters_toy(ToyModel<float>& model, const ToyCorpus& corpus,
                                    const AdapterConfig& ad, int steps, int batch_size,
                                    const AdamWConfig& optim, std::uint64_t seed) {
  if (steps < 0 || batch_size < 1) throw ConfigError("invalid adapter training configuration");
  if (!model.adapters) insert_adapters(model, ad);
  const TrainableMask mask = adapter_mask(model, corpus.vocab.special(Special::kSpeakerChange));
  AdapterRunResult r;
  r.trainable = mask.trainable();
  r.frozen_before = frozen_digest(model, mask);
  AdamWState<float> state = make_adamw_state(model);
  AdamWConfig opt = optim;
  opt.total_steps = steps;
  BatchCursor batches(corpus.examples.size(), substream_seed(seed, 3));
  for (long step = 0; step < steps; ++step) {
    const auto batch = batches.next(corpus.examples, batch_size);
    r.final_loss = train_step(model, std::span<const Example<float>>(batch), mask, state, opt, step).loss;
    r.steps = step + 1;
  }
  r.frozen_after = frozen_digest(model, mask);
  return r;
}

ordered_json ToyEvaluation::to_json() const {
  ordered_json j;
  j["teacher_forced_accuracy"] = accuracy;
  j["token_error_rate"] = token_error.rate();
  j["token_errors"] = token_error.overall.errors;
  j["reference_tokens"] = token_error.overall.ref_len;
  j["speaker_count_accuracy"] = speaker_count_accuracy;
  j["truncated"] = truncated;
  j["repaired"] = repaired;
  return j;
}

ToyEvaluation evaluate_toy(ToyModel<float>& model, const ToyCorpus& corpus, int jobs) {
  ToyEvaluation ev;
  ev.accuracy = teacher_forced_accuracy(model, corpus.examples);
  const std::size_t n = corpus.groups.size();
  ev.decoded.resize(n);
  ev.scores.resize(n);
  std::vector<int> counts(n), truncated(n), repaired(n);
  const IdentityNormalizer norm;
  ScoreOptions so;
  so.unit = Unit::kWord;
  const TokenId eos = corpus.vocab.special(Special::kEos);
  const ToyModel<float>& frozen = model;
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto& ex = corpus.examples[i];
    const GreedyResult g = greedy_decode(frozen, ex.x, ex.prompt, eos, ex.labels.size() + 16);
    DecodeOptions dopt;
    dopt.mode = CodecMode::kTimestamped;
    dopt.strict = false;
    dopt.prompt = PromptHandling::kNone;
    dopt.group_length_s = group_span(corpus.groups[i]);
    const DecodeResult dr = decode_sot(g.tokens, dopt, corpus.vocab);
    ev.scores[i] = score_group(corpus.groups[i], dr.speakers, so, &norm);
    ev.decoded[i] = g.tokens;
    counts[i] = count_speakers(g.tokens, corpus.vocab) ==
                static_cast<int>(distinct_speakers(corpus.groups[i]).size());
    truncated[i] = g.truncated;
    repaired[i] = !dr.repairs.empty();
  });
  ev.token_error = corpus_error_rate(ev.scores);
  ev.speaker_count_accuracy =
      static_cast<double>(std::accumulate(counts.begin(), counts.end(), 0)) / static_cast<double>(n);
  ev.truncated = std::accumulate(truncated.begin(), truncated.end(), 0L);
  ev.repaired = std::accumulate(repaired.begin(), repaired.end(), 0L);
  return ev;
}

}  // namespace mtsot::nn
