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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <fmt/core.h>

#include "cli.hpp"
#include "mtsot/lder.hpp"
#include "mtsot/manifest.hpp"
#include "mtsot/nn/checkpoint.hpp"
#include "mtsot/nn/gradcheck.hpp"
#include "mtsot/nn/model.hpp"
#include "mtsot/nn/optim.hpp"
#include "mtsot/nn/toy.hpp"
#include "mtsot/report.hpp"
#include "mtsot/scoring.hpp"
#include "mtsot/segmenter.hpp"
#include "mtsot/simulator.hpp"
#include "mtsot/sot_codec.hpp"
#include "support/generators.hpp"
#include "support/golden.hpp"

namespace {

using namespace mtsot;
using Clock = std::chrono::steady_clock;

// Pinned thresholds.
constexpr int kCodecGroups = 1000;
constexpr double kCodecSeconds = 10.0;
constexpr int kFifoTrials = 1000;
constexpr int kAssignmentInstances = 500;
constexpr double kShiftedLderExpected = 10.0 / 500.0;
constexpr int kLderOracleGroups = 200;
constexpr double kLderFrameS = 0.02;
constexpr int kSimGroups = 100;
constexpr double kOverlapLow = 0.60, kOverlapHigh = 0.80;
constexpr double kMaxGroupS = 30.0;
constexpr int kMaxSpeakers = 4;
constexpr double kNearIdentityTol = 1e-6;
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr int kAdapterSteps = 100;
constexpr long kToyStepBudget = 2000;
constexpr double kToyTfAccuracy = 0.95;
constexpr double kToyTokenError = 0.05;
constexpr double kToySpeakerCount = 0.90;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::vector<HypSegment>> expected_segments(const UtteranceGroup& g) {
  const double origin = group_start(g);
  const auto frame = [&](double t) { return std::llround((t - origin) / 0.02); };
  std::vector<std::vector<HypSegment>> out;
  for (const std::string& spk : testing::fifo_oracle(g)) {
    std::vector<Utterance> mine;
    for (const Utterance& u : g.utterances)
      if (u.speaker_id == spk) mine.push_back(u);
    std::vector<HypSegment> segs;
    long long last = 0;
    for (const Utterance& u : mine) {
      std::string text;
      for (const Word& w : u.words) text += (text.empty() ? "" : " ") + w.text;
      if (segs.empty() || frame(u.interval.start_s) - last > 100) {
        segs.push_back({TimeInterval{frame(u.interval.start_s) * 0.02, frame(u.interval.end_s) * 0.02}, text});
      } else {
        segs.back().interval->end_s = frame(u.interval.end_s) * 0.02;
        segs.back().text += " " + text;
      }
      last = frame(u.interval.end_s);
    }
    out.push_back(segs);
  }
  return out;
}

bool same_segments(const DecodeResult& d, const std::vector<std::vector<HypSegment>>& want) {
  if (d.speakers.size() != want.size()) return false;
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (d.speakers[i].segments.size() != want[i].size()) return false;
    for (std::size_t j = 0; j < want[i].size(); ++j) {
      const HypSegment& a = d.speakers[i].segments[j];
      const HypSegment& b = want[i][j];
      if (a.text != b.text || !a.interval) return false;
      if (std::llround(a.interval->start_s / 0.02) != std::llround(b.interval->start_s / 0.02)) return false;
      if (std::llround(a.interval->end_s / 0.02) != std::llround(b.interval->end_s / 0.02)) return false;
    }
  }
  return true;
}

Outcome codec_round_trip() {
  Outcome o;
  const Vocabulary vocab = Vocabulary::build(testing::word_list());
  const PromptSpec prompt = make_prompt(vocab, "en", CodecMode::kTimestamped);
  WhitespaceTokenizer tok;
  Rng rng(1001);
  std::vector<UtteranceGroup> groups;
  for (int i = 0; i < kCodecGroups; ++i) groups.push_back(testing::random_group(rng, {}));
  const auto t0 = Clock::now();
  int speakers_seen[5] = {};
  for (const UtteranceGroup& g : groups) {
    const auto seq = encode_sot(g, {}, prompt, vocab, tok);
    const auto d = decode_sot(seq, {}, vocab);
    const auto order = fifo_order(g);
    ++speakers_seen[order.size()];
    o.require(d.speakers.size() == order.size(), "speaker count");
    o.require(count_speakers(seq, vocab) == static_cast<int>(order.size()), "count_speakers");
    for (std::size_t k = 0; k < order.size() && k < d.speakers.size(); ++k)
      o.require(d.speakers[k].words() == speaker_words(g, order[k]), "word sequence");
    o.require(same_segments(d, expected_segments(g)), "segment times");
  }
  const double secs = seconds_since(t0);
  o.require(secs < kCodecSeconds, "runtime");
  for (int k = 1; k <= 4; ++k) o.require(speakers_seen[k] > 0, "generator covers 1-4 speakers");
  o.detail = fmt::format("{} groups in {:.2f}s{}", kCodecGroups, secs, o.pass ? "" : " (" + o.detail + ")");
  return o;
}

Outcome fifo_and_segments() {
  Outcome o;
  Rng rng(1002);
  const Vocabulary vocab = Vocabulary::build(testing::word_list());
  WhitespaceTokenizer tok;
  DecodeOptions raw;
  raw.prompt = PromptHandling::kNone;
  int ties = 0, exact_gaps = 0;
  for (int i = 0; i < kFifoTrials; ++i) {
    UtteranceGroup g = testing::random_group(rng, {});
    if (i % 2 == 0) {
      // Align every speaker's first start to force lexicographic ties.
      std::map<std::string, double> first;
      for (const Utterance& u : g.utterances)
        if (!first.count(u.speaker_id)) first[u.speaker_id] = u.interval.start_s;
      double earliest = 1e9;
      for (auto& [_, t] : first) earliest = std::min(earliest, t);
      for (Utterance& u : g.utterances)
        if (first[u.speaker_id] == u.interval.start_s) {
          const double d = u.interval.start_s - earliest;
          bool clear = true;
          for (const Utterance& v : g.utterances)
            if (&v != &u && v.speaker_id == u.speaker_id && v.interval.start_s < u.interval.end_s - d)
              clear = false;
          if (clear) u.interval = {earliest, u.interval.end_s - d};
        }
      std::stable_sort(g.utterances.begin(), g.utterances.end(), [](const Utterance& a, const Utterance& b) {
        return a.interval.start_s < b.interval.start_s;
      });
    }
    const auto oracle = testing::fifo_oracle(g);
    o.require(fifo_order(g) == oracle, "FIFO order");
    std::set<double> firsts;
    for (const auto& spk : oracle)
      for (const Utterance& u : g.utterances)
        if (u.speaker_id == spk) {
          ties += !firsts.insert(u.interval.start_s).second;
          break;
        }
    for (std::size_t a = 0; a < g.utterances.size(); ++a)
      for (std::size_t b = 0; b < g.utterances.size(); ++b)
        exact_gaps += g.utterances[a].speaker_id == g.utterances[b].speaker_id &&
                      std::llround((g.utterances[b].interval.start_s - g.utterances[a].interval.end_s) / 0.02) == 100;
    const auto d = decode_sot(encode_sot(g, {}, PromptSpec{}, vocab, tok), raw, vocab);
    o.require(same_segments(d, expected_segments(g)), "2 s split rule");
  }
  // The oracles must actually have been exercised on both edge cases.
  o.require(ties > 50, "tie coverage");
  o.require(exact_gaps > 50, "exact 2 s gap coverage");
  o.detail = fmt::format("{} groups, {} tied starts, {} exact 2 s gaps{}", kFifoTrials, ties, exact_gaps,
                         o.pass ? "" : " (" + o.detail + ")");
  return o;
}

Outcome assignment_optimality() {
  Outcome o;
  Rng rng(1003);
  static const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  const auto words = [&] {
    std::vector<std::string> w(rng.below(6));
    for (auto& x : w) x = alphabet[rng.below(alphabet.size())];
    return w;
  };
  for (int i = 0; i < kAssignmentInstances; ++i) {
    std::vector<std::vector<std::string>> refs(rng.below(5)), hyps(rng.below(5));
    for (auto& w : refs) w = words();
    for (auto& w : hyps) w = words();
    const long oracle = testing::permutation_oracle(refs, hyps);
    o.require(best_assignment(refs, hyps, AssignmentMode::kExhaustive).counts.errors() == oracle, "exhaustive");
    o.require(best_assignment(refs, hyps, AssignmentMode::kHungarian).counts.errors() == oracle, "hungarian");
    o.require(best_assignment(refs, refs, AssignmentMode::kExhaustive).counts.errors() == 0, "WER(ref,ref)");
  }
  o.detail = fmt::format("{} instances{}", kAssignmentInstances, o.pass ? "" : " (" + o.detail + ")");
  return o;
}

SpeakerHypothesis timed(int index, std::vector<TimeInterval> ivs) {
  SpeakerHypothesis h;
  h.speaker_index = index;
  for (const auto& iv : ivs) h.segments.push_back({iv, "w"});
  return h;
}

Outcome lder_correctness() {
  Outcome o;
  const UtteranceGroup single{"g", {{"S", "A", {0.0, 10.0}, {{"w", std::nullopt}}}}};
  const LderParts shifted = lder(single, {timed(0, {{0.1, 10.1}})}, kLderFrameS);
  o.require(shifted.rate() == kShiftedLderExpected, "shifted case");
  Rng rng(1004);
  double worst = 0.0;
  for (int i = 0; i < kLderOracleGroups; ++i) {
    const UtteranceGroup g = testing::random_group(rng, {});
    o.require(lder(g, reference_as_hypothesis(g), kLderFrameS).error_frames == 0, "LDER(ref,ref)");
    const UtteranceGroup base = rebase(g);
    std::vector<SpeakerHypothesis> hyp;
    for (const std::string& spk : distinct_speakers(base)) {
      std::vector<TimeInterval> ivs;
      for (const Utterance& u : base.utterances)
        if (u.speaker_id == spk && rng.below(5) != 0) {
          const double s = std::max(0.0, u.interval.start_s + static_cast<double>(rng.between(-8, 8)) * 0.02);
          ivs.push_back({s, std::max(s, u.interval.end_s + static_cast<double>(rng.between(-8, 8)) * 0.02)});
        }
      hyp.push_back(timed(static_cast<int>(hyp.size()), ivs));
    }
    std::reverse(hyp.begin(), hyp.end());
    const LderParts p = lder(g, hyp, kLderFrameS);
    const auto sweep = testing::sweep_lder(g, hyp);
    const double diff = std::max(std::fabs(p.error_s() - sweep.error_s), std::fabs(p.ref_speech_s - sweep.ref_s));
    worst = std::max(worst, diff);
    o.require(diff <= kLderFrameS, "sweep oracle");
  }
  o.detail = fmt::format("shifted {:.1f}%, worst sweep gap {:.4f}s over {} groups{}", 100 * shifted.rate(), worst,
                         kLderOracleGroups, o.pass ? "" : " (" + o.detail + ")");
  return o;
}

SpeakerPool acceptance_pool() {
  Rng rng(1005);
  std::vector<Utterance> utts;
  for (int s = 0; s < 12; ++s) {
    double t = 0;
    for (int i = 0; i < 6; ++i) {
      const double dur = static_cast<double>(rng.between(100, 700)) * 0.02;
      Utterance u{"pool", fmt::format("spk{:02d}", s), {t, t + dur}, {}};
      for (int w = 0; w < 1 + static_cast<int>(dur); ++w)
        u.words.push_back({testing::word_list()[rng.below(testing::word_list().size())], std::nullopt});
      utts.push_back(std::move(u));
      t += dur + 1.0;
    }
  }
  return make_pool(std::move(utts));
}

std::string serialize(const SimulationResult& r) {
  std::ostringstream out;
  std::vector<GroupRecord> recs;
  for (const auto& g : r.groups) {
    write_reference_manifest(out, g.group.utterances);
    recs.push_back(group_record(g.group));
  }
  write_group_manifest(out, recs);
  return out.str();
}

Outcome simulator_constraints() {
  Outcome o;
  const SpeakerPool pool = acceptance_pool();
  SimConfig cfg;
  cfg.n_groups = kSimGroups;
  cfg.seed = 2024;
  cfg.overlap_low = kOverlapLow;
  cfg.overlap_high = kOverlapHigh;
  cfg.max_speakers = kMaxSpeakers;
  cfg.max_group_s = kMaxGroupS;
  const SimulationResult a = simulate(pool, cfg, 1);
  const SimulationResult b = simulate(pool, cfg, 4);
  o.require(a.groups.size() == static_cast<std::size_t>(kSimGroups), "all groups placed");
  double lo = 1, hi = 0, span = 0;
  for (const auto& g : a.groups) {
    const double r = overlap_ratio(g.group);
    lo = std::min(lo, r), hi = std::max(hi, r), span = std::max(span, group_span(g.group));
    o.require(r >= kOverlapLow && r <= kOverlapHigh, "overlap range");
    o.require(static_cast<int>(distinct_speakers(g.group).size()) <= kMaxSpeakers, "speaker cap");
    o.require(group_span(g.group) <= kMaxGroupS, "span cap");
    try {
      validate_group(g.group);
    } catch (const std::exception& e) {
      o.require(false, e.what());
    }
  }
  o.require(serialize(a) == serialize(b), "byte-identical reruns");
  o.detail = fmt::format("{} groups, overlap [{:.4f}, {:.4f}], max span {:.2f}s{}", a.groups.size(), lo, hi, span,
                         o.pass ? "" : " (" + o.detail + ")");
  return o;
}

Outcome adapter_math() {
  Outcome o;
  nn::ModelConfig cfg;
  cfg.vocab_size = 45;
  cfg.feature_dim = 24;
  cfg.seed = 7;
  nn::ToyModel<float> m = nn::build_model<float>(cfg);
  Rng rng(1006);
  nn::FeatureMatrix<float> x{16, 24, std::vector<float>(16 * 24)};
  for (float& v : x.values) v = static_cast<float>(rng.normal());
  const std::vector<TokenId> tokens = {40, 41, 3, 7, 9, 11};
  const auto h0 = nn::encode(m, x);
  const auto l0 = nn::decoder_logits(m, tokens, h0);
  const std::size_t before = m.parameter_count();
  const nn::AdapterConfig ad{16};
  nn::insert_adapters(m, ad);
  const auto h1 = nn::encode(m, x);
  const auto l1 = nn::decoder_logits(m, tokens, h1);
  double diff = 0;
  for (std::size_t i = 0; i < h0.v.size(); ++i) diff = std::max(diff, std::fabs(double(h0.v[i]) - h1.v[i]));
  for (std::size_t i = 0; i < l0.v.size(); ++i) diff = std::max(diff, std::fabs(double(l0.v[i]) - l1.v[i]));
  o.require(diff <= kNearIdentityTol, "near identity");
  const std::size_t L = static_cast<std::size_t>(cfg.encoder_layers + cfg.decoder_layers);
  const std::size_t d = static_cast<std::size_t>(cfg.width), b = 16;
  o.require(m.parameter_count() - before == 2 * L * (2 * d * b + d + b), "parameter count");
  nn::GradcheckConfig gc;
  gc.step = kGradStep;
  gc.tolerance = kGradTol;
  const auto report = nn::gradient_check(gc);
  double worst = 0;
  for (const auto& c : report.classes) {
    worst = std::max(worst, c.relative_error);
    o.require(c.relative_error <= kGradTol, fmt::format("gradient class {}", nn::param_kind_name(c.kind)));
  }
  o.require(report.classes.size() == 7, "all parameter classes checked");
  o.detail = fmt::format("max output change {:.2e}, +{} params, worst grad rel err {:.2e} over {} classes{}", diff,
                         m.parameter_count() - before, worst, report.classes.size(),
                         o.pass ? "" : " (" + o.detail + ")");
  return o;
}

Outcome freeze_integrity(const nn::ToyCorpus& corpus, const nn::ToyModel<float>& trained) {
  Outcome o;
  nn::ToyModel<float> m = trained;
  nn::AdamWConfig optim;
  optim.total_steps = kAdapterSteps;
  const auto run = nn::train_adapters_toy(m, corpus, nn::AdapterConfig{16}, kAdapterSteps, 8, optim, 11);
  o.require(run.steps == kAdapterSteps, "step count");
  o.require(run.frozen_before == run.frozen_after, "frozen digest");
  nn::ToyModel<float> still = trained;
  const std::string full = nn::model_digest(still);
  auto state = nn::make_adamw_state(still);
  const auto mask = nn::frozen_mask(still);
  for (long s = 0; s < 5; ++s)
    nn::train_step<float>(still, std::span(corpus.examples).subspan(0, 8), mask, state, optim, s);
  o.require(nn::model_digest(still) == full, "all-false mask");
  o.detail = fmt::format("{} adapter steps, frozen sha256 {}..., {} trainable{}", run.steps,
                         run.frozen_after.substr(0, 12), run.trainable, o.pass ? "" : " (" + o.detail + ")");
  return o;
}

Outcome report_fidelity() {
  Outcome o;
  o.require(render_confusion_table(testing::fixture_confusion()) == testing::read_golden("confusion_table.txt"),
            "confusion table golden");
  o.require(render_breakdown_table(testing::fixture_breakdown()) == testing::read_golden("breakdown_table.txt"),
            "breakdown table golden");
  // The score subcommand prints the same two tables.
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mtsot_acceptance_report";
  fs::create_directories(dir);
  Rng rng(1009);
  std::vector<Utterance> utts;
  for (int i = 0; i < 8; ++i) {
    UtteranceGroup g = testing::random_group(rng, {});
    for (Utterance& u : g.utterances) {
      u.interval.start_s += 100.0 * i, u.interval.end_s += 100.0 * i;
      utts.push_back(u);
    }
  }
  save_reference_manifest(dir / "refs.jsonl", utts);
  std::ostringstream out, err;
  cli::run({"segment", "--refs", (dir / "refs.jsonl").string(), "--out", (dir / "groups.jsonl").string(),
            "--ref-as-hyp", (dir / "hyps.jsonl").string()},
           out, err);
  out.str("");
  const int rc = cli::run({"score", "--refs", (dir / "refs.jsonl").string(), "--groups",
                           (dir / "groups.jsonl").string(), "--hyps", (dir / "hyps.jsonl").string()},
                          out, err);
  fs::remove_all(dir);
  o.require(rc == 0, "score exit status");
  const std::string text = out.str();
  o.require(text.find("avg.      1      2      3      4") != std::string::npos, "breakdown header in score output");
  o.require(text.find("Estimated # of talkers (%)") != std::string::npos, "confusion header in score output");
  o.detail = o.pass ? "golden tables match; score output carries both layouts" : o.detail;
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("%s %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  };

  report(1, "codec round trip", codec_round_trip);
  report(2, "FIFO and segment rules", fifo_and_segments);
  report(3, "assignment optimality", assignment_optimality);
  report(4, "LDER correctness", lder_correctness);
  report(5, "simulator constraints", simulator_constraints);
  report(6, "adapter math", adapter_math);

  const nn::ToyCorpus corpus = nn::make_toy_corpus({});
  nn::ToyTrainConfig tc;
  tc.max_steps = static_cast<int>(kToyStepBudget);
  tc.optim.total_steps = kToyStepBudget;
  report(7, "freeze integrity", [&] {
    nn::ToyTrainConfig warmup = tc;
    warmup.max_steps = 50;
    return freeze_integrity(corpus, nn::train_toy(corpus, warmup).model);
  });
  report(8, "toy end-to-end SOT", [&] {
    Outcome o;
    const auto t0 = Clock::now();
    const nn::ToyTrainResult trained = nn::train_toy(corpus, tc);
    const double train_s = seconds_since(t0);
    long reached = -1;
    for (const auto& e : trained.log)
      if (reached < 0 && e.accuracy && *e.accuracy >= kToyTfAccuracy) reached = e.step;
    nn::ToyModel<float> model = trained.model;
    const auto ev = nn::evaluate_toy(model, corpus);
    o.require(reached >= 0 && reached <= kToyStepBudget, "teacher-forced accuracy");
    o.require(ev.token_error.rate() <= kToyTokenError, "token error");
    o.require(ev.speaker_count_accuracy >= kToySpeakerCount, "speaker counting");
    o.detail = fmt::format("{:.0f}% TF accuracy at step {} ({} steps, {:.1f}s), token error {:.2f}%, "
                           "speaker counting {:.1f}%{}",
                           100 * kToyTfAccuracy, reached, trained.steps, train_s, 100 * ev.token_error.rate(),
                           100 * ev.speaker_count_accuracy, o.pass ? "" : " (" + o.detail + ")");
    return o;
  });
  report(9, "report fidelity", report_fidelity);

  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
