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

#include <gtest/gtest.h>

#include <sstream>

#include "mtsot/manifest.hpp"
#include "mtsot/segmenter.hpp"
#include "mtsot/simulator.hpp"
#include "support/generators.hpp"

namespace mtsot {
namespace {

SpeakerPool test_pool(std::uint64_t seed, int speakers = 8, int per_speaker = 5) {
  Rng rng(seed);
  std::vector<Utterance> utts;
  for (int s = 0; s < speakers; ++s) {
    double t = 0;
    for (int i = 0; i < per_speaker; ++i) {
      const double dur = static_cast<double>(rng.between(150, 600)) * 0.02;
      utts.push_back({"pool", "spk" + std::to_string(s), {t, t + dur}, {{"word", std::nullopt}}});
      t += dur + 1.0;
    }
  }
  return make_pool(std::move(utts));
}

std::string serialize(const SimulationResult& r) {
  std::ostringstream out;
  for (const auto& g : r.groups) write_reference_manifest(out, g.group.utterances);
  std::vector<GroupRecord> recs;
  for (const auto& g : r.groups) recs.push_back(group_record(g.group));
  write_group_manifest(out, recs);
  return out.str();
}

TEST(Simulator, ZeroOverlapSingleSpeaker) {
  const SpeakerPool pool = test_pool(1);
  SimConfig cfg;
  cfg.overlap_low = 0.0;
  cfg.overlap_high = 0.0;
  cfg.max_speakers = 1;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const SimulatedGroup g = sample_group(pool, cfg, i);
    ASSERT_EQ(g.group.utterances.size(), 1u);
    EXPECT_DOUBLE_EQ(group_start(g.group), 0.0);
    EXPECT_EQ(g.overlap_ratio, 0.0);
  }
}

TEST(Simulator, FullOverlapForcesAlignedStarts) {
  std::vector<Utterance> utts = {{"p", "A", {0, 5}, {{"a", std::nullopt}}},
                                 {"p", "B", {0, 5}, {{"b", std::nullopt}}}};
  const SpeakerPool pool = make_pool(utts);
  SimConfig cfg;
  cfg.overlap_low = 1.0;
  cfg.overlap_high = 1.0;
  cfg.max_speakers = 2;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const SimulatedGroup g = sample_group(pool, cfg, i);
    ASSERT_EQ(g.group.utterances.size(), 2u);
    EXPECT_EQ(g.group.utterances[0].interval, g.group.utterances[1].interval);
    EXPECT_EQ(g.overlap_ratio, 1.0);
  }
}

TEST(Simulator, DefaultRunSatisfiesConstraints) {
  const SpeakerPool pool = test_pool(2);
  SimConfig cfg;
  cfg.seed = 5;
  const SimulationResult r = simulate(pool, cfg, 1);
  EXPECT_EQ(r.groups.size() + r.failures.size(), 100u);
  EXPECT_TRUE(r.failures.empty());
  for (const SimulatedGroup& g : r.groups) {
    EXPECT_NO_THROW(validate_group(g.group));
    const auto spk = distinct_speakers(g.group);
    EXPECT_GE(spk.size(), 2u);
    EXPECT_LE(spk.size(), 4u);
    EXPECT_EQ(spk.size(), g.group.utterances.size());
    EXPECT_LE(group_span(g.group), 30.0);
    EXPECT_GE(g.overlap_ratio, 0.60);
    EXPECT_LE(g.overlap_ratio, 0.80);
    EXPECT_EQ(g.overlap_ratio, overlap_ratio(g.group));
    // Source speakers are distinct and texts come from the recorded sources.
    std::set<std::string> src;
    for (std::size_t i = 0; i < g.sources.size(); ++i) {
      const Utterance& p = pool.utterances[g.sources[i]];
      src.insert(p.speaker_id);
      EXPECT_EQ(g.group.utterances[i].words.size(), p.words.size());
      EXPECT_NEAR(g.group.utterances[i].interval.duration(), p.interval.duration(), 1e-9);
    }
    EXPECT_EQ(src.size(), g.sources.size());
  }
}

TEST(Simulator, DeterministicAcrossRunsAndJobs) {
  const SpeakerPool pool = test_pool(3);
  SimConfig cfg;
  cfg.seed = 9;
  cfg.n_groups = 40;
  const std::string a = serialize(simulate(pool, cfg, 1));
  EXPECT_EQ(a, serialize(simulate(pool, cfg, 1)));
  EXPECT_EQ(a, serialize(simulate(pool, cfg, 4)));
  cfg.seed = 10;
  EXPECT_NE(a, serialize(simulate(pool, cfg, 1)));
}

TEST(Simulator, GroupsAreIndependentOfCount) {
  const SpeakerPool pool = test_pool(4);
  SimConfig cfg;
  cfg.n_groups = 5;
  const auto small = simulate(pool, cfg);
  cfg.n_groups = 10;
  const auto large = simulate(pool, cfg);
  for (std::size_t i = 0; i < small.groups.size(); ++i)
    EXPECT_EQ(small.groups[i].group.utterances, large.groups[i].group.utterances);
}

TEST(Simulator, ImpossibleRangeReportsFailure) {
  const SpeakerPool pool = test_pool(5, 1);
  SimConfig cfg;
  cfg.n_groups = 3;
  const auto r = simulate(pool, cfg);
  EXPECT_TRUE(r.groups.empty());
  EXPECT_EQ(r.failures.size(), 3u);
}

TEST(Simulator, InvalidConfigRejected) {
  SimConfig cfg;
  cfg.overlap_low = 0.9;
  cfg.overlap_high = 0.1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.max_speakers = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Mix, SingleSourceIdentity) {
  const UtteranceGroup g{"g", {{"S", "A", {0, 0.001}, {{"a", std::nullopt}}}}};
  AudioClip src{16000, std::vector<float>(16, 0.25f)};
  const AudioClip out = mix_waveforms(g, std::vector<AudioClip>{src});
  EXPECT_EQ(out.samples, src.samples);
}

TEST(Mix, DisjointSourcesLeaveSilenceGap) {
  const UtteranceGroup g{"g", {{"S", "A", {0, 0.001}, {{"a", std::nullopt}}},
                               {"S", "B", {0.002, 0.003}, {{"b", std::nullopt}}}}};
  const std::vector<AudioClip> src = {{16000, std::vector<float>(16, 1.0f)},
                                      {16000, std::vector<float>(16, 2.0f)}};
  const AudioClip out = mix_waveforms(g, src);
  ASSERT_EQ(out.samples.size(), 48u);
  for (std::size_t i = 0; i < 48; ++i) EXPECT_EQ(out.samples[i], i < 16 ? 1.0f : i < 32 ? 0.0f : 2.0f) << i;
}

TEST(Mix, OverlappedImpulsesSum) {
  const UtteranceGroup g{"g", {{"S", "A", {0, 0.001}, {{"a", std::nullopt}}},
                               {"S", "B", {0, 0.001}, {{"b", std::nullopt}}}}};
  std::vector<AudioClip> src(2, AudioClip{16000, std::vector<float>(16, 0.0f)});
  src[0].samples[3] = 1.0f;
  src[1].samples[3] = 0.5f;
  const std::vector<float> gains = {1.0f, 2.0f};
  const AudioClip out = mix_waveforms(g, src, gains);
  EXPECT_EQ(out.samples[3], 2.0f);
  EXPECT_EQ(out.samples[2], 0.0f);
}

TEST(Mix, SampleRateMismatch) {
  const UtteranceGroup g{"g", {{"S", "A", {0, 0.001}, {{"a", std::nullopt}}},
                               {"S", "B", {0, 0.001}, {{"b", std::nullopt}}}}};
  const std::vector<AudioClip> src = {{16000, std::vector<float>(16)}, {8000, std::vector<float>(8)}};
  EXPECT_THROW(mix_waveforms(g, src), SampleRateMismatch);
}

}  // namespace
}  // namespace mtsot
