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

#include "mtsot/segmenter.hpp"
#include "support/generators.hpp"

namespace mtsot {
namespace {

Utterance utt(std::string spk, double s, double e) {
  return Utterance{"S", std::move(spk), {s, e}, {{"w", std::nullopt}}};
}

/// Overlap ratio by a 1 ms sweep.
double sweep_overlap(const std::vector<Utterance>& utts) {
  double lo = 1e9, hi = 0;
  for (const auto& u : utts) lo = std::min(lo, u.interval.start_s), hi = std::max(hi, u.interval.end_s);
  long both = 0, any = 0;
  for (long k = 0; lo + (k + 0.5) * 1e-3 < hi; ++k) {
    const double t = lo + (k + 0.5) * 1e-3;
    std::set<std::string> active;
    for (const auto& u : utts)
      if (u.interval.start_s <= t && t < u.interval.end_s) active.insert(u.speaker_id);
    any += !active.empty();
    both += active.size() >= 2;
  }
  return any ? static_cast<double>(both) / any : 0.0;
}

std::vector<Utterance> random_session(Rng& rng, int n) {
  std::vector<Utterance> utts;
  std::map<std::string, double> free_at;
  double t = 0;
  for (int i = 0; i < n; ++i) {
    const std::string spk = "s" + std::to_string(rng.below(4));
    t += static_cast<double>(rng.between(0, 200)) * 0.02;
    const double start = std::max(t, free_at[spk]);
    const double end = start + static_cast<double>(rng.between(10, 400)) * 0.02;
    free_at[spk] = end;
    utts.push_back(utt(spk, start, end));
  }
  std::stable_sort(utts.begin(), utts.end(),
                   [](const Utterance& a, const Utterance& b) { return a.interval.start_s < b.interval.start_s; });
  return utts;
}

TEST(Segmenter, SilenceSplitsGroups) {
  const std::vector<Utterance> u = {utt("A", 0, 5), utt("B", 8, 12)};
  SegmentationConfig cfg;
  cfg.max_group_s = 10.0;
  EXPECT_EQ(segment_session(u, cfg).size(), 2u);
}

TEST(Segmenter, FullOverlapStaysTogether) {
  const std::vector<Utterance> u = {utt("A", 0, 5), utt("B", 0, 5)};
  const auto groups = segment_session(u, {.max_group_s = 3.0, .drop_overlong = false});
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_TRUE(groups[0].overlong);
  EXPECT_TRUE(segment_session(u, {.max_group_s = 3.0}).empty());
}

TEST(Segmenter, ChainBoundaries) {
  const std::vector<Utterance> u = {utt("A", 0, 10), utt("B", 5, 15), utt("C", 12, 20)};
  EXPECT_TRUE(is_legal_boundary(u, 0));
  EXPECT_FALSE(is_legal_boundary(u, 10));
  EXPECT_FALSE(is_legal_boundary(u, 15));  // inside C
  EXPECT_TRUE(is_legal_boundary(u, 20));
  EXPECT_EQ(testing::legal_cuts_oracle(u), (std::vector<double>{0, 20}));
  for (double t = 0; t <= 20; t += 0.5)
    EXPECT_EQ(is_legal_boundary(u, t), t <= 0 || t >= 20) << t;
}

TEST(Segmenter, BoundariesMatchEnumerationOracle) {
  Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const auto utts = random_session(rng, 2 + static_cast<int>(rng.below(25)));
    const auto cuts = testing::legal_cuts_oracle(utts);
    for (const Utterance& u : utts)
      for (double t : {u.interval.start_s, u.interval.end_s})
        EXPECT_EQ(is_legal_boundary(utts, t), std::binary_search(cuts.begin(), cuts.end(), t));
    const auto groups = segment_session(utts, {.max_group_s = 30.0, .drop_overlong = false});
    std::vector<std::size_t> seen;
    for (std::size_t k = 0; k < groups.size(); ++k) {
      const auto& g = groups[k];
      seen.insert(seen.end(), g.members.begin(), g.members.end());
      // Every group boundary is legal for the whole session.
      EXPECT_TRUE(is_legal_boundary(utts, group_start(g.group)));
      EXPECT_TRUE(is_legal_boundary(utts, group_end(g.group)));
      EXPECT_EQ(g.overlong, group_span(g.group) > 30.0);
      if (k > 0) {
        EXPECT_LE(group_end(groups[k - 1].group), group_start(g.group));
      }
    }
    std::sort(seen.begin(), seen.end());
    std::vector<std::size_t> all(utts.size());
    std::iota(all.begin(), all.end(), 0);
    EXPECT_EQ(seen, all);
  }
}

TEST(Segmenter, CutsAtEveryLegalBoundary) {
  Rng rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const auto utts = random_session(rng, 20);
    const auto groups = segment_session(utts, {.max_group_s = 30.0, .drop_overlong = false});
    const auto cuts = testing::legal_cuts_oracle(utts);
    for (const auto& g : groups)
      for (double t : cuts) EXPECT_FALSE(group_start(g.group) < t && t < group_end(g.group)) << t;
  }
}

TEST(Segmenter, MultipleSessionsKeptApart) {
  std::vector<Utterance> u = {utt("A", 0, 1), utt("B", 0.5, 2)};
  u[1].session_id = "T";
  const auto groups = segment_sessions(u);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_NE(groups[0].group.group_id, groups[1].group.group_id);
}

TEST(Overlap, Examples) {
  EXPECT_DOUBLE_EQ(overlap_ratio({"g", {utt("A", 0, 2)}}), 0.0);
  EXPECT_DOUBLE_EQ(overlap_ratio({"g", {utt("A", 0, 2), utt("B", 0, 2)}}), 1.0);
  const UtteranceGroup g{"g", {utt("A", 0, 2), utt("B", 1, 3)}};
  EXPECT_NEAR(overlap_ratio(g), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(overlap_ratio(g), sweep_overlap(g.utterances), 1e-3);
}

TEST(Overlap, AgreesWithSweepOracle) {
  Rng rng(53);
  for (int i = 0; i < 100; ++i) {
    const UtteranceGroup g = testing::random_group(rng, {});
    const OverlapStats st = overlap_stats(g);
    // One 20 ms frame of slack on the speech time.
    EXPECT_NEAR(st.ratio(), sweep_overlap(g.utterances), 0.02 / std::max(st.speech_s, 0.02));
  }
}

}  // namespace
}  // namespace mtsot
