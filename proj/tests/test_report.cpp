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

#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "mtsot/report.hpp"
#include "support/golden.hpp"

namespace mtsot {
namespace {

TEST(Confusion, AllCorrect) {
  std::vector<GroupScore> scores;
  for (int k = 1; k <= 4; ++k) {
    GroupScore s;
    s.ref_speakers = s.hyp_speakers = k;
    scores.push_back(s);
  }
  const SpeakerCountConfusion m = speaker_count_confusion(scores);
  for (int k = 1; k <= 4; ++k) {
    EXPECT_DOUBLE_EQ(m.accuracy(k), 100.0);
    for (int c = 0; c < SpeakerCountConfusion::kCols; ++c)
      if (c != k) {
        EXPECT_DOUBLE_EQ(m.percent(k, c), 0.0);
      }
  }
}

TEST(Confusion, OvercountedPair) {
  GroupScore s;
  s.ref_speakers = 2;
  s.hyp_speakers = 3;
  const SpeakerCountConfusion m = speaker_count_confusion({s});
  const std::vector<double> row = {m.percent(2, 1), m.percent(2, 2), m.percent(2, 3), m.percent(2, 4),
                                   m.percent(2, 5)};
  EXPECT_EQ(row, (std::vector<double>{0, 0, 100, 0, 0}));
  EXPECT_EQ(m.row_total(1), 0);
}

TEST(Confusion, FiveOrMoreShareColumn) {
  GroupScore a, b;
  a.ref_speakers = b.ref_speakers = 4;
  a.hyp_speakers = 5;
  b.hyp_speakers = 9;
  EXPECT_DOUBLE_EQ(speaker_count_confusion({a, b}).percent(4, 5), 100.0);
}

TEST(Tables, ConfusionLayoutMatchesGolden) {
  EXPECT_EQ(render_confusion_table(testing::fixture_confusion()), testing::read_golden("confusion_table.txt"));
}

TEST(Tables, BreakdownLayoutMatchesGolden) {
  EXPECT_EQ(render_breakdown_table(testing::fixture_breakdown()), testing::read_golden("breakdown_table.txt"));
}

TEST(Tables, CellsUseOneDecimal) {
  const SpeakerCountConfusion m = testing::fixture_confusion();
  const std::vector<std::vector<double>> expected = {{97.7, 2.1, 0.2, 0.0, 0.0},
                                                      {12.6, 72.3, 14.0, 1.0, 0.0},
                                                      {1.6, 24.1, 56.0, 15.9, 2.3},
                                                      {0.0, 8.2, 39.2, 35.6, 16.9}};
  for (int k = 1; k <= 4; ++k)
    for (int c = 1; c <= 5; ++c)
      EXPECT_EQ(fmt::format("{:.1f}", m.percent(k, c)), fmt::format("{:.1f}", expected[k - 1][c - 1]));
}

TEST(Tables, ZeroColumnAppearsOnlyWhenUsed) {
  GroupScore s;
  s.ref_speakers = 1;
  s.hyp_speakers = 0;
  const std::string t = render_confusion_table(speaker_count_confusion({s}));
  EXPECT_NE(t.find("     0"), std::string::npos);
  EXPECT_EQ(render_confusion_table(testing::fixture_confusion()).find("     0 "), std::string::npos);
}

TEST(Rttm, ReferenceLines) {
  const UtteranceGroup g{"g1", {{"S", "A", {10.0, 11.5}, {{"x", std::nullopt}}}}};
  std::ostringstream out;
  write_reference_rttm(out, g);
  EXPECT_EQ(out.str(), "SPEAKER g1 1 0.000 1.500 <NA> <NA> A <NA> <NA>\n");
}

}  // namespace
}  // namespace mtsot
