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

// Corpus-level summaries: speaker-counting confusion, breakdown tables and
// RTTM export.

#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtsot/scoring.hpp"

namespace mtsot {

/// Rows: actual speaker count 1..4. Columns: estimated 0, 1, 2, 3, 4, >=5.
/// Groups with more than four actual speakers are not tabulated.
struct SpeakerCountConfusion {
  static constexpr int kRows = 4;
  static constexpr int kCols = 6;
  std::array<std::array<long, kCols>, kRows> counts{};

  long row_total(int actual) const;
  /// Row-normalized percentage; column index as above (0 = estimated zero).
  double percent(int actual, int col) const;
  /// Diagonal percentage for `actual` speakers.
  double accuracy(int actual) const { return percent(actual, actual); }
  bool any_zero_estimates() const;
};

/// Fills the matrix from ref_speakers / hyp_speakers of each score.
SpeakerCountConfusion speaker_count_confusion(const std::vector<GroupScore>& scores);

/// One row of an "avg. 1 2 3 4" table; values are fractions (0.214 = 21.4 %).
struct BreakdownRow {
  std::string label;
  std::optional<double> avg;
  std::array<std::optional<double>, 4> by_count;
};

BreakdownRow error_rate_row(const std::string& label, const ErrorRateReport& r);
BreakdownRow lder_row(const std::string& label, const std::vector<GroupScore>& scores);

/// Fixed-width table with columns "avg. 1 2 3 4", one decimal, "-" for
/// missing cells.
std::string render_breakdown_table(const std::vector<BreakdownRow>& rows);

/// "Estimated # of talkers (%)" matrix with rows "Actual # of talkers" 1..4
/// and columns 1 2 3 4 >=5 (plus a leading 0 column when any group was
/// estimated to have no speakers).
std::string render_confusion_table(const SpeakerCountConfusion& m);

nlohmann::ordered_json confusion_to_json(const SpeakerCountConfusion& m);
nlohmann::ordered_json error_rate_to_json(const ErrorRateReport& r);
nlohmann::ordered_json lder_to_json(const std::vector<GroupScore>& scores);

/// NIST RTTM SPEAKER lines, times group-relative.
void write_reference_rttm(std::ostream& out, const UtteranceGroup& g);
void write_hypothesis_rttm(std::ostream& out, const std::string& group_id,
                           const std::vector<SpeakerHypothesis>& hyp);

}  // namespace mtsot
