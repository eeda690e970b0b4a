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

// Permutation-invariant multi-talker scoring.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtsot/core.hpp"
#include "mtsot/sot_codec.hpp"

namespace mtsot {

/// Named text transform applied to references and hypotheses before scoring.
/// Implementations must be idempotent.
class Normalizer {
 public:
  virtual ~Normalizer() = default;
  virtual std::string name() const = 0;
  virtual std::string operator()(std::string_view text) const = 0;
};

/// Lowercases ASCII, turns ASCII punctuation other than apostrophes into
/// spaces and collapses whitespace runs.
class DefaultNormalizer final : public Normalizer {
 public:
  std::string name() const override { return "default"; }
  std::string operator()(std::string_view text) const override;
};

/// Collapses whitespace only.
class IdentityNormalizer final : public Normalizer {
 public:
  std::string name() const override { return "none"; }
  std::string operator()(std::string_view text) const override;
};

/// "default" or "none"; throws ConfigError otherwise.
std::unique_ptr<Normalizer> make_normalizer(std::string_view name);

enum class Unit { kWord, kChar };
const char* unit_name(Unit u);
Unit parse_unit(std::string_view name);

/// Word unit: whitespace split. Char unit: Unicode scalar values of the
/// UTF-8 text, whitespace excluded (invalid bytes become U+FFFD).
std::vector<std::string> split_units(std::string_view text, Unit unit);

struct EditCounts {
  long substitutions = 0;
  long insertions = 0;
  long deletions = 0;
  long ref_len = 0;

  long errors() const { return substitutions + insertions + deletions; }
  EditCounts& operator+=(const EditCounts& o);
  bool operator==(const EditCounts&) const = default;
};

/// Unit-cost Levenshtein alignment. Among optimal alignments the backtrace
/// prefers match/substitution, then deletion, then insertion.
EditCounts edit_distance(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

enum class AssignmentMode { kAuto, kExhaustive, kHungarian };

/// Minimum-cost perfect matching on a square cost matrix (row-major, n x n).
/// Returns the column assigned to each row.
std::vector<int> hungarian(const std::vector<double>& cost, std::size_t n);

/// Exhaustive search over all n! permutations; the first minimum in
/// lexicographic permutation order wins.
std::vector<int> exhaustive_assignment(const std::vector<double>& cost, std::size_t n);

struct Assignment {
  /// (ref index, hyp index); -1 marks a padding slot.
  std::vector<std::pair<int, int>> pairs;
  EditCounts counts;
};

/// Pads the shorter side with empty streams and picks the one-to-one
/// speaker mapping with the fewest total errors. kAuto is exhaustive up to
/// `cap` speakers and Hungarian beyond; kExhaustive throws CapExceeded above it.
Assignment best_assignment(const std::vector<std::vector<std::string>>& refs,
                           const std::vector<std::vector<std::string>>& hyps,
                           AssignmentMode mode = AssignmentMode::kAuto, std::size_t cap = 8);

struct LderParts {
  double miss_s = 0.0;
  double false_alarm_s = 0.0;
  double confusion_s = 0.0;
  double ref_speech_s = 0.0;
  // Exact frame counts behind the durations above.
  long error_frames = 0;
  long ref_frames = 0;

  double error_s() const { return miss_s + false_alarm_s + confusion_s; }
  double rate() const {
    return ref_frames > 0 ? static_cast<double>(error_frames) / static_cast<double>(ref_frames)
                          : 0.0;
  }
  LderParts& operator+=(const LderParts& o);
};

struct GroupScore {
  std::string group_id;
  EditCounts edit;
  std::vector<std::pair<int, int>> assignment;
  std::optional<LderParts> lder_parts;
  int ref_speakers = 0;
  int hyp_speakers = 0;
};

struct ScoreOptions {
  Unit unit = Unit::kWord;
  AssignmentMode mode = AssignmentMode::kAuto;
  std::size_t exhaustive_cap = 8;
  double frame_s = 0.02;
  /// Compute LDER when every hypothesis segment carries times.
  bool lder = true;
};

/// Number of hypothesis speakers with at least one non-blank segment.
int hypothesis_speaker_count(const std::vector<SpeakerHypothesis>& hyp);

/// WER/CER assignment over per-speaker streams plus LDER. `normalizer` may be
/// null (no normalization).
GroupScore score_group(const UtteranceGroup& ref, const std::vector<SpeakerHypothesis>& hyp,
                       const ScoreOptions& opts, const Normalizer* normalizer);

struct RateCell {
  long errors = 0;
  long ref_len = 0;
  long groups = 0;
  double rate() const { return ref_len > 0 ? static_cast<double>(errors) / ref_len : 0.0; }
};

struct ErrorRateReport {
  RateCell overall;
  std::map<int, RateCell> by_speakers;  // keyed by actual speaker count
  double rate() const { return overall.rate(); }
};

/// Pooled error rate: total errors over total reference units, overall and
/// per actual speaker count. Throws EmptyReference when no reference units.
ErrorRateReport corpus_error_rate(const std::vector<GroupScore>& scores);

}  // namespace mtsot
