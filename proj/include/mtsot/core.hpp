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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtsot/errors.hpp"

namespace mtsot {

using TokenId = std::int32_t;

/// Half-open time span in seconds. Always finite with end_s >= start_s >= 0.
struct TimeInterval {
  double start_s = 0.0;
  double end_s = 0.0;

  double duration() const { return end_s - start_s; }
  bool operator==(const TimeInterval&) const = default;
};

/// Throws ValidationError(kInterval) if `iv` is not a valid interval.
void check_interval(const TimeInterval& iv, std::size_t line = 0);

struct Word {
  std::string text;
  std::optional<TimeInterval> interval;

  bool operator==(const Word&) const = default;
};

struct Utterance {
  std::string session_id;
  std::string speaker_id;
  TimeInterval interval;
  std::vector<Word> words;

  bool operator==(const Utterance&) const = default;
};

enum class GroupOrigin { kSegmented, kSimulated };

struct UtteranceGroup {
  std::string group_id;
  std::vector<Utterance> utterances;
  GroupOrigin origin = GroupOrigin::kSegmented;
};

struct GroupLimits {
  double max_group_s = 30.0;
  int max_speakers = 4;
};

/// Per-utterance checks: interval, non-empty words, word text, word timing
/// containment and ordering.
void validate_utterance(const Utterance& u, std::size_t line = 0);

/// Throws ValidationError naming the first violated group invariant.
void validate_group(const UtteranceGroup& g, const GroupLimits& limits = {});

/// Throws ValidationError(kSpeakerOverlap) if two utterances of the same
/// speaker and session overlap in time.
void check_speaker_overlap(const std::vector<Utterance>& utts);

double group_start(const UtteranceGroup& g);
double group_end(const UtteranceGroup& g);
inline double group_span(const UtteranceGroup& g) { return group_end(g) - group_start(g); }

/// Distinct speaker ids in lexicographic order.
std::vector<std::string> distinct_speakers(const UtteranceGroup& g);

/// Copy of `g` with every time shifted so the earliest utterance starts at 0.
UtteranceGroup rebase(const UtteranceGroup& g);

/// Words of one speaker in time order, concatenated across utterances.
std::vector<std::string> speaker_words(const UtteranceGroup& g, const std::string& speaker_id);

}  // namespace mtsot
