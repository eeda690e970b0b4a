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

#include <span>
#include <string>
#include <vector>

#include "mtsot/core.hpp"

namespace mtsot {

struct SegmentationConfig {
  double max_group_s = 30.0;
  bool drop_overlong = true;
};

struct SegmentedGroup {
  UtteranceGroup group;
  bool overlong = false;
  std::vector<std::size_t> members;  // indices into the session utterance list
};

/// A cut at time t is legal when no utterance strictly straddles it
/// (start < t < end): t falls in silence or on an utterance boundary that
/// no other utterance crosses.
bool is_legal_boundary(std::span<const Utterance> utts, double t);

/// Cuts a session at every legal boundary, so each group is a maximal run of
/// transitively overlapping utterances. Groups longer than max_group_s are
/// dropped or flagged. Group ids are "<session>-<index>" with a 4-digit index
/// counting every candidate group, dropped or not. Throws EmptyInput.
std::vector<SegmentedGroup> segment_session(std::span<const Utterance> utts,
                                            const SegmentationConfig& cfg = {});

/// Splits a multi-session utterance list by session and segments each one.
std::vector<SegmentedGroup> segment_sessions(const std::vector<Utterance>& utts,
                                             const SegmentationConfig& cfg = {});

struct OverlapStats {
  double overlap_s = 0.0;  // at least two speakers active
  double speech_s = 0.0;   // at least one speaker active
  double ratio() const { return speech_s > 0.0 ? overlap_s / speech_s : 0.0; }
};

/// Interval sweep over the group's utterances.
OverlapStats overlap_stats(const UtteranceGroup& g);
inline double overlap_ratio(const UtteranceGroup& g) { return overlap_stats(g).ratio(); }

}  // namespace mtsot
