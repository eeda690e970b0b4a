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

// Local diarization error rate, computed per utterance group from
// predicted segment timestamps.

#pragma once

#include <vector>

#include "mtsot/scoring.hpp"

namespace mtsot {

/// Frame-level DER over the group. Reference times are re-based to the
/// group start; hypothesis segments are already group-relative. A speaker
/// is active in frames [round(start/frame_s), round(end/frame_s)). Per frame
/// miss = max(0, Nref - Nhyp), false alarm = max(0, Nhyp - Nref) and
/// confusion = min(Nref, Nhyp) - Ncorrect, under the one-to-one speaker
/// mapping that maximizes matched frames. No collar; overlap is scored.
/// Throws NoReferenceSpeech when the reference has no active frames.
LderParts lder(const UtteranceGroup& ref, const std::vector<SpeakerHypothesis>& hyp,
               double frame_s = 0.02, AssignmentMode mode = AssignmentMode::kAuto,
               std::size_t cap = 8);

/// Pooled corpus LDER: sum of numerators over sum of denominators.
LderParts pooled_lder(const std::vector<GroupScore>& scores);

}  // namespace mtsot
