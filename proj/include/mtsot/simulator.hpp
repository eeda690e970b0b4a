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

// Meeting-style group simulation from a single-talker utterance pool.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtsot/core.hpp"
#include "mtsot/rng.hpp"

namespace mtsot {

struct SimConfig {
  int n_groups = 100;
  int max_speakers = 4;
  /// 0 picks 1 when overlap_low == 0 and 2 otherwise.
  int min_speakers = 0;
  double max_group_s = 30.0;
  double overlap_low = 0.60;
  double overlap_high = 0.80;
  std::uint64_t seed = 0;
  int max_retries = 100;
  /// Start offsets are multiples of this step.
  double offset_grid_s = 0.01;
  /// Placement window shrinks by this factor after each rejected attempt.
  double window_decay = 0.85;

  void validate() const;
};

/// Pool utterances indexed by source speaker, speakers in lexicographic order.
struct SpeakerPool {
  std::vector<Utterance> utterances;
  std::vector<std::string> speakers;
  std::vector<std::vector<std::size_t>> by_speaker;  // indices into utterances
};

SpeakerPool make_pool(std::vector<Utterance> utterances);

struct SimulatedGroup {
  UtteranceGroup group;
  std::vector<std::size_t> sources;  // pool utterance index per group utterance
  double overlap_ratio = 0.0;
  int attempts = 0;
};

std::string simulated_group_id(std::uint64_t index);

/// Rejection sampler: each attempt picks k distinct pool speakers, one
/// utterance each, and grid-aligned start offsets uniform over a window that
/// shrinks after every rejection. Deterministic in (pool, cfg, group_index).
/// Throws PlacementFailure after cfg.max_retries attempts.
SimulatedGroup sample_group(const SpeakerPool& pool, const SimConfig& cfg,
                            std::uint64_t group_index);

struct SimulationResult {
  std::vector<SimulatedGroup> groups;
  std::vector<std::pair<std::uint64_t, std::string>> failures;
};

/// cfg.n_groups independent draws; failed placements are reported and skipped.
SimulationResult simulate(const SpeakerPool& pool, const SimConfig& cfg, int jobs = 1);

struct AudioClip {
  int sample_rate = 16000;
  std::vector<float> samples;
};

/// Sum of gain-scaled sources placed at their group-relative offsets; output
/// length is the group span. `sources` and `gains` run parallel to
/// g.utterances (empty gains means unit gain). Throws MissingAudio or
/// SampleRateMismatch.
AudioClip mix_waveforms(const UtteranceGroup& g, std::span<const AudioClip> sources,
                        std::span<const float> gains = {});

}  // namespace mtsot
