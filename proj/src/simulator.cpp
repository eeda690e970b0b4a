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

#include "mtsot/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include <fmt/core.h>

#include "mtsot/kernels.hpp"
#include "mtsot/parallel.hpp"
#include "mtsot/segmenter.hpp"

namespace mtsot {

void SimConfig::validate() const {
  const auto bad = [](const std::string& what) {
    throw ValidationError(ValidationError::Kind::kConfig, what);
  };
  if (n_groups < 0) bad("n_groups must be >= 0");
  if (max_speakers < 1) bad("max_speakers must be >= 1");
  if (min_speakers < 0 || min_speakers > max_speakers) bad("min_speakers out of range");
  if (!(0.0 <= overlap_low && overlap_low <= overlap_high && overlap_high <= 1.0))
    bad("overlap range must satisfy 0 <= low <= high <= 1");
  if (!(max_group_s > 0)) bad("max_group_s must be positive");
  if (max_retries < 1) bad("max_retries must be >= 1");
  if (!(offset_grid_s > 0)) bad("offset_grid_s must be positive");
  if (!(window_decay > 0 && window_decay <= 1)) bad("window_decay must be in (0, 1]");
}

SpeakerPool make_pool(std::vector<Utterance> utterances) {
  SpeakerPool pool;
  pool.utterances = std::move(utterances);
  std::map<std::string, std::vector<std::size_t>> by;
  for (std::size_t i = 0; i < pool.utterances.size(); ++i)
    by[pool.utterances[i].speaker_id].push_back(i);
  for (auto& [spk, idx] : by) {
    pool.speakers.push_back(spk);
    pool.by_speaker.push_back(std::move(idx));
  }
  return pool;
}

std::string simulated_group_id(std::uint64_t index) { return fmt::format("sim-{:06d}", index); }

namespace {

struct Draw {
  std::vector<std::size_t> sources;
  std::vector<double> offsets;
};

// Speakers with at least one utterance that fits in a group.
std::vector<std::size_t> eligible_speakers(const SpeakerPool& pool, double max_group_s) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < pool.speakers.size(); ++s)
    for (std::size_t u : pool.by_speaker[s])
      if (pool.utterances[u].interval.duration() <= max_group_s) {
        out.push_back(s);
        break;
      }
  return out;
}

UtteranceGroup realize(const SpeakerPool& pool, const Draw& d, const std::string& group_id) {
  UtteranceGroup g;
  g.group_id = group_id;
  g.origin = GroupOrigin::kSimulated;
  const double min_offset = *std::min_element(d.offsets.begin(), d.offsets.end());
  for (std::size_t i = 0; i < d.sources.size(); ++i) {
    const Utterance& src = pool.utterances[d.sources[i]];
    const double shift = (d.offsets[i] - min_offset) - src.interval.start_s;
    Utterance u;
    u.session_id = group_id;
    u.speaker_id = src.speaker_id;
    u.interval = {d.offsets[i] - min_offset, d.offsets[i] - min_offset + src.interval.duration()};
    for (Word w : src.words) {
      if (w.interval) {
        w.interval->start_s = std::clamp(w.interval->start_s + shift, u.interval.start_s,
                                         u.interval.end_s);
        w.interval->end_s =
            std::clamp(w.interval->end_s + shift, w.interval->start_s, u.interval.end_s);
      }
      u.words.push_back(std::move(w));
    }
    g.utterances.push_back(std::move(u));
  }
  std::stable_sort(g.utterances.begin(), g.utterances.end(),
                   [](const Utterance& a, const Utterance& b) {
                     return a.interval.start_s < b.interval.start_s;
                   });
  return g;
}

}  // namespace

SimulatedGroup sample_group(const SpeakerPool& pool, const SimConfig& cfg,
                            std::uint64_t group_index) {
  cfg.validate();
  const auto speakers = eligible_speakers(pool, cfg.max_group_s);
  const int k_min = cfg.min_speakers > 0 ? cfg.min_speakers : (cfg.overlap_low > 0 ? 2 : 1);
  const int k_max = std::min<int>(cfg.max_speakers, static_cast<int>(speakers.size()));
  if (k_max < k_min)
    throw PlacementFailure(fmt::format("pool has {} usable speakers, need at least {}",
                                       speakers.size(), k_min));

  Rng rng(substream_seed(cfg.seed, group_index));
  const std::string group_id = simulated_group_id(group_index);

  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const int k = static_cast<int>(rng.between(k_min, k_max));

    // Partial Fisher-Yates over eligible speakers: k distinct sources.
    std::vector<std::size_t> spk = speakers;
    Draw d;
    double longest = 0.0;
    for (int i = 0; i < k; ++i) {
      std::swap(spk[i], spk[i + rng.below(spk.size() - i)]);
      std::vector<std::size_t> fits;
      for (std::size_t u : pool.by_speaker[spk[i]])
        if (pool.utterances[u].interval.duration() <= cfg.max_group_s) fits.push_back(u);
      const std::size_t u = fits[rng.below(fits.size())];
      d.sources.push_back(u);
      longest = std::max(longest, pool.utterances[u].interval.duration());
    }

    const double window =
        (cfg.max_group_s - longest) * std::pow(cfg.window_decay, attempt);
    const auto slots = static_cast<std::int64_t>(std::floor(window / cfg.offset_grid_s + 1e-9));
    for (int i = 0; i < k; ++i)
      d.offsets.push_back(static_cast<double>(rng.between(0, slots)) * cfg.offset_grid_s);

    UtteranceGroup g = realize(pool, d, group_id);
    const double ratio = overlap_ratio(g);
    if (group_span(g) > cfg.max_group_s) continue;
    if (ratio < cfg.overlap_low || ratio > cfg.overlap_high) continue;

    SimulatedGroup out;
    // realize() sorts utterances by start; keep sources aligned with them.
    std::vector<std::size_t> order(d.sources.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return d.offsets[a] < d.offsets[b];
    });
    for (std::size_t i : order) out.sources.push_back(d.sources[i]);
    out.group = std::move(g);
    out.overlap_ratio = ratio;
    out.attempts = attempt + 1;
    return out;
  }
  throw PlacementFailure(fmt::format("group {}: no placement within overlap [{}, {}] after {} tries",
                                     group_index, cfg.overlap_low, cfg.overlap_high,
                                     cfg.max_retries));
}

SimulationResult simulate(const SpeakerPool& pool, const SimConfig& cfg, int jobs) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_groups);
  std::vector<std::optional<SimulatedGroup>> slots(n);
  std::vector<std::string> errors(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    try {
      slots[i] = sample_group(pool, cfg, i);
    } catch (const PlacementFailure& e) {
      errors[i] = e.what();
    }
  });
  SimulationResult result;
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i])
      result.groups.push_back(std::move(*slots[i]));
    else
      result.failures.emplace_back(i, errors[i]);
  }
  return result;
}

AudioClip mix_waveforms(const UtteranceGroup& g, std::span<const AudioClip> sources,
                        std::span<const float> gains) {
  if (sources.size() != g.utterances.size())
    throw MissingAudio(fmt::format("{} audio sources for {} utterances", sources.size(),
                                   g.utterances.size()));
  if (!gains.empty() && gains.size() != sources.size())
    throw ConfigError("gains must match the number of utterances");
  if (sources.empty()) return {};
  const int rate = sources.front().sample_rate;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].samples.empty())
      throw MissingAudio(fmt::format("no samples for utterance {}", i));
    if (sources[i].sample_rate != rate)
      throw SampleRateMismatch(fmt::format("sample rate {} != {}", sources[i].sample_rate, rate));
  }
  const double origin = group_start(g);
  AudioClip out;
  out.sample_rate = rate;
  out.samples.assign(static_cast<std::size_t>(std::llround(group_span(g) * rate)), 0.0f);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto offset = static_cast<std::size_t>(
        std::llround((g.utterances[i].interval.start_s - origin) * rate));
    if (offset >= out.samples.size()) continue;
    const std::size_t n = std::min(sources[i].samples.size(), out.samples.size() - offset);
    kernels::axpy(gains.empty() ? 1.0f : gains[i], sources[i].samples.data(),
                  out.samples.data() + offset, n);
  }
  return out;
}

}  // namespace mtsot
