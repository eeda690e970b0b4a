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

#include "mtsot/segmenter.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <fmt/core.h>

namespace mtsot {

bool is_legal_boundary(std::span<const Utterance> utts, double t) {
  return std::none_of(utts.begin(), utts.end(), [t](const Utterance& u) {
    return u.interval.start_s < t && t < u.interval.end_s;
  });
}

std::vector<SegmentedGroup> segment_session(std::span<const Utterance> utts,
                                            const SegmentationConfig& cfg) {
  if (utts.empty()) throw EmptyInput("segment_session: no utterances");
  if (!(cfg.max_group_s > 0))
    throw ValidationError(ValidationError::Kind::kConfig, "max_group_s must be positive");
  const std::string& session = utts.front().session_id;

  std::vector<std::size_t> order(utts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return utts[a].interval.start_s < utts[b].interval.start_s;
  });

  std::vector<SegmentedGroup> out;
  std::size_t candidate = 0;
  const auto emit = [&](std::vector<std::size_t> members) {
    SegmentedGroup sg;
    sg.group.group_id = fmt::format("{}-{:04d}", session, candidate++);
    sg.group.origin = GroupOrigin::kSegmented;
    for (std::size_t i : members) sg.group.utterances.push_back(utts[i]);
    std::sort(members.begin(), members.end());
    sg.members = std::move(members);
    sg.overlong = group_span(sg.group) > cfg.max_group_s;
    if (sg.overlong && cfg.drop_overlong) return;
    out.push_back(std::move(sg));
  };

  // Earliest legal boundary: the running group closes as soon as the next
  // utterance starts at or after everything seen so far has ended.
  std::vector<std::size_t> current;
  double reach = 0.0;
  for (std::size_t i : order) {
    if (utts[i].session_id != session)
      throw ValidationError(ValidationError::Kind::kSession,
                            "segment_session: utterances from several sessions");
    if (!current.empty() && utts[i].interval.start_s >= reach) {
      emit(std::move(current));
      current.clear();
    }
    if (current.empty()) reach = utts[i].interval.end_s;
    reach = std::max(reach, utts[i].interval.end_s);
    current.push_back(i);
  }
  emit(std::move(current));
  return out;
}

std::vector<SegmentedGroup> segment_sessions(const std::vector<Utterance>& utts,
                                             const SegmentationConfig& cfg) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Utterance>> sessions;
  for (const Utterance& u : utts) {
    auto [it, inserted] = sessions.try_emplace(u.session_id);
    if (inserted) order.push_back(u.session_id);
    it->second.push_back(u);
  }
  std::vector<SegmentedGroup> out;
  for (const std::string& s : order) {
    auto groups = segment_session(sessions[s], cfg);
    std::move(groups.begin(), groups.end(), std::back_inserter(out));
  }
  return out;
}

OverlapStats overlap_stats(const UtteranceGroup& g) {
  // +1 at each start, -1 at each end; ends sort before starts at equal times
  // so touching utterances do not count as overlap.
  std::vector<std::pair<double, int>> events;
  events.reserve(2 * g.utterances.size());
  for (const Utterance& u : g.utterances) {
    if (u.interval.end_s <= u.interval.start_s) continue;
    events.emplace_back(u.interval.start_s, +1);
    events.emplace_back(u.interval.end_s, -1);
  }
  std::sort(events.begin(), events.end());
  OverlapStats st;
  int active = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i > 0) {
      const double dt = events[i].first - events[i - 1].first;
      if (active >= 1) st.speech_s += dt;
      if (active >= 2) st.overlap_s += dt;
    }
    active += events[i].second;
  }
  return st;
}

}  // namespace mtsot
