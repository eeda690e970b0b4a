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

#include "mtsot/lder.hpp"

#include <algorithm>

#include <fmt/core.h>

#include "mtsot/vocabulary.hpp"

namespace mtsot {

namespace {

using Activity = std::vector<char>;

void mark(Activity& a, const TimeInterval& iv, double frame_s) {
  const long long b = std::max(0LL, to_frames(iv.start_s, frame_s));
  const long long e = to_frames(iv.end_s, frame_s);
  if (e > static_cast<long long>(a.size())) a.resize(static_cast<std::size_t>(e), 0);
  for (long long f = b; f < e; ++f) a[static_cast<std::size_t>(f)] = 1;
}

}  // namespace

LderParts lder(const UtteranceGroup& group, const std::vector<SpeakerHypothesis>& hyp,
               double frame_s, AssignmentMode mode, std::size_t cap) {
  const UtteranceGroup ref = rebase(group);
  std::vector<Activity> ref_act, hyp_act;
  for (const std::string& spk : fifo_order(ref)) {
    Activity a;
    for (const Utterance& u : ref.utterances)
      if (u.speaker_id == spk) mark(a, u.interval, frame_s);
    ref_act.push_back(std::move(a));
  }
  for (const SpeakerHypothesis& h : hyp) {
    Activity a;
    for (const HypSegment& s : h.segments)
      if (s.interval) mark(a, *s.interval, frame_s);
    hyp_act.push_back(std::move(a));
  }
  std::size_t frames = 0;
  for (auto* set : {&ref_act, &hyp_act})
    for (const Activity& a : *set) frames = std::max(frames, a.size());
  for (auto* set : {&ref_act, &hyp_act})
    for (Activity& a : *set) a.resize(frames, 0);

  long miss = 0, fa = 0, overlap_sum = 0, ref_total = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    long nr = 0, nh = 0;
    for (const Activity& a : ref_act) nr += a[f];
    for (const Activity& a : hyp_act) nh += a[f];
    miss += std::max(0L, nr - nh);
    fa += std::max(0L, nh - nr);
    overlap_sum += std::min(nr, nh);
    ref_total += nr;
  }
  if (ref_total == 0)
    throw NoReferenceSpeech(fmt::format("group '{}' has no reference speech", group.group_id));

  // Speaker mapping that maximizes co-active frames.
  const std::size_t n = std::max(ref_act.size(), hyp_act.size());
  std::vector<double> cost(n * n, 0.0);
  for (std::size_t r = 0; r < ref_act.size(); ++r)
    for (std::size_t h = 0; h < hyp_act.size(); ++h) {
      long both = 0;
      for (std::size_t f = 0; f < frames; ++f) both += ref_act[r][f] & hyp_act[h][f];
      cost[r * n + h] = -static_cast<double>(both);
    }
  if (mode == AssignmentMode::kExhaustive && n > cap)
    throw CapExceeded(fmt::format("{} speakers exceed the exhaustive cap of {}", n, cap));
  const bool exhaustive =
      mode == AssignmentMode::kExhaustive || (mode == AssignmentMode::kAuto && n <= cap);
  const std::vector<int> perm = exhaustive ? exhaustive_assignment(cost, n) : hungarian(cost, n);
  long correct = 0;
  for (std::size_t r = 0; r < n; ++r)
    correct -= static_cast<long>(cost[r * n + static_cast<std::size_t>(perm[r])]);

  LderParts p;
  p.miss_s = miss * frame_s;
  p.false_alarm_s = fa * frame_s;
  p.confusion_s = (overlap_sum - correct) * frame_s;
  p.ref_speech_s = ref_total * frame_s;
  p.error_frames = miss + fa + (overlap_sum - correct);
  p.ref_frames = ref_total;
  return p;
}

LderParts pooled_lder(const std::vector<GroupScore>& scores) {
  LderParts total;
  for (const GroupScore& s : scores)
    if (s.lder_parts) total += *s.lder_parts;
  return total;
}

}  // namespace mtsot
