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

#include "mtsot/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/core.h>

namespace mtsot {

using Kind = ValidationError::Kind;

void check_interval(const TimeInterval& iv, std::size_t line) {
  if (!std::isfinite(iv.start_s) || !std::isfinite(iv.end_s))
    throw ValidationError(Kind::kInterval, "non-finite time", line);
  if (iv.start_s < 0.0)
    throw ValidationError(Kind::kInterval, fmt::format("negative start {}", iv.start_s), line);
  if (iv.end_s < iv.start_s)
    throw ValidationError(Kind::kInterval,
                          fmt::format("end_s {} < start_s {}", iv.end_s, iv.start_s), line);
}

void validate_utterance(const Utterance& u, std::size_t line) {
  check_interval(u.interval, line);
  if (u.words.empty()) throw ValidationError(Kind::kWords, "utterance has no words", line);
  double prev_start = -std::numeric_limits<double>::infinity();
  for (const Word& w : u.words) {
    if (w.text.empty()) throw ValidationError(Kind::kWords, "empty word", line);
    if (std::any_of(w.text.begin(), w.text.end(),
                    [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }))
      throw ValidationError(Kind::kWords, fmt::format("word '{}' contains whitespace", w.text),
                            line);
    if (!w.interval) continue;
    check_interval(*w.interval, line);
    if (w.interval->start_s < u.interval.start_s || w.interval->end_s > u.interval.end_s)
      throw ValidationError(Kind::kWords,
                            fmt::format("word '{}' lies outside its utterance", w.text), line);
    if (w.interval->start_s < prev_start)
      throw ValidationError(Kind::kWords, "word start times decrease", line);
    prev_start = w.interval->start_s;
  }
}

void check_speaker_overlap(const std::vector<Utterance>& utts) {
  std::map<std::pair<std::string, std::string>, std::vector<TimeInterval>> by_speaker;
  for (const Utterance& u : utts) by_speaker[{u.session_id, u.speaker_id}].push_back(u.interval);
  for (auto& [key, ivs] : by_speaker) {
    std::sort(ivs.begin(), ivs.end(),
              [](const TimeInterval& a, const TimeInterval& b) { return a.start_s < b.start_s; });
    for (std::size_t i = 1; i < ivs.size(); ++i) {
      if (ivs[i].start_s < ivs[i - 1].end_s)
        throw ValidationError(Kind::kSpeakerOverlap,
                              fmt::format("speaker '{}' in session '{}' overlaps itself at {}s",
                                          key.second, key.first, ivs[i].start_s));
    }
  }
}

void validate_group(const UtteranceGroup& g, const GroupLimits& limits) {
  if (limits.max_group_s <= 0.0 || limits.max_speakers < 1)
    throw ValidationError(Kind::kConfig, "group limits must be positive");
  if (g.utterances.empty())
    throw ValidationError(Kind::kEmpty, fmt::format("group '{}' is empty", g.group_id));
  for (const Utterance& u : g.utterances) {
    validate_utterance(u);
    if (u.session_id != g.utterances.front().session_id)
      throw ValidationError(Kind::kSession,
                            fmt::format("group '{}' mixes sessions", g.group_id));
  }
  const double span = group_span(g);
  if (span > limits.max_group_s)
    throw ValidationError(Kind::kSpan, fmt::format("group '{}' spans {}s > {}s", g.group_id,
                                                   span, limits.max_group_s));
  const auto speakers = distinct_speakers(g);
  if (static_cast<int>(speakers.size()) > limits.max_speakers)
    throw ValidationError(Kind::kSpeakers,
                          fmt::format("group '{}' has {} speakers > {}", g.group_id,
                                      speakers.size(), limits.max_speakers));
  check_speaker_overlap(g.utterances);
}

double group_start(const UtteranceGroup& g) {
  double s = std::numeric_limits<double>::infinity();
  for (const Utterance& u : g.utterances) s = std::min(s, u.interval.start_s);
  return g.utterances.empty() ? 0.0 : s;
}

double group_end(const UtteranceGroup& g) {
  double e = 0.0;
  for (const Utterance& u : g.utterances) e = std::max(e, u.interval.end_s);
  return e;
}

std::vector<std::string> distinct_speakers(const UtteranceGroup& g) {
  std::set<std::string> s;
  for (const Utterance& u : g.utterances) s.insert(u.speaker_id);
  return {s.begin(), s.end()};
}

UtteranceGroup rebase(const UtteranceGroup& g) {
  UtteranceGroup out = g;
  const double origin = group_start(g);
  for (Utterance& u : out.utterances) {
    u.interval.start_s -= origin;
    u.interval.end_s -= origin;
    for (Word& w : u.words) {
      if (!w.interval) continue;
      w.interval->start_s -= origin;
      w.interval->end_s -= origin;
    }
  }
  return out;
}

std::vector<std::string> speaker_words(const UtteranceGroup& g, const std::string& speaker_id) {
  std::vector<const Utterance*> mine;
  for (const Utterance& u : g.utterances)
    if (u.speaker_id == speaker_id) mine.push_back(&u);
  std::stable_sort(mine.begin(), mine.end(), [](const Utterance* a, const Utterance* b) {
    return a->interval.start_s < b->interval.start_s;
  });
  std::vector<std::string> words;
  for (const Utterance* u : mine)
    for (const Word& w : u->words) words.push_back(w.text);
  return words;
}

}  // namespace mtsot
