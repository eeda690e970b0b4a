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

#include "mtsot/report.hpp"

#include <map>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "mtsot/lder.hpp"

namespace mtsot {

using nlohmann::ordered_json;

long SpeakerCountConfusion::row_total(int actual) const {
  long t = 0;
  for (long c : counts[static_cast<std::size_t>(actual - 1)]) t += c;
  return t;
}

double SpeakerCountConfusion::percent(int actual, int col) const {
  const long total = row_total(actual);
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(counts[static_cast<std::size_t>(actual - 1)]
                                           [static_cast<std::size_t>(col)]) /
         static_cast<double>(total);
}

bool SpeakerCountConfusion::any_zero_estimates() const {
  for (const auto& row : counts)
    if (row[0] > 0) return true;
  return false;
}

SpeakerCountConfusion speaker_count_confusion(const std::vector<GroupScore>& scores) {
  SpeakerCountConfusion m;
  for (const GroupScore& s : scores) {
    if (s.ref_speakers < 1 || s.ref_speakers > SpeakerCountConfusion::kRows) continue;
    const int col = std::min(s.hyp_speakers, SpeakerCountConfusion::kCols - 1);
    ++m.counts[static_cast<std::size_t>(s.ref_speakers - 1)][static_cast<std::size_t>(col)];
  }
  return m;
}

BreakdownRow error_rate_row(const std::string& label, const ErrorRateReport& r) {
  BreakdownRow row{label, r.overall.ref_len > 0 ? std::optional(r.rate()) : std::nullopt, {}};
  for (int k = 1; k <= 4; ++k)
    if (auto it = r.by_speakers.find(k); it != r.by_speakers.end() && it->second.ref_len > 0)
      row.by_count[static_cast<std::size_t>(k - 1)] = it->second.rate();
  return row;
}

BreakdownRow lder_row(const std::string& label, const std::vector<GroupScore>& scores) {
  std::map<int, LderParts> by;
  LderParts total;
  for (const GroupScore& s : scores) {
    if (!s.lder_parts) continue;
    total += *s.lder_parts;
    by[s.ref_speakers] += *s.lder_parts;
  }
  BreakdownRow row{label, total.ref_frames > 0 ? std::optional(total.rate()) : std::nullopt, {}};
  for (int k = 1; k <= 4; ++k)
    if (auto it = by.find(k); it != by.end() && it->second.ref_frames > 0)
      row.by_count[static_cast<std::size_t>(k - 1)] = it->second.rate();
  return row;
}

namespace {

std::string cell(std::optional<double> fraction) {
  return fraction ? fmt::format("{:.1f}", 100.0 * *fraction) : std::string("-");
}

}  // namespace

std::string render_breakdown_table(const std::vector<BreakdownRow>& rows) {
  std::size_t label_w = 6;
  for (const BreakdownRow& r : rows) label_w = std::max(label_w, r.label.size());
  std::string out = fmt::format("{:<{}}  {:>6} {:>6} {:>6} {:>6} {:>6}\n", "", label_w, "avg.",
                                "1", "2", "3", "4");
  for (const BreakdownRow& r : rows) {
    out += fmt::format("{:<{}}  {:>6}", r.label, label_w, cell(r.avg));
    for (const auto& v : r.by_count) out += fmt::format(" {:>6}", cell(v));
    out += '\n';
  }
  return out;
}

std::string render_confusion_table(const SpeakerCountConfusion& m) {
  const bool zero = m.any_zero_estimates();
  const int first = zero ? 0 : 1;
  const int ncols = SpeakerCountConfusion::kCols - first;
  const std::string head_label = "Actual # of talkers";
  std::string out = fmt::format("{:<{}} | Estimated # of talkers (%)\n", "", head_label.size());
  out += fmt::format("{} |", head_label);
  for (int c = first; c < SpeakerCountConfusion::kCols; ++c)
    out += fmt::format(" {:>6}", c == SpeakerCountConfusion::kCols - 1 ? ">=5" : std::to_string(c));
  out += '\n';
  out += std::string(head_label.size(), '-') + "-+" + std::string(7 * ncols, '-') + '\n';
  for (int a = 1; a <= SpeakerCountConfusion::kRows; ++a) {
    out += fmt::format("{:<{}} |", a, head_label.size());
    for (int c = first; c < SpeakerCountConfusion::kCols; ++c)
      out += m.row_total(a) ? fmt::format(" {:>6.1f}", m.percent(a, c)) : fmt::format(" {:>6}", "-");
    out += '\n';
  }
  return out;
}

ordered_json confusion_to_json(const SpeakerCountConfusion& m) {
  ordered_json j;
  j["columns"] = {"0", "1", "2", "3", "4", ">=5"};
  ordered_json rows = ordered_json::object();
  for (int a = 1; a <= SpeakerCountConfusion::kRows; ++a) {
    ordered_json r;
    r["groups"] = m.row_total(a);
    r["counts"] = m.counts[static_cast<std::size_t>(a - 1)];
    ordered_json pct = ordered_json::array();
    for (int c = 0; c < SpeakerCountConfusion::kCols; ++c) pct.push_back(m.percent(a, c));
    r["percent"] = std::move(pct);
    r["accuracy"] = m.accuracy(a);
    rows[std::to_string(a)] = std::move(r);
  }
  j["rows"] = std::move(rows);
  return j;
}

ordered_json error_rate_to_json(const ErrorRateReport& r) {
  const auto cell_json = [](const RateCell& c) {
    ordered_json j;
    j["rate"] = c.rate();
    j["errors"] = c.errors;
    j["ref_len"] = c.ref_len;
    j["groups"] = c.groups;
    return j;
  };
  ordered_json j = cell_json(r.overall);
  ordered_json by = ordered_json::object();
  for (auto& [k, c] : r.by_speakers) by[std::to_string(k)] = cell_json(c);
  j["by_speakers"] = std::move(by);
  return j;
}

ordered_json lder_to_json(const std::vector<GroupScore>& scores) {
  const auto parts_json = [](const LderParts& p) {
    ordered_json j;
    j["rate"] = p.rate();
    j["miss_s"] = p.miss_s;
    j["false_alarm_s"] = p.false_alarm_s;
    j["confusion_s"] = p.confusion_s;
    j["ref_speech_s"] = p.ref_speech_s;
    return j;
  };
  std::map<int, LderParts> by;
  for (const GroupScore& s : scores)
    if (s.lder_parts) by[s.ref_speakers] += *s.lder_parts;
  ordered_json j = parts_json(pooled_lder(scores));
  ordered_json jb = ordered_json::object();
  for (auto& [k, p] : by) jb[std::to_string(k)] = parts_json(p);
  j["by_speakers"] = std::move(jb);
  return j;
}

void write_reference_rttm(std::ostream& out, const UtteranceGroup& group) {
  const UtteranceGroup g = rebase(group);
  for (const Utterance& u : g.utterances)
    out << fmt::format("SPEAKER {} 1 {:.3f} {:.3f} <NA> <NA> {} <NA> <NA>\n", g.group_id,
                       u.interval.start_s, u.interval.duration(), u.speaker_id);
}

void write_hypothesis_rttm(std::ostream& out, const std::string& group_id,
                           const std::vector<SpeakerHypothesis>& hyp) {
  for (const SpeakerHypothesis& h : hyp)
    for (const HypSegment& s : h.segments)
      if (s.interval)
        out << fmt::format("SPEAKER {} 1 {:.3f} {:.3f} <NA> <NA> spk{} <NA> <NA>\n", group_id,
                           s.interval->start_s, s.interval->duration(), h.speaker_index);
}

}  // namespace mtsot
