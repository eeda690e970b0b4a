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

#include "mtsot/manifest.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <fmt/core.h>

namespace mtsot {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const json& require(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw FormatError(fmt::format("missing key '{}'", key), line);
  return *it;
}

std::string require_string(const json& rec, const char* key, std::size_t line) {
  const json& v = require(rec, key, line);
  if (!v.is_string()) throw FormatError(fmt::format("'{}' must be a string", key), line);
  return v.get<std::string>();
}

double require_number(const json& rec, const char* key, std::size_t line) {
  const json& v = require(rec, key, line);
  if (!v.is_number()) throw FormatError(fmt::format("'{}' must be a number", key), line);
  return v.get<double>();
}

Utterance parse_utterance(const json& rec, std::size_t line) {
  if (!rec.is_object()) throw FormatError("record must be a JSON object", line);
  Utterance u;
  u.session_id = require_string(rec, "session", line);
  u.speaker_id = require_string(rec, "speaker", line);
  u.interval = {require_number(rec, "start_s", line), require_number(rec, "end_s", line)};
  const json& words = require(rec, "words", line);
  if (!words.is_array()) throw FormatError("'words' must be an array", line);
  for (const json& w : words) {
    if (!w.is_object()) throw FormatError("word must be an object", line);
    Word word;
    word.text = require_string(w, "w", line);
    const bool has_start = w.contains("start_s");
    const bool has_end = w.contains("end_s");
    if (has_start != has_end) throw FormatError("word timing needs both start_s and end_s", line);
    if (has_start) word.interval = TimeInterval{require_number(w, "start_s", line),
                                                require_number(w, "end_s", line)};
    u.words.push_back(std::move(word));
  }
  validate_utterance(u, line);
  return u;
}

}  // namespace

void for_each_jsonl(std::istream& in,
                    const std::function<void(const json&, std::size_t)>& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(fmt::format("invalid JSON: {}", e.what()), line);
    }
    fn(rec, line);
  }
}

std::vector<Utterance> read_reference_manifest(std::istream& in) {
  std::vector<Utterance> parsed;
  std::vector<std::size_t> lines;
  for_each_jsonl(in, [&](const json& rec, std::size_t line) {
    parsed.push_back(parse_utterance(rec, line));
    lines.push_back(line);
  });

  // Same-speaker overlap check, reporting the later line.
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < parsed.size(); ++i)
    by_speaker[{parsed[i].session_id, parsed[i].speaker_id}].push_back(i);
  for (auto& [key, idx] : by_speaker) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return parsed[a].interval.start_s < parsed[b].interval.start_s;
    });
    for (std::size_t k = 1; k < idx.size(); ++k) {
      const Utterance& prev = parsed[idx[k - 1]];
      const Utterance& cur = parsed[idx[k]];
      if (cur.interval.start_s < prev.interval.end_s)
        throw ValidationError(ValidationError::Kind::kSpeakerOverlap,
                              fmt::format("speaker '{}' overlaps itself in session '{}'",
                                          key.second, key.first),
                              std::max(lines[idx[k - 1]], lines[idx[k]]));
    }
  }

  // Group by session in order of first appearance, keeping input order within.
  std::vector<std::string> order;
  std::map<std::string, std::vector<Utterance>> sessions;
  for (Utterance& u : parsed) {
    auto [it, inserted] = sessions.try_emplace(u.session_id);
    if (inserted) order.push_back(u.session_id);
    it->second.push_back(std::move(u));
  }
  std::vector<Utterance> out;
  out.reserve(parsed.size());
  for (const std::string& s : order)
    for (Utterance& u : sessions[s]) out.push_back(std::move(u));
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::vector<Utterance> load_reference_manifest(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_reference_manifest(in);
}

ordered_json utterance_to_json(const Utterance& u) {
  ordered_json rec;
  rec["session"] = u.session_id;
  rec["speaker"] = u.speaker_id;
  rec["start_s"] = u.interval.start_s;
  rec["end_s"] = u.interval.end_s;
  ordered_json words = ordered_json::array();
  for (const Word& w : u.words) {
    ordered_json jw;
    jw["w"] = w.text;
    if (w.interval) {
      jw["start_s"] = w.interval->start_s;
      jw["end_s"] = w.interval->end_s;
    }
    words.push_back(std::move(jw));
  }
  rec["words"] = std::move(words);
  return rec;
}

void write_reference_manifest(std::ostream& out, const std::vector<Utterance>& utts) {
  for (const Utterance& u : utts) out << utterance_to_json(u).dump() << '\n';
}

void save_reference_manifest(const std::filesystem::path& path,
                             const std::vector<Utterance>& utts) {
  auto out = open_output(path);
  write_reference_manifest(out, utts);
}

std::vector<GroupRecord> read_group_manifest(std::istream& in) {
  std::vector<GroupRecord> out;
  for_each_jsonl(in, [&](const json& rec, std::size_t line) {
    if (!rec.is_object()) throw FormatError("record must be a JSON object", line);
    GroupRecord g;
    g.group_id = require_string(rec, "group_id", line);
    g.session_id = require_string(rec, "session", line);
    g.interval = {require_number(rec, "start_s", line), require_number(rec, "end_s", line)};
    if (auto it = rec.find("overlong"); it != rec.end() && it->is_boolean())
      g.overlong = it->get<bool>();
    check_interval(g.interval, line);
    out.push_back(std::move(g));
  });
  return out;
}

std::vector<GroupRecord> load_group_manifest(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_group_manifest(in);
}

void write_group_manifest(std::ostream& out, const std::vector<GroupRecord>& groups) {
  for (const GroupRecord& g : groups) {
    ordered_json rec;
    rec["group_id"] = g.group_id;
    rec["session"] = g.session_id;
    rec["start_s"] = g.interval.start_s;
    rec["end_s"] = g.interval.end_s;
    if (g.overlong) rec["overlong"] = true;
    out << rec.dump() << '\n';
  }
}

GroupRecord group_record(const UtteranceGroup& g) {
  GroupRecord r;
  r.group_id = g.group_id;
  r.session_id = g.utterances.empty() ? std::string() : g.utterances.front().session_id;
  r.interval = {group_start(g), group_end(g)};
  return r;
}

std::vector<UtteranceGroup> assemble_groups(const std::vector<Utterance>& utts,
                                            const std::vector<GroupRecord>& records) {
  std::vector<UtteranceGroup> groups;
  groups.reserve(records.size());
  for (const GroupRecord& r : records) {
    UtteranceGroup g;
    g.group_id = r.group_id;
    for (const Utterance& u : utts) {
      if (u.session_id != r.session_id) continue;
      if (u.interval.start_s >= r.interval.start_s && u.interval.end_s <= r.interval.end_s)
        g.utterances.push_back(u);
    }
    if (g.utterances.empty())
      throw ValidationError(ValidationError::Kind::kEmpty,
                            fmt::format("group '{}' matches no utterances", r.group_id));
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace mtsot
