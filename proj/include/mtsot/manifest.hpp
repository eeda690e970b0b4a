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

// JSON-lines manifests.
//
// Reference manifest, one utterance per line:
//   {"session": str, "speaker": str, "start_s": num, "end_s": num,
//    "words": [{"w": str, "start_s"?: num, "end_s"?: num}, ...]}
// Group manifest, one group per line:
//   {"group_id": str, "session": str, "start_s": num, "end_s": num}

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtsot/core.hpp"

namespace mtsot {

/// Calls `fn(record, line_number)` for every non-blank line. Throws
/// FormatError on unparsable JSON.
void for_each_jsonl(std::istream& in,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

std::vector<Utterance> read_reference_manifest(std::istream& in);
std::vector<Utterance> load_reference_manifest(const std::filesystem::path& path);

void write_reference_manifest(std::ostream& out, const std::vector<Utterance>& utts);
void save_reference_manifest(const std::filesystem::path& path,
                             const std::vector<Utterance>& utts);

nlohmann::ordered_json utterance_to_json(const Utterance& u);

struct GroupRecord {
  std::string group_id;
  std::string session_id;
  TimeInterval interval;
  bool overlong = false;
};

std::vector<GroupRecord> read_group_manifest(std::istream& in);
std::vector<GroupRecord> load_group_manifest(const std::filesystem::path& path);
void write_group_manifest(std::ostream& out, const std::vector<GroupRecord>& groups);

GroupRecord group_record(const UtteranceGroup& g);

/// Rebuilds groups from a group manifest: every utterance of the session whose
/// interval lies inside the record's interval belongs to that group.
std::vector<UtteranceGroup> assemble_groups(const std::vector<Utterance>& utts,
                                            const std::vector<GroupRecord>& records);

/// Throws FormatError with `line` if `path` cannot be opened.
std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace mtsot
