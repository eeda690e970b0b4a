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

// Serialized-output-training label codec.
//
// A group is serialized speaker by speaker in first-in-first-out order (by
// the start of each speaker's first utterance). Speakers are separated by
// <sc> and the sequence ends with <eos>. In timestamped mode every
// speaker-homogeneous segment is wrapped as  TS(begin) words... TS(end).
// Timestamps are group-relative: the earliest utterance of the group is 0.

#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtsot/core.hpp"
#include "mtsot/vocabulary.hpp"

namespace mtsot {

using TokenSequence = std::vector<TokenId>;

enum class CodecMode { kPlain, kTimestamped };

const char* mode_name(CodecMode mode);
CodecMode parse_mode(std::string_view name);

/// Task prompt [<start>, <lang>, <transcribe>, <timestamps|notimestamps>].
/// An empty token list means raw payload without prompt.
struct PromptSpec {
  std::vector<TokenId> tokens;
};

PromptSpec make_prompt(const Vocabulary& vocab, std::string_view language, CodecMode mode);
/// Throws VocabularyError unless `p` is empty or a well-formed prompt for `mode`.
void validate_prompt(const PromptSpec& p, const Vocabulary& vocab, CodecMode mode);

/// Maps words to token ids and back.
class TextTokenizer {
 public:
  virtual ~TextTokenizer() = default;
  virtual std::vector<TokenId> encode(std::string_view word, const Vocabulary& vocab) const = 0;
  virtual std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab) const = 0;
};

/// One token per word; out-of-vocabulary words raise VocabularyError.
class WhitespaceTokenizer final : public TextTokenizer {
 public:
  std::vector<TokenId> encode(std::string_view word, const Vocabulary& vocab) const override;
  std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab) const override;
};

struct SpeakerSegment {
  std::string speaker_id;
  TimeInterval interval;
  std::vector<Word> words;
};

struct HypSegment {
  std::optional<TimeInterval> interval;  // absent in plain mode
  std::string text;

  bool operator==(const HypSegment&) const = default;
};

struct SpeakerHypothesis {
  int speaker_index = 0;  // FIFO position
  std::vector<HypSegment> segments;

  /// Whitespace-split words of all segments in order.
  std::vector<std::string> words() const;
};

struct CodecOptions {
  CodecMode mode = CodecMode::kTimestamped;
  /// Keep <sc> between speakers in timestamped mode.
  bool speaker_change_with_timestamps = true;
  /// Build segments from word timings where every word of an utterance has one.
  bool word_timing = false;
  double gap_s = 2.0;
};

/// Speakers ordered by (first utterance start, speaker id).
std::vector<std::string> fifo_order(const UtteranceGroup& g);

/// Merges same-speaker material while the silence between neighbours is at
/// most gap_s; a gap strictly greater than gap_s starts a new segment. Gaps
/// are compared in frames of `resolution_s`. `utts` must share a speaker and
/// be sorted by start. Throws EmptyInput for an empty list.
std::vector<SpeakerSegment> homogeneous_segments(std::span<const Utterance> utts,
                                                 double gap_s = 2.0,
                                                 double resolution_s = 0.02,
                                                 bool word_timing = false);

TokenSequence encode_sot(const UtteranceGroup& g, const CodecOptions& opts,
                         const PromptSpec& prompt, const Vocabulary& vocab,
                         const TextTokenizer& tokenizer);

enum class RepairKind {
  kInvalidToken,
  kPromptTokenInPayload,
  kStrayTimestamp,
  kTextOutsideSegment,
  kOrphanBeginTimestamp,
  kReversedSegment,
  kEmptySegment,
  kEmptySpeakerBlock,
  kMissingEos,
  kTrailingTokens,
};

const char* repair_name(RepairKind kind);

struct Repair {
  RepairKind kind;
  std::size_t position;  // index into the decoded token sequence
};

enum class PromptHandling {
  kAuto,      // strip any leading prompt-class tokens
  kRequired,  // a full 4-token prompt must be present
  kNone,      // sequence is raw payload
};

struct DecodeOptions {
  CodecMode mode = CodecMode::kTimestamped;
  bool strict = true;
  PromptHandling prompt = PromptHandling::kAuto;
  /// End time used to close unterminated segments; defaults to vocab.max_time_s().
  std::optional<double> group_length_s;
};

struct DecodeResult {
  std::vector<SpeakerHypothesis> speakers;
  std::vector<Repair> repairs;
};

/// Splits a token sequence back into speakers and segments. In strict mode any
/// malformation throws MalformedSequence; otherwise it is repaired and
/// recorded in `repairs`. Lenient decoding never throws.
DecodeResult decode_sot(std::span<const TokenId> seq, const DecodeOptions& opts,
                        const Vocabulary& vocab,
                        const TextTokenizer& tokenizer = WhitespaceTokenizer());

/// Number of speaker blocks holding at least one text token.
int count_speakers(std::span<const TokenId> seq, const Vocabulary& vocab);

/// Space-joined rendering with "<|1.24|>" style timestamps.
std::string render_tokens(std::span<const TokenId> seq, const Vocabulary& vocab);

/// Hypotheses for a reference group: one segment per utterance, in group-local
/// time, speakers in FIFO order.
std::vector<SpeakerHypothesis> reference_as_hypothesis(const UtteranceGroup& g);

// JSON-lines records.
//   tokens:      {"group_id": str, "ids": [int, ...], "text"?: str}
//   hypotheses:  {"group_id": str, "speakers": [{"segments": [{"start_s"?, "end_s"?, "text"}]}]}
//   repairs:     {"group_id": str, "repairs": [{"kind": str, "position": int}]}
struct TokenRecord {
  std::string group_id;
  TokenSequence ids;
};

struct HypothesisRecord {
  std::string group_id;
  std::vector<SpeakerHypothesis> speakers;
};

void write_token_record(std::ostream& out, const TokenRecord& rec,
                        const Vocabulary* render_with = nullptr);
std::vector<TokenRecord> read_token_records(std::istream& in);

nlohmann::ordered_json hypothesis_to_json(const HypothesisRecord& rec);
void write_hypothesis_record(std::ostream& out, const HypothesisRecord& rec);
std::vector<HypothesisRecord> read_hypothesis_records(std::istream& in);

void write_repair_record(std::ostream& out, const std::string& group_id,
                         const std::vector<Repair>& repairs);

}  // namespace mtsot
