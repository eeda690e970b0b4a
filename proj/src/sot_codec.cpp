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

#include "mtsot/sot_codec.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <fmt/core.h>

#include "mtsot/manifest.hpp"

namespace mtsot {

using nlohmann::json;
using nlohmann::ordered_json;

const char* mode_name(CodecMode mode) {
  return mode == CodecMode::kPlain ? "plain" : "timestamped";
}

CodecMode parse_mode(std::string_view name) {
  if (name == "plain") return CodecMode::kPlain;
  if (name == "timestamped") return CodecMode::kTimestamped;
  throw ConfigError(fmt::format("unknown codec mode '{}'", name));
}

PromptSpec make_prompt(const Vocabulary& vocab, std::string_view language, CodecMode mode) {
  auto lang = vocab.language(language);
  if (!lang) throw VocabularyError(fmt::format("no language token for '{}'", language));
  return {{vocab.special(Special::kStart), *lang, vocab.special(Special::kTranscribe),
           vocab.special(mode == CodecMode::kTimestamped ? Special::kTimestamps
                                                         : Special::kNoTimestamps)}};
}

void validate_prompt(const PromptSpec& p, const Vocabulary& vocab, CodecMode mode) {
  if (p.tokens.empty()) return;
  const Special ts_mode =
      mode == CodecMode::kTimestamped ? Special::kTimestamps : Special::kNoTimestamps;
  const bool ok = p.tokens.size() == 4 && p.tokens[0] == vocab.special(Special::kStart) &&
                  vocab.valid(p.tokens[1]) &&
                  vocab.classify(p.tokens[1]) == TokenClass::kLanguage &&
                  p.tokens[2] == vocab.special(Special::kTranscribe) &&
                  p.tokens[3] == vocab.special(ts_mode);
  if (!ok)
    throw VocabularyError(
        fmt::format("prompt must be [start, language, transcribe, {}]", special_name(ts_mode)));
}

std::vector<TokenId> WhitespaceTokenizer::encode(std::string_view word,
                                                 const Vocabulary& vocab) const {
  auto id = vocab.text_id(word);
  if (!id) throw VocabularyError(fmt::format("word '{}' is not in the vocabulary", word));
  return {*id};
}

std::string WhitespaceTokenizer::decode(std::span<const TokenId> ids,
                                        const Vocabulary& vocab) const {
  std::string out;
  for (TokenId id : ids) {
    if (!out.empty()) out += ' ';
    out += vocab.text(id);
  }
  return out;
}

std::vector<std::string> SpeakerHypothesis::words() const {
  std::vector<std::string> out;
  for (const HypSegment& s : segments) {
    std::istringstream ss(s.text);
    std::string w;
    while (ss >> w) out.push_back(w);
  }
  return out;
}

std::vector<std::string> fifo_order(const UtteranceGroup& g) {
  std::map<std::string, double> first_start;
  for (const Utterance& u : g.utterances) {
    auto [it, inserted] = first_start.try_emplace(u.speaker_id, u.interval.start_s);
    if (!inserted) it->second = std::min(it->second, u.interval.start_s);
  }
  std::vector<std::pair<double, std::string>> keyed;
  for (auto& [spk, t] : first_start) keyed.emplace_back(t, spk);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (auto& [t, spk] : keyed) out.push_back(spk);
  return out;
}

namespace {

struct Piece {
  TimeInterval interval;
  std::vector<Word> words;
};

std::vector<Piece> pieces_of(std::span<const Utterance> utts, bool word_timing) {
  std::vector<Piece> out;
  for (const Utterance& u : utts) {
    const bool all_timed = word_timing && std::all_of(u.words.begin(), u.words.end(),
                                                      [](const Word& w) { return w.interval; });
    if (all_timed) {
      for (const Word& w : u.words) out.push_back({*w.interval, {w}});
    } else {
      out.push_back({u.interval, u.words});
    }
  }
  return out;
}

}  // namespace

std::vector<SpeakerSegment> homogeneous_segments(std::span<const Utterance> utts, double gap_s,
                                                 double resolution_s, bool word_timing) {
  if (utts.empty()) throw EmptyInput("homogeneous_segments: no utterances");
  const long long gap_frames = to_frames(gap_s, resolution_s);
  std::vector<SpeakerSegment> out;
  for (const Piece& p : pieces_of(utts, word_timing)) {
    if (!out.empty()) {
      SpeakerSegment& cur = out.back();
      const long long gap =
          to_frames(p.interval.start_s, resolution_s) - to_frames(cur.interval.end_s, resolution_s);
      if (gap <= gap_frames) {
        cur.interval.end_s = std::max(cur.interval.end_s, p.interval.end_s);
        cur.words.insert(cur.words.end(), p.words.begin(), p.words.end());
        continue;
      }
    }
    out.push_back({utts.front().speaker_id, p.interval, p.words});
  }
  return out;
}

TokenSequence encode_sot(const UtteranceGroup& group, const CodecOptions& opts,
                         const PromptSpec& prompt, const Vocabulary& vocab,
                         const TextTokenizer& tokenizer) {
  validate_prompt(prompt, vocab, opts.mode);
  const UtteranceGroup g = rebase(group);
  TokenSequence seq = prompt.tokens;

  const auto push_words = [&](const std::vector<Word>& words) {
    for (const Word& w : words) {
      auto ids = tokenizer.encode(w.text, vocab);
      seq.insert(seq.end(), ids.begin(), ids.end());
    }
  };

  const auto speakers = fifo_order(g);
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    std::vector<Utterance> mine;
    for (const Utterance& u : g.utterances)
      if (u.speaker_id == speakers[s]) mine.push_back(u);
    std::stable_sort(mine.begin(), mine.end(), [](const Utterance& a, const Utterance& b) {
      return a.interval.start_s < b.interval.start_s;
    });

    if (s > 0 &&
        (opts.mode == CodecMode::kPlain || opts.speaker_change_with_timestamps))
      seq.push_back(vocab.special(Special::kSpeakerChange));

    if (opts.mode == CodecMode::kPlain) {
      for (const Utterance& u : mine) push_words(u.words);
      continue;
    }
    for (const SpeakerSegment& seg :
         homogeneous_segments(mine, opts.gap_s, vocab.resolution_s(), opts.word_timing)) {
      seq.push_back(quantize_time(seg.interval.start_s, vocab));
      push_words(seg.words);
      seq.push_back(quantize_time(seg.interval.end_s, vocab));
    }
  }
  seq.push_back(vocab.special(Special::kEos));
  return seq;
}

const char* repair_name(RepairKind kind) {
  switch (kind) {
    case RepairKind::kInvalidToken: return "invalid_token";
    case RepairKind::kPromptTokenInPayload: return "prompt_token_in_payload";
    case RepairKind::kStrayTimestamp: return "stray_timestamp";
    case RepairKind::kTextOutsideSegment: return "text_outside_segment";
    case RepairKind::kOrphanBeginTimestamp: return "orphan_begin_timestamp";
    case RepairKind::kReversedSegment: return "reversed_segment";
    case RepairKind::kEmptySegment: return "empty_segment";
    case RepairKind::kEmptySpeakerBlock: return "empty_speaker_block";
    case RepairKind::kMissingEos: return "missing_eos";
    case RepairKind::kTrailingTokens: return "trailing_tokens";
  }
  return "unknown";
}

namespace {

bool is_prompt_class(TokenId id, const Vocabulary& vocab) {
  if (vocab.classify(id) == TokenClass::kLanguage) return true;
  return id == vocab.special(Special::kStart) || id == vocab.special(Special::kTranscribe) ||
         id == vocab.special(Special::kTimestamps) ||
         id == vocab.special(Special::kNoTimestamps);
}

// Incremental parser for one token sequence. Every malformation goes through
// fault(), which throws in strict mode and records a repair otherwise.
class SequenceParser {
 public:
  SequenceParser(const DecodeOptions& opts, const Vocabulary& vocab,
                 const TextTokenizer& tokenizer)
      : opts_(opts),
        vocab_(vocab),
        tokenizer_(tokenizer),
        group_end_(opts.group_length_s.value_or(vocab.max_time_s())) {}

  DecodeResult run(std::span<const TokenId> seq) {
    std::size_t pos = strip_prompt(seq);
    bool saw_eos = false;
    for (; pos < seq.size(); ++pos) {
      const TokenId id = seq[pos];
      if (!vocab_.valid(id)) {
        fault(RepairKind::kInvalidToken, pos, fmt::format("token id {} out of range", id));
        continue;
      }
      if (id == vocab_.special(Special::kEos)) {
        saw_eos = true;
        break;
      }
      if (id == vocab_.special(Special::kSpeakerChange)) {
        close_block(pos);
        continue;
      }
      switch (vocab_.classify(id)) {
        case TokenClass::kText:
          on_text(id, pos);
          break;
        case TokenClass::kTimestamp:
          on_timestamp(id, pos);
          break;
        default:
          fault(RepairKind::kPromptTokenInPayload, pos, "prompt token inside payload");
      }
    }
    if (!saw_eos) fault(RepairKind::kMissingEos, seq.size(), "sequence lacks <eos>");
    close_block(pos);
    if (saw_eos && pos + 1 < seq.size())
      fault(RepairKind::kTrailingTokens, pos + 1, "tokens after <eos>");
    return std::move(result_);
  }

 private:
  std::size_t strip_prompt(std::span<const TokenId> seq) {
    if (opts_.prompt == PromptHandling::kNone) return 0;
    if (opts_.prompt == PromptHandling::kRequired) {
      PromptSpec p;
      p.tokens.assign(seq.begin(), seq.begin() + std::min<std::size_t>(4, seq.size()));
      try {
        validate_prompt(p, vocab_, opts_.mode);
        if (p.tokens.size() == 4) return 4;
      } catch (const VocabularyError&) {
      }
      if (opts_.strict) throw MalformedSequence("sequence does not start with a valid prompt");
    }
    std::size_t pos = 0;
    while (pos < seq.size() && vocab_.valid(seq[pos]) && is_prompt_class(seq[pos], vocab_)) ++pos;
    return pos;
  }

  void fault(RepairKind kind, std::size_t pos, const std::string& what) {
    if (opts_.strict)
      throw MalformedSequence(fmt::format("{} at position {}", what, pos));
    result_.repairs.push_back({kind, pos});
  }

  double time_of(TokenId id) const { return dequantize_time(id, vocab_); }

  void on_text(TokenId id, std::size_t pos) {
    if (opts_.mode == CodecMode::kPlain || open_) {
      words_.push_back(id);
      return;
    }
    if (loose_.empty()) {
      fault(RepairKind::kTextOutsideSegment, pos, "text outside a timestamped segment");
      loose_start_ = block_.empty() ? 0.0 : last_end_;
    }
    loose_.push_back(id);
  }

  void on_timestamp(TokenId id, std::size_t pos) {
    if (opts_.mode == CodecMode::kPlain) {
      fault(RepairKind::kStrayTimestamp, pos, "timestamp token in plain mode");
      return;
    }
    const double t = time_of(id);
    if (open_) {
      finish_segment(open_start_, t, words_, pos);
      open_ = false;
      words_.clear();
    } else if (!loose_.empty()) {
      finish_segment(loose_start_, t, loose_, pos);
      loose_.clear();
    } else {
      open_ = true;
      open_start_ = t;
    }
  }

  void finish_segment(double start, double end, const std::vector<TokenId>& ids,
                      std::size_t pos) {
    if (end < start) {
      fault(RepairKind::kReversedSegment, pos, "segment ends before it begins");
      std::swap(start, end);
    }
    if (ids.empty()) {
      fault(RepairKind::kEmptySegment, pos, "segment without text");
      last_end_ = end;
      return;
    }
    block_.push_back({TimeInterval{start, end}, tokenizer_.decode(ids, vocab_)});
    last_end_ = end;
  }

  void close_block(std::size_t pos) {
    if (opts_.mode == CodecMode::kPlain) {
      if (!words_.empty()) block_.push_back({std::nullopt, tokenizer_.decode(words_, vocab_)});
      words_.clear();
    } else {
      if (open_) {
        fault(RepairKind::kOrphanBeginTimestamp, pos, "segment is missing its end timestamp");
        finish_segment(open_start_, std::max(open_start_, group_end_), words_, pos);
        open_ = false;
        words_.clear();
      }
      if (!loose_.empty()) {
        finish_segment(loose_start_, std::max(loose_start_, group_end_), loose_, pos);
        loose_.clear();
      }
    }
    if (block_.empty()) {
      fault(RepairKind::kEmptySpeakerBlock, pos, "empty speaker block");
    } else {
      SpeakerHypothesis h;
      h.speaker_index = static_cast<int>(result_.speakers.size());
      h.segments = std::move(block_);
      result_.speakers.push_back(std::move(h));
    }
    block_.clear();
    last_end_ = 0.0;
  }

  const DecodeOptions& opts_;
  const Vocabulary& vocab_;
  const TextTokenizer& tokenizer_;
  const double group_end_;

  DecodeResult result_;
  std::vector<HypSegment> block_;
  std::vector<TokenId> words_;  // text of the open segment (or the plain block)
  std::vector<TokenId> loose_;  // text seen outside any segment
  double loose_start_ = 0.0;
  bool open_ = false;
  double open_start_ = 0.0;
  double last_end_ = 0.0;
};

}  // namespace

DecodeResult decode_sot(std::span<const TokenId> seq, const DecodeOptions& opts,
                        const Vocabulary& vocab, const TextTokenizer& tokenizer) {
  SequenceParser parser(opts, vocab, tokenizer);
  return parser.run(seq);
}

int count_speakers(std::span<const TokenId> seq, const Vocabulary& vocab) {
  std::size_t pos = 0;
  while (pos < seq.size() && vocab.valid(seq[pos]) && is_prompt_class(seq[pos], vocab)) ++pos;
  int count = 0;
  bool has_text = false;
  for (; pos < seq.size(); ++pos) {
    const TokenId id = seq[pos];
    if (!vocab.valid(id)) continue;
    if (id == vocab.special(Special::kEos)) break;
    if (id == vocab.special(Special::kSpeakerChange)) {
      count += has_text;
      has_text = false;
    } else if (vocab.classify(id) == TokenClass::kText) {
      has_text = true;
    }
  }
  return count + has_text;
}

std::string render_tokens(std::span<const TokenId> seq, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : seq) {
    if (!out.empty()) out += ' ';
    out += vocab.valid(id) ? vocab.render(id) : fmt::format("<|invalid:{}|>", id);
  }
  return out;
}

std::vector<SpeakerHypothesis> reference_as_hypothesis(const UtteranceGroup& group) {
  const UtteranceGroup g = rebase(group);
  std::vector<SpeakerHypothesis> out;
  for (const std::string& spk : fifo_order(g)) {
    std::vector<const Utterance*> mine;
    for (const Utterance& u : g.utterances)
      if (u.speaker_id == spk) mine.push_back(&u);
    std::stable_sort(mine.begin(), mine.end(), [](const Utterance* a, const Utterance* b) {
      return a->interval.start_s < b->interval.start_s;
    });
    SpeakerHypothesis h;
    h.speaker_index = static_cast<int>(out.size());
    for (const Utterance* u : mine) {
      std::string text;
      for (const Word& w : u->words) text += (text.empty() ? "" : " ") + w.text;
      h.segments.push_back({u->interval, std::move(text)});
    }
    out.push_back(std::move(h));
  }
  return out;
}

void write_token_record(std::ostream& out, const TokenRecord& rec, const Vocabulary* render_with) {
  ordered_json j;
  j["group_id"] = rec.group_id;
  j["ids"] = rec.ids;
  if (render_with) j["text"] = render_tokens(rec.ids, *render_with);
  out << j.dump() << '\n';
}

std::vector<TokenRecord> read_token_records(std::istream& in) {
  std::vector<TokenRecord> out;
  for_each_jsonl(in, [&](const json& j, std::size_t line) {
    try {
      out.push_back({j.at("group_id").get<std::string>(), j.at("ids").get<TokenSequence>()});
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("bad token record: {}", e.what()), line);
    }
  });
  return out;
}

ordered_json hypothesis_to_json(const HypothesisRecord& rec) {
  ordered_json j;
  j["group_id"] = rec.group_id;
  ordered_json speakers = ordered_json::array();
  for (const SpeakerHypothesis& h : rec.speakers) {
    ordered_json segs = ordered_json::array();
    for (const HypSegment& s : h.segments) {
      ordered_json js;
      if (s.interval) {
        js["start_s"] = s.interval->start_s;
        js["end_s"] = s.interval->end_s;
      }
      js["text"] = s.text;
      segs.push_back(std::move(js));
    }
    ordered_json jh;
    jh["segments"] = std::move(segs);
    speakers.push_back(std::move(jh));
  }
  j["speakers"] = std::move(speakers);
  return j;
}

void write_hypothesis_record(std::ostream& out, const HypothesisRecord& rec) {
  out << hypothesis_to_json(rec).dump() << '\n';
}

std::vector<HypothesisRecord> read_hypothesis_records(std::istream& in) {
  std::vector<HypothesisRecord> out;
  for_each_jsonl(in, [&](const json& j, std::size_t line) {
    try {
      HypothesisRecord rec;
      rec.group_id = j.at("group_id").get<std::string>();
      for (const json& jh : j.at("speakers")) {
        SpeakerHypothesis h;
        h.speaker_index = static_cast<int>(rec.speakers.size());
        for (const json& js : jh.at("segments")) {
          HypSegment s;
          s.text = js.at("text").get<std::string>();
          if (js.contains("start_s") || js.contains("end_s")) {
            s.interval = TimeInterval{js.at("start_s").get<double>(), js.at("end_s").get<double>()};
            check_interval(*s.interval, line);
          }
          h.segments.push_back(std::move(s));
        }
        rec.speakers.push_back(std::move(h));
      }
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("bad hypothesis record: {}", e.what()), line);
    }
  });
  return out;
}

void write_repair_record(std::ostream& out, const std::string& group_id,
                         const std::vector<Repair>& repairs) {
  ordered_json j;
  j["group_id"] = group_id;
  ordered_json arr = ordered_json::array();
  for (const Repair& r : repairs) {
    ordered_json jr;
    jr["kind"] = repair_name(r.kind);
    jr["position"] = r.position;
    arr.push_back(std::move(jr));
  }
  j["repairs"] = std::move(arr);
  out << j.dump() << '\n';
}

}  // namespace mtsot
