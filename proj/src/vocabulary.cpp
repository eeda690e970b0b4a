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

#include "mtsot/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/core.h>

#include "mtsot/manifest.hpp"

namespace mtsot {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::array<const char*, kNumSpecials> kSpecialNames = {
    "start", "transcribe", "timestamps", "notimestamps", "sc", "eos"};

constexpr std::array<const char*, kNumSpecials> kSpecialTags = {
    "<|startoftranscript|>", "<|transcribe|>", "<|timestamps|>",
    "<|notimestamps|>",      "<|sc|>",         "<|endoftext|>"};

// Ids of one class must form a contiguous range.
std::pair<TokenId, TokenId> contiguous_range(std::vector<TokenId> ids, const char* what) {
  if (ids.empty()) return {0, 0};
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 1; i < ids.size(); ++i)
    if (ids[i] != ids[i - 1] + 1)
      throw VocabularyError(fmt::format("{} ids are not contiguous", what));
  return {ids.front(), ids.back() + 1};
}

}  // namespace

const char* special_name(Special s) { return kSpecialNames[static_cast<std::size_t>(s)]; }

long long to_frames(double t, double resolution_s) {
  const double x = t / resolution_s;
  return x >= 0 ? static_cast<long long>(std::floor(x + 0.5 + 1e-9))
                : -static_cast<long long>(std::floor(-x + 0.5 + 1e-9));
}

Vocabulary Vocabulary::build(std::vector<std::string> text_tokens,
                             std::vector<std::string> languages, int timestamp_count,
                             double resolution_s) {
  if (languages.empty()) throw VocabularyError("at least one language token is required");
  if (timestamp_count < 0 || !(resolution_s > 0))
    throw VocabularyError("invalid timestamp configuration");
  Vocabulary v;
  v.text_ = std::move(text_tokens);
  v.text_base_ = 0;
  TokenId next = static_cast<TokenId>(v.text_.size());
  for (std::size_t i = 0; i < kNumSpecials; ++i) v.specials_[i] = next++;
  for (std::string& code : languages) v.languages_.emplace_back(std::move(code), next++);
  v.ts_base_ = next;
  v.ts_count_ = timestamp_count;
  v.resolution_s_ = resolution_s;
  v.size_ = next + timestamp_count;
  v.index();
  return v;
}

Vocabulary Vocabulary::from_utterances(const std::vector<Utterance>& utts,
                                       std::vector<std::string> languages,
                                       int timestamp_count, double resolution_s) {
  std::set<std::string> words;
  for (const Utterance& u : utts)
    for (const Word& w : u.words) words.insert(w.text);
  return build({words.begin(), words.end()}, std::move(languages), timestamp_count,
               resolution_s);
}

void Vocabulary::index() {
  text_index_.clear();
  for (std::size_t i = 0; i < text_.size(); ++i) {
    auto [it, inserted] = text_index_.emplace(text_[i], text_base_ + static_cast<TokenId>(i));
    if (!inserted) throw VocabularyError(fmt::format("duplicate text token '{}'", text_[i]));
  }
}

Vocabulary Vocabulary::from_json(const json& j) {
  try {
    Vocabulary v;
    std::vector<std::pair<TokenId, std::string>> text;
    for (auto& [tok, id] : j.at("text_tokens").items()) text.emplace_back(id.get<TokenId>(), tok);
    std::sort(text.begin(), text.end());
    std::vector<TokenId> text_ids;
    for (auto& [id, tok] : text) {
      text_ids.push_back(id);
      v.text_.push_back(tok);
    }
    auto [tb, te] = contiguous_range(text_ids, "text");
    v.text_base_ = tb;

    const json& sp = j.at("specials");
    std::vector<TokenId> special_ids;
    for (std::size_t i = 0; i < kNumSpecials; ++i) {
      v.specials_[i] = sp.at(kSpecialNames[i]).get<TokenId>();
      special_ids.push_back(v.specials_[i]);
    }
    if (sp.size() != kNumSpecials) throw VocabularyError("unknown special token in vocabulary");
    auto [sb, se] = contiguous_range(special_ids, "special");

    std::vector<TokenId> lang_ids;
    for (auto& [code, id] : j.at("languages").items()) {
      v.languages_.emplace_back(code, id.get<TokenId>());
      lang_ids.push_back(id.get<TokenId>());
    }
    if (v.languages_.empty()) throw VocabularyError("at least one language token is required");
    std::sort(v.languages_.begin(), v.languages_.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    auto [lb, le] = contiguous_range(lang_ids, "language");

    v.ts_base_ = j.at("timestamp_base").get<TokenId>();
    v.ts_count_ = j.value("timestamp_count", 1501);
    v.resolution_s_ = j.value("resolution_s", 0.02);
    if (v.ts_count_ < 0 || !(v.resolution_s_ > 0))
      throw VocabularyError("invalid timestamp configuration");

    // Partition check: the class ranges tile [0, size) without gaps or overlap.
    std::vector<std::pair<TokenId, TokenId>> ranges = {
        {tb, te}, {sb, se}, {lb, le}, {v.ts_base_, v.ts_base_ + v.ts_count_}};
    std::erase_if(ranges, [](const auto& r) { return r.first == r.second; });
    std::sort(ranges.begin(), ranges.end());
    TokenId cursor = 0;
    for (auto& [b, e] : ranges) {
      if (b != cursor) throw VocabularyError("token id classes overlap or leave gaps");
      cursor = e;
    }
    v.size_ = cursor;
    v.index();
    return v;
  } catch (const json::exception& e) {
    throw VocabularyError(fmt::format("malformed vocabulary: {}", e.what()));
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  return from_json(j);
}

ordered_json Vocabulary::to_json() const {
  ordered_json j;
  ordered_json text = ordered_json::object();
  for (std::size_t i = 0; i < text_.size(); ++i)
    text[text_[i]] = text_base_ + static_cast<TokenId>(i);
  j["text_tokens"] = std::move(text);
  ordered_json sp = ordered_json::object();
  for (std::size_t i = 0; i < kNumSpecials; ++i) sp[kSpecialNames[i]] = specials_[i];
  j["specials"] = std::move(sp);
  ordered_json langs = ordered_json::object();
  for (auto& [code, id] : languages_) langs[code] = id;
  j["languages"] = std::move(langs);
  j["timestamp_base"] = ts_base_;
  j["timestamp_count"] = ts_count_;
  j["resolution_s"] = resolution_s_;
  return j;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  auto out = open_output(path);
  out << to_json().dump(1) << '\n';
}

TokenClass Vocabulary::classify(TokenId id) const {
  if (!valid(id)) throw InvalidToken(fmt::format("token id {} outside vocabulary", id));
  if (is_timestamp(id)) return TokenClass::kTimestamp;
  if (id >= text_base_ && id < text_base_ + static_cast<TokenId>(text_.size()))
    return TokenClass::kText;
  for (TokenId s : specials_)
    if (s == id) return TokenClass::kSpecial;
  return TokenClass::kLanguage;
}

std::optional<TokenId> Vocabulary::text_id(std::string_view token) const {
  auto it = text_index_.find(std::string(token));
  if (it == text_index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::text(TokenId id) const {
  const auto i = id - text_base_;
  if (i < 0 || i >= static_cast<TokenId>(text_.size()))
    throw InvalidToken(fmt::format("token id {} is not a text token", id));
  return text_[static_cast<std::size_t>(i)];
}

std::optional<TokenId> Vocabulary::language(std::string_view code) const {
  for (auto& [c, id] : languages_)
    if (c == code) return id;
  return std::nullopt;
}

const std::string& Vocabulary::language_code(TokenId id) const {
  for (auto& [c, lid] : languages_)
    if (lid == id) return c;
  throw InvalidToken(fmt::format("token id {} is not a language token", id));
}

std::vector<std::string> Vocabulary::languages() const {
  std::vector<std::string> out;
  for (auto& [c, id] : languages_) out.push_back(c);
  return out;
}

std::string Vocabulary::render(TokenId id) const {
  switch (classify(id)) {
    case TokenClass::kText:
      return text(id);
    case TokenClass::kTimestamp:
      return fmt::format("<|{:.2f}|>", (id - ts_base_) * resolution_s_);
    case TokenClass::kLanguage:
      return "<|" + language_code(id) + "|>";
    case TokenClass::kSpecial:
      for (std::size_t i = 0; i < kNumSpecials; ++i)
        if (specials_[i] == id) return kSpecialTags[i];
  }
  return "<|?|>";
}

TokenId quantize_time(double t, const Vocabulary& vocab) {
  if (!std::isfinite(t) || t < 0.0 || t > vocab.max_time_s() + 1e-9)
    throw TimeOutOfRange(
        fmt::format("time {}s outside [0, {}]s", t, vocab.max_time_s()));
  const long long idx = to_frames(t, vocab.resolution_s());
  if (idx >= vocab.timestamp_count())
    throw TimeOutOfRange(fmt::format("time {}s beyond last timestamp token", t));
  return vocab.timestamp_base() + static_cast<TokenId>(idx);
}

double dequantize_time(TokenId id, const Vocabulary& vocab) {
  if (!vocab.is_timestamp(id)) throw InvalidToken(fmt::format("token {} is not a timestamp", id));
  return (id - vocab.timestamp_base()) * vocab.resolution_s();
}

}  // namespace mtsot
