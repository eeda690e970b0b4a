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

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mtsot/core.hpp"

namespace mtsot {

enum class Special { kStart, kTranscribe, kTimestamps, kNoTimestamps, kSpeakerChange, kEos };
inline constexpr std::size_t kNumSpecials = 6;

enum class TokenClass { kText, kSpecial, kLanguage, kTimestamp };

/// Rounds t / resolution to the nearest integer, ties away from zero. A 1e-9
/// frame nudge keeps grid-aligned decimal times (0.03 / 0.02) on the right side.
long long to_frames(double t, double resolution_s);

/// Token alphabet: text tokens, the six task specials, language tokens and a
/// contiguous block of timestamp tokens. Every id class is a contiguous range
/// and the classes partition [0, size()).
///
/// The JSON form assigns ids explicitly:
///   {"text_tokens": {"hi": 0, ...},
///    "specials": {"start": 7, "transcribe": 8, "timestamps": 9,
///                 "notimestamps": 10, "sc": 11, "eos": 12},
///    "languages": {"en": 13},
///    "timestamp_base": 14, "timestamp_count": 1501, "resolution_s": 0.02}
class Vocabulary {
 public:
  /// Default layout: text, specials, languages, timestamps.
  static Vocabulary build(std::vector<std::string> text_tokens,
                          std::vector<std::string> languages = {"en"},
                          int timestamp_count = 1501, double resolution_s = 0.02);

  /// Sorted unique words from `utts`, then build().
  static Vocabulary from_utterances(const std::vector<Utterance>& utts,
                                    std::vector<std::string> languages = {"en"},
                                    int timestamp_count = 1501, double resolution_s = 0.02);

  static Vocabulary from_json(const nlohmann::json& j);
  static Vocabulary load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
  void save(const std::filesystem::path& path) const;

  int size() const { return size_; }
  bool valid(TokenId id) const { return id >= 0 && id < size_; }
  TokenClass classify(TokenId id) const;

  std::optional<TokenId> text_id(std::string_view token) const;
  const std::string& text(TokenId id) const;
  int text_count() const { return static_cast<int>(text_.size()); }

  TokenId special(Special s) const { return specials_[static_cast<std::size_t>(s)]; }
  std::optional<TokenId> language(std::string_view code) const;
  const std::string& language_code(TokenId id) const;
  std::vector<std::string> languages() const;

  TokenId timestamp_base() const { return ts_base_; }
  int timestamp_count() const { return ts_count_; }
  double resolution_s() const { return resolution_s_; }
  /// Largest representable time: (timestamp_count - 1) * resolution_s.
  double max_time_s() const { return (ts_count_ - 1) * resolution_s_; }
  bool is_timestamp(TokenId id) const { return id >= ts_base_ && id < ts_base_ + ts_count_; }

  /// Human-readable form: text as-is, timestamps as "<|1.24|>", specials as
  /// "<|sc|>" style tags.
  std::string render(TokenId id) const;

 private:
  void index();

  std::vector<std::string> text_;             // id = text_base_ + i
  TokenId text_base_ = 0;
  std::array<TokenId, kNumSpecials> specials_{};
  std::vector<std::pair<std::string, TokenId>> languages_;
  TokenId ts_base_ = 0;
  int ts_count_ = 0;
  double resolution_s_ = 0.02;
  int size_ = 0;
  std::unordered_map<std::string, TokenId> text_index_;
};

const char* special_name(Special s);

/// Timestamp token for time t (seconds). Throws TimeOutOfRange when t < 0 or
/// t > vocab.max_time_s().
TokenId quantize_time(double t, const Vocabulary& vocab);
/// Inverse of quantize_time; throws InvalidToken for non-timestamp ids.
double dequantize_time(TokenId id, const Vocabulary& vocab);

}  // namespace mtsot
