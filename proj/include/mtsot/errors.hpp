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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtsot {

/// Root of every error thrown by the library. `exit_code()` is what the CLI
/// returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 3; }
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  int exit_code() const noexcept override { return 2; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  enum class Kind {
    kInterval,
    kWords,
    kSpeakerOverlap,
    kSession,
    kSpan,
    kSpeakers,
    kEmpty,
    kConfig,
  };
  ValidationError(Kind kind, const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        kind_(kind),
        line_(line) {}
  Kind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

#define MTSOT_DEFINE_ERROR(Name)      \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  };

MTSOT_DEFINE_ERROR(EmptyInput)
MTSOT_DEFINE_ERROR(VocabularyError)
MTSOT_DEFINE_ERROR(TimeOutOfRange)
MTSOT_DEFINE_ERROR(MalformedSequence)
MTSOT_DEFINE_ERROR(CapExceeded)
MTSOT_DEFINE_ERROR(EmptyReference)
MTSOT_DEFINE_ERROR(NoReferenceSpeech)
MTSOT_DEFINE_ERROR(PlacementFailure)
MTSOT_DEFINE_ERROR(SampleRateMismatch)
MTSOT_DEFINE_ERROR(MissingAudio)
MTSOT_DEFINE_ERROR(ShapeMismatch)
MTSOT_DEFINE_ERROR(ConfigError)
MTSOT_DEFINE_ERROR(InvalidToken)
MTSOT_DEFINE_ERROR(LabelOutOfVocab)

#undef MTSOT_DEFINE_ERROR

class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(const std::string& what, long batch_id)
      : Error(what + " (batch " + std::to_string(batch_id) + ")"), batch_id_(batch_id) {}
  long batch_id() const noexcept { return batch_id_; }

 private:
  long batch_id_;
};

}  // namespace mtsot
