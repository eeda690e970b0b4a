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

#include "mtsot/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "mtsot/lder.hpp"

namespace mtsot {

namespace {

std::string collapse_spaces(std::string_view text) {
  std::string out;
  bool pending = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += c;
  }
  return out;
}

}  // namespace

std::string DefaultNormalizer::operator()(std::string_view text) const {
  std::string tmp;
  tmp.reserve(text.size());
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u) && c != '\'')
      tmp += ' ';
    else
      tmp += u < 0x80 ? static_cast<char>(std::tolower(u)) : c;
  }
  return collapse_spaces(tmp);
}

std::string IdentityNormalizer::operator()(std::string_view text) const {
  return collapse_spaces(text);
}

std::unique_ptr<Normalizer> make_normalizer(std::string_view name) {
  if (name == "default") return std::make_unique<DefaultNormalizer>();
  if (name == "none") return std::make_unique<IdentityNormalizer>();
  throw ConfigError(fmt::format("unknown normalizer '{}'", name));
}

const char* unit_name(Unit u) { return u == Unit::kWord ? "word" : "char"; }

Unit parse_unit(std::string_view name) {
  if (name == "word") return Unit::kWord;
  if (name == "char") return Unit::kChar;
  throw ConfigError(fmt::format("unknown scoring unit '{}'", name));
}

std::vector<std::string> split_units(std::string_view text, Unit unit) {
  std::vector<std::string> out;
  if (unit == Unit::kWord) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i) out.emplace_back(text.substr(i, j - i));
      i = j;
    }
    return out;
  }
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3
                                      : (lead >> 3) == 0x1E ? 4 : 0;
    bool valid = len > 0 && i + len <= text.size();
    for (std::size_t k = 1; valid && k < len; ++k)
      valid = (static_cast<unsigned char>(text[i + k]) >> 6) == 0x2;
    if (!valid) {
      out.emplace_back("\xEF\xBF\xBD");
      ++i;
      continue;
    }
    if (!(len == 1 && std::isspace(lead))) out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

EditCounts& EditCounts::operator+=(const EditCounts& o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  ref_len += o.ref_len;
  return *this;
}

EditCounts edit_distance(const std::vector<std::string>& ref,
                         const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  // cost[i][j]: distance between ref[:i] and hyp[:j]
  std::vector<long> cost((n + 1) * (m + 1));
  const auto at = [&](std::size_t i, std::size_t j) -> long& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1),
                           at(i - 1, j) + 1, at(i, j - 1) + 1});

  EditCounts c;
  c.ref_len = static_cast<long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const long diag = ref[i - 1] == hyp[j - 1] ? 0 : 1;
      if (at(i, j) == at(i - 1, j - 1) + diag) {
        c.substitutions += diag;
        --i, --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

std::vector<int> hungarian(const std::vector<double>& cost, std::size_t n) {
  // Shortest augmenting path with row/column potentials, O(n^3).
  // Indices are 1-based internally; column 0 is a sentinel.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const std::size_t r = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double reduced = cost[(r - 1) * n + (c - 1)] - u[r] - v[c];
        if (reduced < minv[c]) {
          minv[c] = reduced;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> out(n, -1);
  for (std::size_t c = 1; c <= n; ++c)
    if (match[c]) out[match[c] - 1] = static_cast<int>(c - 1);
  return out;
}

std::vector<int> exhaustive_assignment(const std::vector<double>& cost, std::size_t n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) total += cost[r * n + static_cast<std::size_t>(perm[r])];
    if (total < best_cost) {
      best_cost = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Assignment best_assignment(const std::vector<std::vector<std::string>>& refs,
                           const std::vector<std::vector<std::string>>& hyps, AssignmentMode mode,
                           std::size_t cap) {
  const std::size_t n = std::max(refs.size(), hyps.size());
  if (mode == AssignmentMode::kExhaustive && n > cap)
    throw CapExceeded(fmt::format("{} speakers exceed the exhaustive cap of {}", n, cap));
  const bool exhaustive =
      mode == AssignmentMode::kExhaustive || (mode == AssignmentMode::kAuto && n <= cap);

  static const std::vector<std::string> kEmpty;
  const auto ref_at = [&](std::size_t i) -> const auto& { return i < refs.size() ? refs[i] : kEmpty; };
  const auto hyp_at = [&](std::size_t j) -> const auto& { return j < hyps.size() ? hyps[j] : kEmpty; };

  std::vector<EditCounts> pair_counts(n * n);
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      pair_counts[i * n + j] = edit_distance(ref_at(i), hyp_at(j));
      cost[i * n + j] = static_cast<double>(pair_counts[i * n + j].errors());
    }

  const std::vector<int> perm = exhaustive ? exhaustive_assignment(cost, n) : hungarian(cost, n);
  Assignment out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(perm[i]);
    out.counts += pair_counts[i * n + j];
    out.pairs.emplace_back(i < refs.size() ? static_cast<int>(i) : -1,
                           j < hyps.size() ? static_cast<int>(j) : -1);
  }
  return out;
}

LderParts& LderParts::operator+=(const LderParts& o) {
  miss_s += o.miss_s;
  false_alarm_s += o.false_alarm_s;
  confusion_s += o.confusion_s;
  ref_speech_s += o.ref_speech_s;
  error_frames += o.error_frames;
  ref_frames += o.ref_frames;
  return *this;
}

int hypothesis_speaker_count(const std::vector<SpeakerHypothesis>& hyp) {
  int n = 0;
  for (const SpeakerHypothesis& h : hyp)
    n += std::any_of(h.segments.begin(), h.segments.end(), [](const HypSegment& s) {
      return s.text.find_first_not_of(" \t\r\n") != std::string::npos;
    });
  return n;
}

GroupScore score_group(const UtteranceGroup& ref, const std::vector<SpeakerHypothesis>& hyp,
                       const ScoreOptions& opts, const Normalizer* normalizer) {
  const auto prepare = [&](const std::string& text) {
    return split_units(normalizer ? (*normalizer)(text) : text, opts.unit);
  };

  std::vector<std::vector<std::string>> refs;
  for (const std::string& spk : fifo_order(ref)) {
    std::string text;
    for (const std::string& w : speaker_words(ref, spk)) text += (text.empty() ? "" : " ") + w;
    refs.push_back(prepare(text));
  }
  std::vector<std::vector<std::string>> hyps;
  for (const SpeakerHypothesis& h : hyp) {
    std::string text;
    for (const HypSegment& s : h.segments) text += (text.empty() ? "" : " ") + s.text;
    hyps.push_back(prepare(text));
  }

  GroupScore score;
  score.group_id = ref.group_id;
  Assignment a = best_assignment(refs, hyps, opts.mode, opts.exhaustive_cap);
  score.edit = a.counts;
  score.assignment = std::move(a.pairs);
  score.ref_speakers = static_cast<int>(refs.size());
  score.hyp_speakers = hypothesis_speaker_count(hyp);

  const bool timed = std::all_of(hyp.begin(), hyp.end(), [](const SpeakerHypothesis& h) {
    return std::all_of(h.segments.begin(), h.segments.end(),
                       [](const HypSegment& s) { return s.interval.has_value(); });
  });
  if (opts.lder && timed) score.lder_parts = lder(ref, hyp, opts.frame_s, opts.mode, opts.exhaustive_cap);
  return score;
}

ErrorRateReport corpus_error_rate(const std::vector<GroupScore>& scores) {
  ErrorRateReport r;
  for (const GroupScore& s : scores) {
    for (RateCell* cell : {&r.overall, &r.by_speakers[s.ref_speakers]}) {
      cell->errors += s.edit.errors();
      cell->ref_len += s.edit.ref_len;
      cell->groups += 1;
    }
  }
  if (r.overall.ref_len == 0) throw EmptyReference("no reference units to score against");
  return r;
}

}  // namespace mtsot
