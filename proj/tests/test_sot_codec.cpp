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

#include <gtest/gtest.h>

#include <cmath>

#include "mtsot/manifest.hpp"
#include "mtsot/sot_codec.hpp"
#include "support/generators.hpp"

namespace mtsot {
namespace {

Utterance utt(std::string spk, double s, double e, std::vector<std::string> words) {
  Utterance u{"S", std::move(spk), {s, e}, {}};
  for (auto& w : words) u.words.push_back({w, std::nullopt});
  return u;
}

struct Fixture {
  Vocabulary vocab = Vocabulary::build(testing::word_list());
  WhitespaceTokenizer tok;
  TokenId ts(int k) const { return vocab.timestamp_base() + k; }
  TokenId w(const std::string& s) const { return *vocab.text_id(s); }
  TokenId sc() const { return vocab.special(Special::kSpeakerChange); }
  TokenId eos() const { return vocab.special(Special::kEos); }
  PromptSpec prompt(CodecMode m) const { return make_prompt(vocab, "en", m); }
  TokenSequence with_prompt(CodecMode m, TokenSequence payload) const {
    TokenSequence s = prompt(m).tokens;
    s.insert(s.end(), payload.begin(), payload.end());
    return s;
  }
};

/// Expected segments per FIFO speaker: utterances merged while the quantized
/// gap is at most the threshold (strict) or strictly below it (inclusive split).
std::vector<std::vector<HypSegment>> segment_oracle(const UtteranceGroup& g, bool split_on_equal) {
  const double origin = group_start(g);
  const auto frame = [&](double t) { return std::llround((t - origin) / 0.02); };
  std::vector<std::vector<HypSegment>> out;
  for (const std::string& spk : testing::fifo_oracle(g)) {
    std::vector<Utterance> mine;
    for (const Utterance& u : g.utterances)
      if (u.speaker_id == spk) mine.push_back(u);
    std::sort(mine.begin(), mine.end(),
              [](const Utterance& a, const Utterance& b) { return a.interval.start_s < b.interval.start_s; });
    std::vector<HypSegment> segs;
    long long seg_end = -1;
    for (const Utterance& u : mine) {
      const long long s = frame(u.interval.start_s), e = frame(u.interval.end_s);
      std::string text;
      for (const Word& w : u.words) text += (text.empty() ? "" : " ") + w.text;
      const long long gap = s - seg_end;
      const bool split = segs.empty() || (split_on_equal ? gap >= 100 : gap > 100);
      if (split) {
        segs.push_back({TimeInterval{s * 0.02, e * 0.02}, text});
      } else {
        segs.back().interval->end_s = e * 0.02;
        segs.back().text += " " + text;
      }
      seg_end = e;
    }
    out.push_back(std::move(segs));
  }
  return out;
}

void expect_matches(const DecodeResult& d, const std::vector<std::vector<HypSegment>>& want) {
  ASSERT_EQ(d.speakers.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    ASSERT_EQ(d.speakers[i].segments.size(), want[i].size()) << "speaker " << i;
    for (std::size_t j = 0; j < want[i].size(); ++j) {
      const HypSegment& got = d.speakers[i].segments[j];
      EXPECT_EQ(got.text, want[i][j].text);
      ASSERT_TRUE(got.interval.has_value());
      EXPECT_EQ(std::llround(got.interval->start_s / 0.02), std::llround(want[i][j].interval->start_s / 0.02));
      EXPECT_EQ(std::llround(got.interval->end_s / 0.02), std::llround(want[i][j].interval->end_s / 0.02));
    }
  }
}

TEST(FifoOrder, Examples) {
  EXPECT_EQ(fifo_order({"g", {utt("A", 1.0, 2.0, {"x"}), utt("B", 0.5, 2.0, {"y"})}}),
            (std::vector<std::string>{"B", "A"}));
  EXPECT_EQ(fifo_order({"g", {utt("A", 1.0, 2.0, {"x"})}}), (std::vector<std::string>{"A"}));
  EXPECT_EQ(fifo_order({"g", {utt("B", 1.0, 2.0, {"x"}), utt("A", 1.0, 2.0, {"y"})}}),
            (std::vector<std::string>{"A", "B"}));
}

TEST(FifoOrder, MatchesStableSortOracle) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    UtteranceGroup g = testing::random_group(rng, {});
    // Force ties on some trials by aligning every first start.
    if (i % 3 == 0)
      for (Utterance& u : g.utterances)
        if (u.interval.start_s < 1.0) u.interval.end_s -= u.interval.start_s, u.interval.start_s = 0.0;
    EXPECT_EQ(fifo_order(g), testing::fifo_oracle(g));
  }
}

TEST(Segments, GapRule) {
  const auto count = [](double b_start, double b_end) {
    const std::vector<Utterance> u = {utt("A", 0, 1, {"a"}), utt("A", b_start, b_end, {"b"})};
    return homogeneous_segments(u).size();
  };
  EXPECT_EQ(count(2.5, 3.0), 1u);
  EXPECT_EQ(count(3.5, 4.0), 2u);
  EXPECT_EQ(count(3.0, 4.0), 1u);
  EXPECT_EQ(count(3.02, 4.0), 2u);
}

TEST(Segments, StrictlyGreaterSplitPinnedAgainstBothRules) {
  Fixture f;
  Rng rng(5);
  int distinguishing = 0;
  for (int i = 0; i < 400; ++i) {
    const UtteranceGroup g = testing::random_group(rng, {});
    const auto strict = segment_oracle(g, false);
    const auto inclusive = segment_oracle(g, true);
    const auto seq = encode_sot(g, {}, f.prompt(CodecMode::kTimestamped), f.vocab, f.tok);
    const auto d = decode_sot(seq, {}, f.vocab);
    expect_matches(d, strict);
    if (strict.size() == inclusive.size()) {
      bool same = true;
      for (std::size_t k = 0; k < strict.size(); ++k) same = same && strict[k].size() == inclusive[k].size();
      distinguishing += !same;
    }
  }
  // The generator plants exact 2 s gaps, so the two rules must disagree somewhere.
  EXPECT_GT(distinguishing, 10);
}

TEST(Encode, SingleSpeakerTimestamped) {
  Fixture f;
  const UtteranceGroup g{"g", {utt("A", 0.0, 1.0, {"alpha", "bravo"})}};
  const auto seq = encode_sot(g, {}, f.prompt(CodecMode::kTimestamped), f.vocab, f.tok);
  EXPECT_EQ(seq, f.with_prompt(CodecMode::kTimestamped,
                               {f.ts(0), f.w("alpha"), f.w("bravo"), f.ts(50), f.eos()}));
}

TEST(Encode, TwoSpeakersPlainFifo) {
  Fixture f;
  const UtteranceGroup g{"g", {utt("A", 1.0, 2.0, {"bravo"}), utt("B", 0.5, 1.5, {"alpha"})}};
  CodecOptions o;
  o.mode = CodecMode::kPlain;
  const auto seq = encode_sot(g, o, f.prompt(CodecMode::kPlain), f.vocab, f.tok);
  EXPECT_EQ(seq, f.with_prompt(CodecMode::kPlain, {f.w("alpha"), f.sc(), f.w("bravo"), f.eos()}));
}

TEST(Encode, TimesAreRebased) {
  Fixture f;
  const UtteranceGroup g{"g", {utt("A", 100.0, 101.0, {"alpha"})}};
  const auto seq = encode_sot(g, {}, f.prompt(CodecMode::kTimestamped), f.vocab, f.tok);
  EXPECT_EQ(seq, f.with_prompt(CodecMode::kTimestamped, {f.ts(0), f.w("alpha"), f.ts(50), f.eos()}));
}

TEST(Encode, UnknownWordIsVocabularyError) {
  Fixture f;
  const UtteranceGroup g{"g", {utt("A", 0.0, 1.0, {"zulu"})}};
  EXPECT_THROW(encode_sot(g, {}, f.prompt(CodecMode::kTimestamped), f.vocab, f.tok), Error);
}

TEST(Decode, InverseOfEncodeExample) {
  Fixture f;
  const auto seq = f.with_prompt(CodecMode::kTimestamped, {f.ts(0), f.w("alpha"), f.ts(50), f.eos()});
  const auto d = decode_sot(seq, {}, f.vocab);
  ASSERT_EQ(d.speakers.size(), 1u);
  ASSERT_EQ(d.speakers[0].segments.size(), 1u);
  EXPECT_EQ(d.speakers[0].segments[0], (HypSegment{TimeInterval{0.0, 1.0}, "alpha"}));
  EXPECT_TRUE(d.repairs.empty());
}

TEST(Decode, PlainSpeakerCountIsSeparatorsPlusOne) {
  Fixture f;
  const auto seq = f.with_prompt(CodecMode::kPlain,
                                 {f.w("alpha"), f.sc(), f.w("bravo"), f.sc(), f.w("charlie"), f.eos()});
  DecodeOptions o;
  o.mode = CodecMode::kPlain;
  EXPECT_EQ(decode_sot(seq, o, f.vocab).speakers.size(), 3u);
}

TEST(Decode, MissingEndTimestamp) {
  Fixture f;
  const auto seq = f.with_prompt(CodecMode::kTimestamped, {f.ts(0), f.w("alpha"), f.eos()});
  EXPECT_THROW(decode_sot(seq, {}, f.vocab), MalformedSequence);
  DecodeOptions o;
  o.strict = false;
  o.group_length_s = 7.5;
  const auto d = decode_sot(seq, o, f.vocab);
  ASSERT_EQ(d.speakers.size(), 1u);
  EXPECT_EQ(d.speakers[0].segments[0], (HypSegment{TimeInterval{0.0, 7.5}, "alpha"}));
  ASSERT_EQ(d.repairs.size(), 1u);
  EXPECT_EQ(d.repairs[0].kind, RepairKind::kOrphanBeginTimestamp);
}

TEST(Decode, TextBeforeAnyTimestampGetsLeadingSegment) {
  Fixture f;
  const auto seq = f.with_prompt(CodecMode::kTimestamped, {f.w("alpha"), f.ts(25), f.eos()});
  DecodeOptions o;
  o.strict = false;
  const auto d = decode_sot(seq, o, f.vocab);
  ASSERT_EQ(d.speakers.size(), 1u);
  EXPECT_EQ(d.speakers[0].segments[0], (HypSegment{TimeInterval{0.0, 0.5}, "alpha"}));
  EXPECT_EQ(d.repairs[0].kind, RepairKind::kTextOutsideSegment);
}

TEST(Decode, EmptyBlocksDroppedAndReported) {
  Fixture f;
  const auto seq = f.with_prompt(CodecMode::kPlain, {f.w("alpha"), f.sc(), f.sc(), f.w("bravo"), f.eos()});
  DecodeOptions o;
  o.mode = CodecMode::kPlain;
  EXPECT_THROW(decode_sot(seq, o, f.vocab), MalformedSequence);
  o.strict = false;
  const auto d = decode_sot(seq, o, f.vocab);
  EXPECT_EQ(d.speakers.size(), 2u);
  ASSERT_EQ(d.repairs.size(), 1u);
  EXPECT_EQ(d.repairs[0].kind, RepairKind::kEmptySpeakerBlock);
}

TEST(Decode, LenientIsTotal) {
  Fixture f;
  Rng rng(17);
  DecodeOptions o;
  o.strict = false;
  for (int i = 0; i < 3000; ++i) {
    TokenSequence seq(rng.below(40));
    for (TokenId& t : seq) {
      // Mostly in-vocabulary ids with occasional out-of-range values.
      t = rng.below(20) == 0 ? static_cast<TokenId>(rng.between(-5, f.vocab.size() + 5))
                             : static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(f.vocab.size())));
    }
    o.mode = i % 2 ? CodecMode::kPlain : CodecMode::kTimestamped;
    o.prompt = static_cast<PromptHandling>(i % 3);
    EXPECT_NO_THROW(decode_sot(seq, o, f.vocab));
  }
}

TEST(CountSpeakers, Examples) {
  Fixture f;
  EXPECT_EQ(count_speakers(f.with_prompt(CodecMode::kPlain, {f.eos()}), f.vocab), 0);
  EXPECT_EQ(count_speakers(f.with_prompt(CodecMode::kPlain, {f.w("alpha"), f.sc(), f.w("bravo"), f.eos()}), f.vocab), 2);
  EXPECT_EQ(count_speakers(f.with_prompt(CodecMode::kPlain, {f.w("alpha"), f.sc(), f.eos()}), f.vocab), 1);
}

TEST(CountSpeakers, MatchesBlockEnumeration) {
  Fixture f;
  Rng rng(23);
  const std::vector<TokenId> alphabet = {f.w("alpha"), f.sc(), f.ts(3), f.ts(9), f.eos()};
  for (int i = 0; i < 2000; ++i) {
    TokenSequence payload(rng.below(12));
    for (TokenId& t : payload) t = alphabet[rng.below(alphabet.size())];
    // Oracle: split the payload before the first eos at separators; count blocks holding text.
    int blocks = 0;
    bool text = false;
    for (TokenId t : payload) {
      if (t == f.eos()) break;
      if (t == f.sc()) {
        blocks += text;
        text = false;
      } else if (t == f.w("alpha")) {
        text = true;
      }
    }
    blocks += text;
    EXPECT_EQ(count_speakers(f.with_prompt(CodecMode::kTimestamped, payload), f.vocab), blocks);
  }
}

TEST(RoundTrip, RandomGroupsTimestamped) {
  Fixture f;
  Rng rng(29);
  for (int i = 0; i < 300; ++i) {
    const UtteranceGroup g = testing::random_group(rng, {});
    const auto seq = encode_sot(g, {}, f.prompt(CodecMode::kTimestamped), f.vocab, f.tok);
    const auto d = decode_sot(seq, {}, f.vocab);
    EXPECT_TRUE(d.repairs.empty());
    expect_matches(d, segment_oracle(g, false));
    EXPECT_EQ(count_speakers(seq, f.vocab), static_cast<int>(distinct_speakers(g).size()));
    const auto order = fifo_order(g);
    for (std::size_t k = 0; k < order.size(); ++k)
      EXPECT_EQ(d.speakers[k].words(), speaker_words(g, order[k]));
  }
}

TEST(RoundTrip, FirstSegmentStartsAreNonDecreasing) {
  Fixture f;
  Rng rng(31);
  for (int i = 0; i < 300; ++i) {
    const UtteranceGroup g = testing::random_group(rng, {});
    const auto seq = encode_sot(g, {}, f.prompt(CodecMode::kTimestamped), f.vocab, f.tok);
    const auto d = decode_sot(seq, {}, f.vocab);
    for (std::size_t k = 1; k < d.speakers.size(); ++k)
      EXPECT_LE(d.speakers[k - 1].segments[0].interval->start_s, d.speakers[k].segments[0].interval->start_s);
  }
}

TEST(RoundTrip, WordTimingSegments) {
  Fixture f;
  Rng rng(37);
  CodecOptions o;
  o.word_timing = true;
  for (int i = 0; i < 200; ++i) {
    const UtteranceGroup g = testing::random_group(rng, {.word_timing = true});
    const auto d = decode_sot(encode_sot(g, o, f.prompt(CodecMode::kTimestamped), f.vocab, f.tok), {}, f.vocab);
    const auto order = fifo_order(g);
    ASSERT_EQ(d.speakers.size(), order.size());
    for (std::size_t k = 0; k < order.size(); ++k) EXPECT_EQ(d.speakers[k].words(), speaker_words(g, order[k]));
  }
}

TEST(RoundTrip, PlainEqualsTimestampedWithTimesStripped) {
  Fixture f;
  Rng rng(41);
  CodecOptions plain;
  plain.mode = CodecMode::kPlain;
  for (int i = 0; i < 300; ++i) {
    const UtteranceGroup g = testing::random_group(rng, {});
    auto ts = encode_sot(g, {}, PromptSpec{}, f.vocab, f.tok);
    std::erase_if(ts, [&](TokenId t) { return f.vocab.is_timestamp(t); });
    EXPECT_EQ(ts, encode_sot(g, plain, PromptSpec{}, f.vocab, f.tok));
  }
}

TEST(RoundTrip, WithoutSpeakerChangeInTimestampedMode) {
  Fixture f;
  CodecOptions o;
  o.speaker_change_with_timestamps = false;
  const UtteranceGroup g{"g", {utt("A", 0.0, 1.0, {"alpha"}), utt("B", 0.5, 1.0, {"bravo"})}};
  const auto seq = encode_sot(g, o, PromptSpec{}, f.vocab, f.tok);
  EXPECT_EQ(std::count(seq.begin(), seq.end(), f.sc()), 0);
}

TEST(Records, TokenRecordJsonRoundTrip) {
  Fixture f;
  std::ostringstream out;
  write_token_record(out, {"g7", {1, 2, 3}}, &f.vocab);
  std::istringstream in(out.str());
  const auto back = read_token_records(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].group_id, "g7");
  EXPECT_EQ(back[0].ids, (TokenSequence{1, 2, 3}));
}

TEST(Records, RenderShowsTimestampTag) {
  Fixture f;
  EXPECT_EQ(f.vocab.render(f.ts(62)), "<|1.24|>");
}

}  // namespace
}  // namespace mtsot
