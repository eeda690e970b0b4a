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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "mtsot/errors.hpp"
#include "mtsot/kernels.hpp"
#include "mtsot/lder.hpp"
#include "mtsot/manifest.hpp"
#include "mtsot/nn/checkpoint.hpp"
#include "mtsot/nn/gradcheck.hpp"
#include "mtsot/nn/toy.hpp"
#include "mtsot/parallel.hpp"
#include "mtsot/report.hpp"
#include "mtsot/scoring.hpp"
#include "mtsot/segmenter.hpp"
#include "mtsot/simulator.hpp"
#include "mtsot/sot_codec.hpp"

namespace mtsot::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Global {
  std::uint64_t seed = 0;
  int jobs = 1;
  bool strict = false;
  std::string log_level = "warn";

  ordered_json to_json() const {
    return {{"seed", seed}, {"jobs", jobs}, {"strict", strict}, {"log_level", log_level}};
  }
};

struct Context {
  Global global;
  std::ostream& out;
  std::shared_ptr<spdlog::logger> log;
};

void write_report(const std::string& path, const ordered_json& report) {
  if (path.empty()) return;
  auto f = open_output(path);
  f << report.dump(2) << '\n';
}

ordered_json base_report(const std::string& command, const Context& ctx, ordered_json options) {
  ordered_json r;
  r["command"] = command;
  ordered_json cfg = ctx.global.to_json();
  for (auto& [k, v] : options.items()) cfg[k] = v;
  r["config"] = std::move(cfg);
  return r;
}

std::vector<UtteranceGroup> load_groups(const std::vector<Utterance>& utts,
                                        const std::string& groups_path, double max_group_s) {
  std::vector<UtteranceGroup> groups;
  if (!groups_path.empty()) return assemble_groups(utts, load_group_manifest(groups_path));
  SegmentationConfig seg;
  seg.max_group_s = max_group_s;
  for (auto& sg : segment_sessions(utts, seg)) groups.push_back(std::move(sg.group));
  return groups;
}

AssignmentMode parse_assignment(const std::string& s) {
  if (s == "exhaustive") return AssignmentMode::kExhaustive;
  if (s == "hungarian") return AssignmentMode::kHungarian;
  return AssignmentMode::kAuto;
}

PromptHandling parse_prompt_handling(const std::string& s) {
  if (s == "required") return PromptHandling::kRequired;
  if (s == "none") return PromptHandling::kNone;
  return PromptHandling::kAuto;
}

// ---- encode ----------------------------------------------------------------

struct EncodeOpts {
  std::string refs, groups, vocab, vocab_out, out, report;
  std::string mode = "timestamped", language = "en";
  bool no_prompt = false, render = false, word_timing = false, no_sc = false;
  double max_group_s = 30.0;
};

int run_encode(const Context& ctx, const EncodeOpts& o) {
  const auto utts = load_reference_manifest(o.refs);
  const auto groups = load_groups(utts, o.groups, o.max_group_s);
  const Vocabulary vocab = o.vocab.empty() ? Vocabulary::from_utterances(utts) : Vocabulary::load(o.vocab);
  if (!o.vocab_out.empty()) vocab.save(o.vocab_out);
  CodecOptions codec;
  codec.mode = parse_mode(o.mode);
  codec.speaker_change_with_timestamps = !o.no_sc;
  codec.word_timing = o.word_timing;
  const PromptSpec prompt = o.no_prompt ? PromptSpec{} : make_prompt(vocab, o.language, codec.mode);
  const WhitespaceTokenizer tok;

  std::vector<TokenSequence> seqs(groups.size());
  parallel_for(groups.size(), ctx.global.jobs,
               [&](std::size_t i) { seqs[i] = encode_sot(groups[i], codec, prompt, vocab, tok); });
  auto f = open_output(o.out);
  std::size_t total = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    write_token_record(f, {groups[i].group_id, seqs[i]}, o.render ? &vocab : nullptr);
    total += seqs[i].size();
  }
  ctx.log->info("encoded {} groups, {} tokens", groups.size(), total);
  ctx.out << fmt::format("encoded {} groups ({} tokens)\n", groups.size(), total);
  ordered_json r = base_report("encode", ctx,
                               {{"refs", o.refs}, {"groups", o.groups}, {"vocab", o.vocab},
                                {"mode", o.mode}, {"language", o.language}, {"prompt", !o.no_prompt},
                                {"word_timing", o.word_timing}, {"speaker_change", !o.no_sc},
                                {"max_group_s", o.max_group_s}});
  r["groups"] = groups.size();
  r["tokens"] = total;
  write_report(o.report, r);
  return 0;
}

// ---- decode ----------------------------------------------------------------

struct DecodeOpts {
  std::string tokens, vocab, out, repairs, report;
  std::string mode = "timestamped", prompt = "auto";
};

int run_decode(const Context& ctx, const DecodeOpts& o) {
  const Vocabulary vocab = Vocabulary::load(o.vocab);
  auto in = open_input(o.tokens);
  const auto records = read_token_records(in);
  DecodeOptions dopt;
  dopt.mode = parse_mode(o.mode);
  dopt.strict = ctx.global.strict;
  dopt.prompt = parse_prompt_handling(o.prompt);
  std::vector<DecodeResult> results(records.size());
  parallel_for(records.size(), ctx.global.jobs,
               [&](std::size_t i) { results[i] = decode_sot(records[i].ids, dopt, vocab); });
  auto f = open_output(o.out);
  std::optional<std::ofstream> rep;
  if (!o.repairs.empty()) rep = open_output(o.repairs);
  std::size_t repaired = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    write_hypothesis_record(f, {records[i].group_id, results[i].speakers});
    if (!results[i].repairs.empty()) {
      ++repaired;
      if (rep) write_repair_record(*rep, records[i].group_id, results[i].repairs);
    }
  }
  ctx.out << fmt::format("decoded {} sequences ({} repaired)\n", records.size(), repaired);
  ordered_json r = base_report("decode", ctx,
                               {{"tokens", o.tokens}, {"vocab", o.vocab}, {"mode", o.mode},
                                {"prompt", o.prompt}});
  r["sequences"] = records.size();
  r["repaired"] = repaired;
  write_report(o.report, r);
  return 0;
}

// ---- segment ---------------------------------------------------------------

struct SegmentOpts {
  std::string refs, out, ref_as_hyp, report;
  double max_group_s = 30.0;
  bool keep_overlong = false;
};

int run_segment(const Context& ctx, const SegmentOpts& o) {
  const auto utts = load_reference_manifest(o.refs);
  SegmentationConfig seg{o.max_group_s, !o.keep_overlong};
  const auto groups = segment_sessions(utts, seg);
  std::vector<GroupRecord> records;
  ordered_json per_group = ordered_json::array();
  std::size_t overlong = 0;
  for (const auto& sg : groups) {
    GroupRecord rec = group_record(sg.group);
    rec.overlong = sg.overlong;
    overlong += sg.overlong;
    records.push_back(rec);
    per_group.push_back({{"group_id", sg.group.group_id},
                         {"speakers", distinct_speakers(sg.group).size()},
                         {"span_s", group_span(sg.group)},
                         {"overlap_ratio", overlap_ratio(sg.group)},
                         {"overlong", sg.overlong}});
  }
  {
    auto f = open_output(o.out);
    write_group_manifest(f, records);
  }
  if (!o.ref_as_hyp.empty()) {
    auto f = open_output(o.ref_as_hyp);
    for (const auto& sg : groups) write_hypothesis_record(f, {sg.group.group_id, reference_as_hypothesis(sg.group)});
  }
  ctx.out << fmt::format("{} groups ({} flagged overlong)\n", groups.size(), overlong);
  ordered_json r = base_report("segment", ctx,
                               {{"refs", o.refs}, {"max_group_s", o.max_group_s},
                                {"keep_overlong", o.keep_overlong}});
  r["groups"] = std::move(per_group);
  write_report(o.report, r);
  return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimulateOpts {
  std::string pool, out, groups_out, report;
  SimConfig sim;
};

int run_simulate(const Context& ctx, SimulateOpts o) {
  o.sim.seed = ctx.global.seed;
  const SpeakerPool pool = make_pool(load_reference_manifest(o.pool));
  const SimulationResult res = simulate(pool, o.sim, ctx.global.jobs);
  std::vector<Utterance> utts;
  std::vector<GroupRecord> records;
  ordered_json per_group = ordered_json::array();
  for (const auto& g : res.groups) {
    utts.insert(utts.end(), g.group.utterances.begin(), g.group.utterances.end());
    records.push_back(group_record(g.group));
    per_group.push_back({{"group_id", g.group.group_id},
                         {"speakers", g.group.utterances.size()},
                         {"span_s", group_span(g.group)},
                         {"overlap_ratio", g.overlap_ratio},
                         {"attempts", g.attempts}});
  }
  {
    auto f = open_output(o.out);
    write_reference_manifest(f, utts);
  }
  if (!o.groups_out.empty()) {
    auto f = open_output(o.groups_out);
    write_group_manifest(f, records);
  }
  ordered_json failures = ordered_json::array();
  for (const auto& [index, what] : res.failures) {
    ctx.log->warn("{}", what);
    failures.push_back({{"group_index", index}, {"error", what}});
  }
  ctx.out << fmt::format("simulated {} groups ({} placement failures)\n", res.groups.size(),
                         res.failures.size());
  ordered_json r = base_report("simulate", ctx,
                               {{"pool", o.pool},
                                {"n", o.sim.n_groups},
                                {"max_speakers", o.sim.max_speakers},
                                {"min_speakers", o.sim.min_speakers},
                                {"max_group_s", o.sim.max_group_s},
                                {"overlap_low", o.sim.overlap_low},
                                {"overlap_high", o.sim.overlap_high},
                                {"max_retries", o.sim.max_retries}});
  r["groups"] = std::move(per_group);
  r["failures"] = std::move(failures);
  write_report(o.report, r);
  if (!res.failures.empty() && ctx.global.strict)
    throw PlacementFailure(fmt::format("{} groups could not be placed", res.failures.size()));
  return 0;
}

// ---- score -----------------------------------------------------------------

struct ScoreOpts {
  std::string refs, groups, hyps, report, rttm_dir;
  std::string unit = "word", normalizer = "default", assignment = "auto";
  std::size_t cap = 8;
  double frame_s = 0.02, max_group_s = 30.0;
  bool no_lder = false;
};

int run_score(const Context& ctx, const ScoreOpts& o) {
  const auto utts = load_reference_manifest(o.refs);
  const auto groups = load_groups(utts, o.groups, o.max_group_s);
  auto in = open_input(o.hyps);
  std::map<std::string, std::vector<SpeakerHypothesis>> hyps;
  for (auto& rec : read_hypothesis_records(in)) hyps[rec.group_id] = std::move(rec.speakers);
  for (const auto& [id, _] : hyps)
    if (std::none_of(groups.begin(), groups.end(), [&](const UtteranceGroup& g) { return g.group_id == id; }))
      throw ValidationError(ValidationError::Kind::kSession,
                            fmt::format("hypothesis for unknown group '{}'", id));

  ScoreOptions so;
  so.unit = parse_unit(o.unit);
  so.mode = parse_assignment(o.assignment);
  so.exhaustive_cap = o.cap;
  so.frame_s = o.frame_s;
  so.lder = !o.no_lder;
  const auto norm = make_normalizer(o.normalizer);
  std::vector<GroupScore> scores(groups.size());
  std::size_t missing = 0;
  for (const auto& g : groups) missing += !hyps.count(g.group_id);
  if (missing) ctx.log->warn("{} groups have no hypothesis and are scored as empty", missing);
  parallel_for(groups.size(), ctx.global.jobs, [&](std::size_t i) {
    const auto it = hyps.find(groups[i].group_id);
    static const std::vector<SpeakerHypothesis> kNone;
    scores[i] = score_group(groups[i], it == hyps.end() ? kNone : it->second, so, norm.get());
  });
  const ErrorRateReport err = corpus_error_rate(scores);
  const SpeakerCountConfusion conf = speaker_count_confusion(scores);
  const std::string metric = so.unit == Unit::kWord ? "WER" : "CER";
  const std::string table =
      render_breakdown_table({error_rate_row(metric + " (%)", err), lder_row("LDER (%)", scores)}) + "\n" +
      render_confusion_table(conf);
  const LderParts lp = pooled_lder(scores);
  ctx.out << fmt::format("{} {:.1f}%  LDER {}\n\n", metric, 100.0 * err.rate(),
                         lp.ref_frames ? fmt::format("{:.1f}%", 100.0 * lp.rate()) : "-")
          << table;

  if (!o.rttm_dir.empty()) {
    fs::create_directories(o.rttm_dir);
    auto ref = open_output(fs::path(o.rttm_dir) / "ref.rttm");
    auto hyp = open_output(fs::path(o.rttm_dir) / "hyp.rttm");
    for (const auto& g : groups) {
      write_reference_rttm(ref, g);
      if (auto it = hyps.find(g.group_id); it != hyps.end()) write_hypothesis_rttm(hyp, g.group_id, it->second);
    }
  }

  ordered_json r = base_report("score", ctx,
                               {{"refs", o.refs}, {"groups", o.groups}, {"hyps", o.hyps},
                                {"unit", o.unit}, {"normalizer", o.normalizer},
                                {"assignment", o.assignment}, {"exhaustive_cap", o.cap},
                                {"frame_s", o.frame_s}, {"lder", !o.no_lder},
                                {"max_group_s", o.max_group_s}});
  r["error_rate"] = error_rate_to_json(err);
  r["lder"] = lder_to_json(scores);
  r["speaker_counting"] = confusion_to_json(conf);
  ordered_json per_group = ordered_json::array();
  for (const auto& s : scores) {
    ordered_json g{{"group_id", s.group_id},
                   {"errors", s.edit.errors()},
                   {"substitutions", s.edit.substitutions},
                   {"insertions", s.edit.insertions},
                   {"deletions", s.edit.deletions},
                   {"ref_len", s.edit.ref_len},
                   {"ref_speakers", s.ref_speakers},
                   {"hyp_speakers", s.hyp_speakers}};
    g["lder"] = s.lder_parts ? ordered_json(s.lder_parts->rate()) : ordered_json(nullptr);
    per_group.push_back(std::move(g));
  }
  r["groups"] = std::move(per_group);
  r["table"] = table;
  write_report(o.report, r);
  return 0;
}

// ---- count -----------------------------------------------------------------

struct CountOpts {
  std::string tokens, vocab, refs, groups, report;
  double max_group_s = 30.0;
};

int run_count(const Context& ctx, const CountOpts& o) {
  const Vocabulary vocab = Vocabulary::load(o.vocab);
  auto in = open_input(o.tokens);
  const auto records = read_token_records(in);
  ordered_json r = base_report("count", ctx,
                               {{"tokens", o.tokens}, {"vocab", o.vocab}, {"refs", o.refs},
                                {"groups", o.groups}});
  ordered_json per_group = ordered_json::array();
  std::map<std::string, int> counts;
  for (const auto& rec : records) {
    const int n = count_speakers(rec.ids, vocab);
    counts[rec.group_id] = n;
    ctx.out << rec.group_id << '\t' << n << '\n';
    per_group.push_back({{"group_id", rec.group_id}, {"speakers", n}});
  }
  r["groups"] = std::move(per_group);
  if (!o.refs.empty()) {
    const auto groups = load_groups(load_reference_manifest(o.refs), o.groups, o.max_group_s);
    std::vector<GroupScore> scores;
    for (const auto& g : groups) {
      GroupScore s;
      s.group_id = g.group_id;
      s.ref_speakers = static_cast<int>(distinct_speakers(g).size());
      const auto it = counts.find(g.group_id);
      s.hyp_speakers = it == counts.end() ? 0 : it->second;
      scores.push_back(std::move(s));
    }
    const auto conf = speaker_count_confusion(scores);
    ctx.out << '\n' << render_confusion_table(conf);
    r["speaker_counting"] = confusion_to_json(conf);
  }
  write_report(o.report, r);
  return 0;
}

// ---- demo-train ------------------------------------------------------------

struct DemoOpts {
  std::string out_dir, report, config;
  nn::ToyTaskConfig task;
  nn::ToyTrainConfig train;
  int adapter_steps = 0;
  int bottleneck = 16;
};

void apply_train_config(DemoOpts& o, const nlohmann::json& j) {
  try {
    if (j.contains("task")) {
      const auto& t = j["task"];
      o.task.groups = t.value("groups", o.task.groups);
      o.task.symbols = t.value("symbols", o.task.symbols);
      o.task.min_words = t.value("min_words", o.task.min_words);
      o.task.max_words = t.value("max_words", o.task.max_words);
      o.task.frames_per_word = t.value("frames_per_word", o.task.frames_per_word);
      o.task.timestamp_count = t.value("timestamp_count", o.task.timestamp_count);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      o.train.width = t.value("width", o.train.width);
      o.train.heads = t.value("heads", o.train.heads);
      o.train.layers = t.value("layers", o.train.layers);
      o.train.max_steps = t.value("max_steps", o.train.max_steps);
      o.train.batch_size = t.value("batch_size", o.train.batch_size);
      o.train.eval_every = t.value("eval_every", o.train.eval_every);
      o.train.stop_accuracy = t.value("stop_accuracy", o.train.stop_accuracy);
      if (t.contains("optim")) {
        const auto& p = t["optim"];
        o.train.optim.lr = p.value("lr", o.train.optim.lr);
        o.train.optim.beta1 = p.value("beta1", o.train.optim.beta1);
        o.train.optim.beta2 = p.value("beta2", o.train.optim.beta2);
        o.train.optim.eps = p.value("eps", o.train.optim.eps);
        o.train.optim.weight_decay = p.value("weight_decay", o.train.optim.weight_decay);
      }
    }
    o.adapter_steps = j.value("adapter_steps", o.adapter_steps);
    o.bottleneck = j.value("bottleneck", o.bottleneck);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("training config: {}", e.what()));
  }
}

int run_demo_train(const Context& ctx, DemoOpts o) {
  if (!o.config.empty()) {
    auto in = open_input(o.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(fmt::format("{}: {}", o.config, e.what()));
    }
    apply_train_config(o, j);
  }
  o.task.seed = ctx.global.seed;
  o.train.seed = ctx.global.seed;
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);

  ordered_json resolved{{"task", o.task.to_json()},
                        {"train", o.train.to_json()},
                        {"adapter_steps", o.adapter_steps},
                        {"bottleneck", o.bottleneck}};
  {
    auto f = open_output(dir / "config.json");
    f << resolved.dump(2) << '\n';
  }

  const nn::ToyCorpus corpus = nn::make_toy_corpus(o.task);
  auto log = open_output(dir / "train_log.jsonl");
  nn::ToyTrainResult tr = nn::train_toy(corpus, o.train, [&](const nn::TrainLogEntry& e) {
    ordered_json j{{"step", e.step}, {"loss", e.loss}, {"lr", e.lr}};
    if (e.accuracy) {
      j["accuracy"] = *e.accuracy;
      ctx.log->info("step {} loss {:.4f} accuracy {:.4f}", e.step + 1, e.loss, *e.accuracy);
    }
    log << j.dump() << '\n';
  });
  const nn::ToyEvaluation ev = nn::evaluate_toy(tr.model, corpus, ctx.global.jobs);

  ordered_json r = base_report("demo-train", ctx, resolved);
  r["steps"] = tr.steps;
  r["steps_to_95"] = tr.steps_to_95;
  r["evaluation"] = ev.to_json();
  nn::TrainableMask mask = nn::full_mask(tr.model);
  if (o.adapter_steps > 0) {
    const auto ad = nn::train_adapters_toy(tr.model, corpus, nn::AdapterConfig{o.bottleneck},
                                           o.adapter_steps, o.train.batch_size, o.train.optim,
                                           ctx.global.seed);
    mask = nn::adapter_mask(tr.model, corpus.vocab.special(Special::kSpeakerChange));
    r["adapter_training"] = {{"steps", ad.steps},
                             {"trainable", ad.trainable},
                             {"final_loss", ad.final_loss},
                             {"frozen_sha256_before", ad.frozen_before},
                             {"frozen_sha256_after", ad.frozen_after},
                             {"frozen_unchanged", ad.frozen_before == ad.frozen_after}};
  }
  nn::save_checkpoint(dir / "model.ckpt", tr.model, mask, resolved);
  corpus.vocab.save(dir / "vocab.json");
  {
    auto f = open_output(dir / "report.json");
    f << r.dump(2) << '\n';
  }
  write_report(o.report, r);
  ctx.out << fmt::format(
      "trained {} steps (95% teacher-forced accuracy at step {}); accuracy {:.1f}%, "
      "token error {:.1f}%, speaker counting {:.1f}%\n",
      tr.steps, tr.steps_to_95, 100.0 * ev.accuracy, 100.0 * ev.token_error.rate(),
      100.0 * ev.speaker_count_accuracy);
  return 0;
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckOpts {
  std::string report;
  nn::GradcheckConfig cfg;
};

int run_gradcheck(const Context& ctx, GradcheckOpts o) {
  o.cfg.seed = ctx.global.seed;
  const nn::GradcheckReport g = nn::gradient_check(o.cfg);
  for (const auto& c : g.classes)
    ctx.out << fmt::format("{:<14} {:>6} elements  rel {:.3e}  max abs {:.3e}  {}\n",
                           nn::param_kind_name(c.kind), c.elements, c.relative_error,
                           c.max_abs_error, c.pass ? "PASS" : "FAIL");
  ordered_json r = base_report("gradcheck", ctx,
                               {{"width", o.cfg.width}, {"layers", o.cfg.layers},
                                {"heads", o.cfg.heads}, {"bottleneck", o.cfg.bottleneck},
                                {"step", o.cfg.step}, {"tolerance", o.cfg.tolerance}});
  r["result"] = g.to_json();
  write_report(o.report, r);
  return g.pass ? 0 : 3;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-talker SOT toolkit"};
  app.name("mtsot");
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict", g.strict, "Strict codec decoding and placement");
  app.add_option("--log-level", g.log_level, "Log level")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  const auto modes = CLI::IsMember({"plain", "timestamped"});

  EncodeOpts enc;
  auto* s_enc = app.add_subcommand("encode", "Serialize reference groups into SOT token sequences");
  s_enc->add_option("--refs", enc.refs, "Reference manifest")->required();
  s_enc->add_option("--groups", enc.groups, "Group manifest (default: segment the sessions)");
  s_enc->add_option("--vocab", enc.vocab, "Vocabulary file (default: built from the references)");
  s_enc->add_option("--vocab-out", enc.vocab_out, "Write the vocabulary used");
  s_enc->add_option("--out", enc.out, "Token records")->required();
  s_enc->add_option("--mode", enc.mode)->check(modes);
  s_enc->add_option("--language", enc.language);
  s_enc->add_option("--max-group-s", enc.max_group_s);
  s_enc->add_flag("--no-prompt", enc.no_prompt, "Emit the payload only");
  s_enc->add_flag("--render", enc.render, "Add a readable rendering to each record");
  s_enc->add_flag("--word-timing", enc.word_timing, "Use word timings for segments");
  s_enc->add_flag("--no-sc", enc.no_sc, "Omit <sc> between speakers in timestamped mode");
  s_enc->add_option("--report", enc.report);

  DecodeOpts dec;
  auto* s_dec = app.add_subcommand("decode", "Parse SOT token sequences into speaker hypotheses");
  s_dec->add_option("--tokens", dec.tokens)->required();
  s_dec->add_option("--vocab", dec.vocab)->required();
  s_dec->add_option("--out", dec.out, "Hypothesis records")->required();
  s_dec->add_option("--mode", dec.mode)->check(modes);
  s_dec->add_option("--prompt", dec.prompt)->check(CLI::IsMember({"auto", "required", "none"}));
  s_dec->add_option("--repairs", dec.repairs, "Repair report (lenient mode)");
  s_dec->add_option("--report", dec.report);

  SegmentOpts seg;
  auto* s_seg = app.add_subcommand("segment", "Cut sessions into utterance groups");
  s_seg->add_option("--refs", seg.refs)->required();
  s_seg->add_option("--out", seg.out, "Group manifest")->required();
  s_seg->add_option("--max-group-s", seg.max_group_s)->check(CLI::PositiveNumber);
  s_seg->add_flag("--keep-overlong", seg.keep_overlong, "Flag overlong groups instead of dropping them");
  s_seg->add_option("--ref-as-hyp", seg.ref_as_hyp, "Write the references as hypothesis records");
  s_seg->add_option("--report", seg.report);

  SimulateOpts sim;
  auto* s_sim = app.add_subcommand("simulate", "Simulate overlapped groups from a single-talker pool");
  s_sim->add_option("--pool", sim.pool)->required();
  s_sim->add_option("--out", sim.out, "Reference manifest of simulated groups")->required();
  s_sim->add_option("--groups-out", sim.groups_out, "Group manifest");
  s_sim->add_option("--n", sim.sim.n_groups);
  s_sim->add_option("--max-speakers", sim.sim.max_speakers);
  s_sim->add_option("--min-speakers", sim.sim.min_speakers);
  s_sim->add_option("--max-group-s", sim.sim.max_group_s);
  s_sim->add_option("--overlap-low", sim.sim.overlap_low);
  s_sim->add_option("--overlap-high", sim.sim.overlap_high);
  s_sim->add_option("--max-retries", sim.sim.max_retries);
  s_sim->add_option("--report", sim.report);

  ScoreOpts sc;
  auto* s_sc = app.add_subcommand("score", "Permutation-invariant WER/CER, LDER and speaker counting");
  s_sc->add_option("--refs", sc.refs)->required();
  s_sc->add_option("--hyps", sc.hyps)->required();
  s_sc->add_option("--groups", sc.groups);
  s_sc->add_option("--unit", sc.unit)->check(CLI::IsMember({"word", "char"}));
  s_sc->add_option("--normalizer", sc.normalizer)->check(CLI::IsMember({"default", "none"}));
  s_sc->add_option("--assignment", sc.assignment)
      ->check(CLI::IsMember({"auto", "exhaustive", "hungarian"}));
  s_sc->add_option("--exhaustive-cap", sc.cap);
  s_sc->add_option("--frame-s", sc.frame_s)->check(CLI::PositiveNumber);
  s_sc->add_option("--max-group-s", sc.max_group_s);
  s_sc->add_flag("--no-lder", sc.no_lder);
  s_sc->add_option("--rttm-dir", sc.rttm_dir, "Write ref.rttm and hyp.rttm");
  s_sc->add_option("--report", sc.report);

  CountOpts cnt;
  auto* s_cnt = app.add_subcommand("count", "Count speakers in token sequences");
  s_cnt->add_option("--tokens", cnt.tokens)->required();
  s_cnt->add_option("--vocab", cnt.vocab)->required();
  s_cnt->add_option("--refs", cnt.refs, "References for a confusion matrix");
  s_cnt->add_option("--groups", cnt.groups);
  s_cnt->add_option("--max-group-s", cnt.max_group_s);
  s_cnt->add_option("--report", cnt.report);

  DemoOpts demo;
  auto* s_demo = app.add_subcommand("demo-train", "Train the toy model on synthetic overlapped symbols");
  s_demo->add_option("--out-dir", demo.out_dir)->required();
  s_demo->add_option("--config", demo.config, "Training config JSON");
  s_demo->add_option("--groups", demo.task.groups);
  s_demo->add_option("--max-steps", demo.train.max_steps);
  s_demo->add_option("--batch-size", demo.train.batch_size);
  s_demo->add_option("--eval-every", demo.train.eval_every);
  s_demo->add_option("--lr", demo.train.optim.lr);
  s_demo->add_option("--width", demo.train.width);
  s_demo->add_option("--heads", demo.train.heads);
  s_demo->add_option("--layers", demo.train.layers);
  s_demo->add_option("--adapter-steps", demo.adapter_steps, "Adapter-mode steps after training");
  s_demo->add_option("--bottleneck", demo.bottleneck);
  s_demo->add_option("--report", demo.report);

  GradcheckOpts gc;
  auto* s_gc = app.add_subcommand("gradcheck", "Finite-difference check of every parameter class");
  s_gc->add_option("--width", gc.cfg.width);
  s_gc->add_option("--heads", gc.cfg.heads);
  s_gc->add_option("--layers", gc.cfg.layers);
  s_gc->add_option("--bottleneck", gc.cfg.bottleneck);
  s_gc->add_option("--step", gc.cfg.step);
  s_gc->add_option("--tolerance", gc.cfg.tolerance);
  s_gc->add_option("--report", gc.report);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("mtsot", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::from_str(g.log_level));
  const Context ctx{g, out, logger};
  logger->debug("kernel backend: {}", kernels::backend_name(kernels::active_backend()));

  try {
    if (*s_enc) return run_encode(ctx, enc);
    if (*s_dec) return run_decode(ctx, dec);
    if (*s_seg) return run_segment(ctx, seg);
    if (*s_sim) return run_simulate(ctx, sim);
    if (*s_sc) return run_score(ctx, sc);
    if (*s_cnt) return run_count(ctx, cnt);
    if (*s_demo) return run_demo_train(ctx, demo);
    if (*s_gc) return run_gradcheck(ctx, gc);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 1;
}

}  // namespace mtsot::cli
