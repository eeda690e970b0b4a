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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace mtsot {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mtsot_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream refs(path("refs.jsonl"));
    refs << R"({"session":"S1","speaker":"A","start_s":0.0,"end_s":2.0,"words":[{"w":"hello"},{"w":"there"}]})" "\n"
         << R"({"session":"S1","speaker":"B","start_s":1.0,"end_s":3.0,"words":[{"w":"good"},{"w":"morning"}]})" "\n"
         << R"({"session":"S1","speaker":"A","start_s":6.0,"end_s":7.5,"words":[{"w":"bye"}]})" "\n"
         << R"({"session":"S1","speaker":"C","start_s":10.0,"end_s":12.0,"words":[{"w":"later"}]})" "\n"
         << R"({"session":"S1","speaker":"D","start_s":13.0,"end_s":16.0,"words":[{"w":"see"},{"w":"you"}]})" "\n";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(path(name));
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, HelpSucceeds) {
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_NE(out_.str().find("segment"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"segment"}), 1);
  EXPECT_EQ(run({"bogus"}), 1);
  EXPECT_EQ(run({"score", "--refs", path("refs.jsonl"), "--hyps", "x", "--unit", "syllable"}), 1);
}

TEST_F(Cli, MissingFileExitsTwo) {
  EXPECT_EQ(run({"segment", "--refs", path("nope.jsonl"), "--out", path("g.jsonl")}), 2);
}

TEST_F(Cli, SegmentThenScoreReferenceIsPerfect) {
  ASSERT_EQ(run({"segment", "--refs", path("refs.jsonl"), "--out", path("groups.jsonl"), "--ref-as-hyp",
                 path("hyps.jsonl")}),
            0)
      << err_.str();
  ASSERT_EQ(run({"score", "--refs", path("refs.jsonl"), "--groups", path("groups.jsonl"), "--hyps",
                 path("hyps.jsonl"), "--report", path("report.json")}),
            0)
      << err_.str();
  EXPECT_NE(out_.str().find("WER 0.0%"), std::string::npos) << out_.str();
  EXPECT_NE(out_.str().find("avg."), std::string::npos);
  EXPECT_NE(out_.str().find("Estimated # of talkers (%)"), std::string::npos);
  const auto report = nlohmann::json::parse(slurp("report.json"));
  EXPECT_EQ(report["error_rate"]["errors"], 0);
  EXPECT_TRUE(report.contains("config"));
}

TEST_F(Cli, EncodeDecodeRoundTrip) {
  ASSERT_EQ(run({"segment", "--refs", path("refs.jsonl"), "--out", path("groups.jsonl"), "--ref-as-hyp",
                 path("expected.jsonl")}),
            0);
  ASSERT_EQ(run({"encode", "--refs", path("refs.jsonl"), "--groups", path("groups.jsonl"), "--vocab-out",
                 path("vocab.json"), "--out", path("tokens.jsonl")}),
            0)
      << err_.str();
  ASSERT_EQ(run({"--strict", "decode", "--tokens", path("tokens.jsonl"), "--vocab", path("vocab.json"), "--out",
                 path("hyps.jsonl")}),
            0)
      << err_.str();
  ASSERT_EQ(run({"score", "--refs", path("refs.jsonl"), "--groups", path("groups.jsonl"), "--hyps",
                 path("hyps.jsonl")}),
            0);
  EXPECT_NE(out_.str().find("WER 0.0%  LDER 0.0%"), std::string::npos) << out_.str();
  ASSERT_EQ(run({"count", "--tokens", path("tokens.jsonl"), "--vocab", path("vocab.json"), "--refs",
                 path("refs.jsonl"), "--groups", path("groups.jsonl")}),
            0)
      << err_.str();
}

TEST_F(Cli, SimulateIsByteIdentical) {
  std::ofstream pool(path("pool.jsonl"));
  for (int s = 0; s < 6; ++s)
    for (int i = 0; i < 3; ++i)
      pool << nlohmann::json{{"session", "P"}, {"speaker", "s" + std::to_string(s)},
                             {"start_s", i * 20.0}, {"end_s", i * 20.0 + 4.0 + s + i},
                             {"words", {{{"w", "x"}}}}}
                  .dump()
           << "\n";
  pool.close();
  for (const char* jobs : {"1", "3"}) {
    ASSERT_EQ(run({"simulate", "--pool", path("pool.jsonl"), "--out", path(std::string("sim") + jobs + ".jsonl"),
                   "--groups-out", path(std::string("grp") + jobs + ".jsonl"), "--n", "20", "--seed", "4", "--jobs",
                   jobs}),
              0)
        << err_.str();
  }
  EXPECT_EQ(slurp("sim1.jsonl"), slurp("sim3.jsonl"));
  EXPECT_EQ(slurp("grp1.jsonl"), slurp("grp3.jsonl"));
  EXPECT_FALSE(slurp("sim1.jsonl").empty());
}

TEST_F(Cli, GradcheckReports) {
  ASSERT_EQ(run({"gradcheck", "--report", path("gc.json")}), 0) << err_.str();
  const auto report = nlohmann::json::parse(slurp("gc.json"));
  EXPECT_EQ(report["result"]["pass"], true);
}

TEST_F(Cli, StrictDecodeRejectsMalformed) {
  ASSERT_EQ(run({"segment", "--refs", path("refs.jsonl"), "--out", path("groups.jsonl")}), 0);
  ASSERT_EQ(run({"encode", "--refs", path("refs.jsonl"), "--groups", path("groups.jsonl"), "--vocab-out",
                 path("vocab.json"), "--out", path("tokens.jsonl")}),
            0);
  // Drop the final token (<eos>) of every record.
  std::ifstream in(path("tokens.jsonl"));
  std::ofstream out(path("broken.jsonl"));
  for (std::string line; std::getline(in, line);) {
    auto j = nlohmann::json::parse(line);
    j["ids"].erase(j["ids"].size() - 1);
    out << j.dump() << "\n";
  }
  out.close();
  EXPECT_EQ(run({"decode", "--tokens", path("broken.jsonl"), "--vocab", path("vocab.json"), "--out",
                 path("h.jsonl"), "--strict"}),
            3);
  EXPECT_EQ(run({"decode", "--tokens", path("broken.jsonl"), "--vocab", path("vocab.json"), "--out",
                 path("h.jsonl"), "--repairs", path("r.jsonl")}),
            0);
  EXPECT_NE(slurp("r.jsonl").find("missing_eos"), std::string::npos);
}

}  // namespace
}  // namespace mtsot
