// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "pc/cli.hpp"
#include "support/fake_service.hpp"
#include "support/fixtures.hpp"

namespace pc {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code;
  std::string out, err;
};

RunResult run_cli(std::vector<std::string> args, const std::string& stdin_text = "") {
  args.insert(args.begin(), "pc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  int code = cli::run(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

std::vector<nlohmann::json> json_lines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  fs::path dir;
  std::string corpus;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("pc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir);
    auto r = run_cli({"synth", "--n-examples", "4", "--n-demos", "6", "--demo-words", "60", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    corpus = r.out;
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) {
    auto p = dir / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }
};

TEST_F(CliTest, SynthWritesLoadableDataset) {
  std::istringstream in(corpus);
  auto ex = load_dataset(in);
  ASSERT_EQ(ex.size(), 4u);
  EXPECT_EQ(ex[0].bundle.demonstrations.size(), 6u);
  EXPECT_EQ(run_cli({"synth", "--n-examples", "4", "--n-demos", "6", "--demo-words", "60", "--seed", "3"}).out, corpus);
}

TEST_F(CliTest, CompressWritesOutputsAndReport) {
  auto report = dir / "report.jsonl";
  auto r = run_cli({"compress", "--tau", "0.5", "--segment-size", "50", "--report", report.string()}, corpus);
  ASSERT_EQ(r.code, 0) << r.err;
  auto outputs = json_lines(r.out);
  ASSERT_EQ(outputs.size(), 4u);
  EXPECT_TRUE(outputs[0].contains("compressed_prompt"));
  auto rep = json_lines(slurp(report));
  ASSERT_EQ(rep.size(), 5u);
  EXPECT_EQ(rep[0]["kind"], "example");
  EXPECT_EQ(rep[4]["kind"], "aggregate");
  EXPECT_EQ(rep[0]["compressed_tokens"], outputs[0]["compressed_tokens"]);
  EXPECT_NE(r.err.find("aggregate"), std::string::npos);
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  auto cfg = write("c.conf", "# test\ntau=0.3\nsegment_size=50\n");
  auto from_file = run_cli({"compress", "--config", cfg.string()}, corpus);
  auto explicit_flags = run_cli({"compress", "--tau", "0.3", "--segment-size", "50"}, corpus);
  auto overridden = run_cli({"compress", "--config", cfg.string(), "--tau", "0.6"}, corpus);
  auto flags_06 = run_cli({"compress", "--tau", "0.6", "--segment-size", "50"}, corpus);
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(from_file.out, explicit_flags.out);
  EXPECT_EQ(overridden.out, flags_06.out);
  EXPECT_NE(from_file.out, overridden.out);
}

TEST_F(CliTest, InvalidValuesAreReported) {
  auto r = run_cli({"compress", "--k1", "-0.1"}, corpus);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("k1"), std::string::npos);
  EXPECT_NE(run_cli({"compress", "--no-such-flag"}, corpus).code, 0);
  EXPECT_NE(run_cli({}).code, 0);
  auto cfg = write("bad.conf", "tau=0.5\nbogus=1\n");
  r = run_cli({"compress", "--config", cfg.string()}, corpus);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("2"), std::string::npos);
}

TEST_F(CliTest, EvalRecallReportsEveryK) {
  auto r = run_cli({"eval-recall"}, corpus);
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["n_examples"], 4);
  ASSERT_EQ(j["recall"].size(), 6u);
  EXPECT_EQ(j["recall"][5]["recall"], 1.0);

  std::string ext;
  for (int i = 0; i < 4; ++i)
    ext += nlohmann::json{{"id", "syn-" + std::to_string(i)}, {"ranking", {0, 1, 2, 3, 4, 5}}}.dump() + "\n";
  auto path = write("ext.jsonl", ext);
  r = run_cli({"eval-recall", "--k-max", "3", "--external-rankings", path.string()}, corpus);
  ASSERT_EQ(r.code, 0) << r.err;
  j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["external"]["recall"].size(), 3u);
}

TEST_F(CliTest, SweepPrintsOneRowPerGridPoint) {
  auto r = run_cli({"sweep", "--segment-size", "50", "--tau-o-grid", "0.1,0.2", "--k1-grid", "0.4", "--k2-grid", "0.1"},
                   corpus);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
  EXPECT_EQ(run_cli({"sweep", "--tau-o-grid", "x"}, corpus).code, 2);
}

TEST_F(CliTest, RemoteBackendMatchesToyBackend) {
  std::istringstream in(corpus);
  auto bundles = load_bundles(in);
  auto texts = bundle_texts(bundles);
  texts.push_back(kDefaultRestrictText);
  testing::FakeScoringService service(ToyBigramLM::train(texts));
  auto toy = run_cli({"compress", "--segment-size", "50"}, corpus);
  auto remote = run_cli({"compress", "--segment-size", "50", "--backend", "remote", "--remote-url", service.url()}, corpus);
  ASSERT_EQ(remote.code, 0) << remote.err;
  EXPECT_EQ(remote.out, toy.out);
}

TEST_F(CliTest, UnreachableRemoteFailsEveryExample) {
  auto r = run_cli({"compress", "--backend", "remote", "--remote-url", "http://127.0.0.1:1", "--remote-timeout-ms", "200"},
                   corpus);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("failed"), std::string::npos);
}

}  // namespace
}  // namespace pc
