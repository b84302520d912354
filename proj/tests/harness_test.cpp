// SPDX-License-Identifier: Apache-2.0
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pc/harness.hpp"
#include "support/fixtures.hpp"

namespace pc {
namespace {

std::string record(const std::string& question, std::size_t n_demos, std::vector<std::size_t> golds) {
  nlohmann::json demos = nlohmann::json::array();
  for (std::size_t k = 0; k < n_demos; ++k) {
    nlohmann::json d{{"text", "passage " + std::to_string(k)}};
    if (std::find(golds.begin(), golds.end(), k) != golds.end()) d["is_gold"] = true;
    demos.push_back(d);
  }
  nlohmann::json j{{"demonstrations", demos}};
  if (!question.empty()) j["question"] = question;
  return j.dump();
}

ErrorCode code_of(const std::string& text) {
  std::istringstream in(text);
  try {
    load_dataset(in);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::ProtocolError;
}

EvalExample example(std::size_t gold) {
  EvalExample e;
  e.gold_index = gold;
  return e;
}

TEST(LoadDatasetTest, EmptyInputGivesNoExamples) {
  std::istringstream in("\n  \n");
  EXPECT_TRUE(load_dataset(in).empty());
}

TEST(LoadDatasetTest, GoldPositionTenIsIndexNine) {
  std::istringstream in(record("q?", 12, {9}) + "\n");
  auto ex = load_dataset(in);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].gold_index, 9u);
  EXPECT_EQ(ex[0].bundle.id, "1");
}

TEST(LoadDatasetTest, RejectsMalformedRecords) {
  EXPECT_EQ(code_of(record("", 3, {0})), ErrorCode::ParseError);
  EXPECT_EQ(code_of(record("q?", 3, {})), ErrorCode::MissingGold);
  EXPECT_EQ(code_of(record("q?", 3, {0, 2})), ErrorCode::MultipleGold);
  EXPECT_EQ(code_of("{not json"), ErrorCode::ParseError);
  std::istringstream in(record("q?", 3, {0}) + "\n\n" + record("q?", 3, {}));
  try {
    load_dataset(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(RecallTest, HandComputedFractions) {
  std::vector<EvalExample> ex{example(0), example(2), example(1), example(3)};
  std::vector<std::vector<std::size_t>> rankings{{0, 1, 2, 3}, {2, 0, 1, 3}, {0, 2, 1, 3}, {0, 1, 2, 3}};
  auto r = recall_at_k(ex, rankings, 4);
  EXPECT_DOUBLE_EQ(r.per_k[1], 0.5);
  EXPECT_DOUBLE_EQ(r.per_k[2], 0.5);
  EXPECT_DOUBLE_EQ(r.per_k[3], 0.75);
  EXPECT_DOUBLE_EQ(r.per_k[4], 1.0);
  auto j = to_json(r);
  EXPECT_EQ(j["recall"][0]["k"], 1);
  EXPECT_EQ(j["n_examples"], 4);
}

TEST(RecallTest, MonotoneAndCompleteForFullRankings) {
  std::mt19937_64 rng(4);
  std::vector<EvalExample> ex;
  std::vector<std::vector<std::size_t>> rankings;
  for (int i = 0; i < 50; ++i) {
    std::vector<std::size_t> r(20);
    std::iota(r.begin(), r.end(), std::size_t{0});
    std::shuffle(r.begin(), r.end(), rng);
    rankings.push_back(r);
    ex.push_back(example(rng() % 20));
  }
  auto res = recall_at_k(ex, rankings, 20);
  for (std::size_t k = 2; k <= 20; ++k) EXPECT_LE(res.per_k[k - 1], res.per_k[k]);
  EXPECT_EQ(res.per_k[20], 1.0);
}

TEST(RecallTest, SyntheticCorpusRetrievesGold) {
  auto bundles = testing::synthetic_bundles(30, 77);
  auto toy = testing::toy_for(bundles);
  std::vector<EvalExample> ex;
  for (const auto& b : bundles) ex.push_back({b, testing::gold_of(b), {}});
  auto rankings = rank_examples(ex, CompressionConfig{}, toy->backends(), 4);
  auto r = recall_at_k(ex, rankings, 20);
  EXPECT_GE(r.per_k[1], 0.95);
  EXPECT_EQ(r.per_k[20], 1.0);
}

class JobTest : public ::testing::Test {
 protected:
  std::vector<PromptBundle> bundles = testing::synthetic_bundles(6, 3, 6, 50);
  std::unique_ptr<ToyBackendSet> toy = testing::toy_for(bundles);
  CompressionConfig config() const {
    CompressionConfig c;
    c.segment_size = 40;
    return c;
  }
};

TEST_F(JobTest, FailingExampleDoesNotStopTheBatch) {
  auto input = bundles;
  input[2].demonstrations.clear();
  auto job = run_job(input, config(), toy->backends());
  EXPECT_EQ(job.aggregate.n_failed, 1u);
  EXPECT_FALSE(job.outcomes[2].result);
  EXPECT_FALSE(job.outcomes[2].error.empty());
  for (std::size_t i : {0u, 1u, 3u, 4u, 5u}) EXPECT_TRUE(job.outcomes[i].result);
  std::ostringstream report, outputs;
  write_report(report, job);
  write_outputs(outputs, job);
  auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  EXPECT_EQ(lines(report.str()), 7);
  EXPECT_EQ(lines(outputs.str()), 6);
  auto last = report.str().substr(report.str().rfind('\n', report.str().size() - 2) + 1);
  EXPECT_EQ(nlohmann::json::parse(last)["kind"], "aggregate");
}

TEST_F(JobTest, ParallelRunMatchesSerialRun) {
  auto serial = run_job(bundles, config(), toy->backends(), 1);
  auto parallel = run_job(bundles, config(), toy->backends(), 4);
  std::ostringstream a, b;
  write_report(a, serial);
  write_report(b, parallel);
  EXPECT_EQ(a.str(), b.str());
}

TEST_F(JobTest, AggregateRatioIsTotalOverTotal) {
  auto job = run_job(bundles, config(), toy->backends());
  std::size_t orig = 0, comp = 0;
  for (const auto& o : job.outcomes) {
    orig += o.result->report.original_tokens;
    comp += o.result->report.compressed_tokens;
  }
  EXPECT_DOUBLE_EQ(job.aggregate.aggregate_inverse_tau, static_cast<double>(orig) / static_cast<double>(comp));
}

TEST_F(JobTest, SweepVisitsEveryGridPoint) {
  SweepGrid grid{{0.1, 0.3}, {0.2}, {0.0, 0.1}};
  auto rows = sweep(std::span(bundles).first(2), config(), grid, toy->backends());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[3].tau_o, 0.3);
  EXPECT_EQ(rows[3].k2, 0.1);
  auto table = format_sweep_table(rows);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 5);
}

}  // namespace
}  // namespace pc
