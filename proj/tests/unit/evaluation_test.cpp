// Copyright 2026 The sqlpref Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/evaluation.hpp"

#include <random>

#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace sqlpref {
namespace {

class EvaluationTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dataset_ = LoadDataset(testing_support::WriteDataset(dir_.path(), testing_support::TwentyTasks()));
    gold_ = executor_.ValidateGold(dataset_);
    ASSERT_TRUE(gold_.quarantined.empty());
  }
  testing_support::TempDir dir_;
  Dataset dataset_;
  Executor executor_{ExecutorConfig{}};
  GoldReport gold_;
};

TEST_F(EvaluationTest, GoldPredictionsScorePerfect) {
  std::map<std::string, std::string> predictions;
  for (const Task& t : dataset_.tasks) predictions[t.task_id] = t.gold_sql;
  EvalReport r = Evaluate(predictions, dataset_, executor_, gold_);
  EXPECT_EQ(r.n_tasks, 20u);
  EXPECT_DOUBLE_EQ(r.ex_percent, 100.0);
  EXPECT_DOUBLE_EQ(r.valid_percent, 100.0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST_F(EvaluationTest, SelectZeroIsValidButWrong) {
  // Independent check that no gold result is exactly [[0]].
  for (const Task& t : dataset_.tasks) {
    auto raw = testing_support::Materialize(dataset_.Database(t.db_id).file_path, t.gold_sql);
    ASSERT_TRUE(raw.ok);
    testing_support::RawResult zero{true, {{testing_support::RawCell{testing_support::RawCell::kInteger, 0}}}};
    ASSERT_FALSE(testing_support::OracleEquivalent(raw, zero, false, 1e-6)) << t.task_id;
  }
  std::map<std::string, std::string> predictions;
  for (const Task& t : dataset_.tasks) predictions[t.task_id] = "SELECT 0";
  EvalReport r = Evaluate(predictions, dataset_, executor_, gold_);
  EXPECT_DOUBLE_EQ(r.ex_percent, 0.0);
  EXPECT_DOUBLE_EQ(r.valid_percent, 100.0);
}

TEST_F(EvaluationTest, EmptyPredictions) {
  EvalReport r = Evaluate({}, dataset_, executor_, gold_);
  EXPECT_EQ(r.n_tasks, 20u);
  EXPECT_DOUBLE_EQ(r.ex_percent, 0.0);
  EXPECT_DOUBLE_EQ(r.valid_percent, 0.0);
}

TEST_F(EvaluationTest, CompletionsAreExtracted) {
  const Task& t = dataset_.tasks[0];
  std::map<std::string, std::string> predictions = {
      {t.task_id, "thinking...\n```sql\n" + t.gold_sql + "\n```"},
      {dataset_.tasks[1].task_id, dataset_.tasks[1].gold_sql},
      {dataset_.tasks[2].task_id, "no fence at all"},
  };
  EvalReport r = Evaluate(predictions, dataset_, executor_, gold_);
  EXPECT_EQ(r.n_correct, 2u);
  EXPECT_EQ(r.n_valid, 2u);
  EXPECT_TRUE(r.verdicts[0].correct);
  EXPECT_EQ(r.verdicts[0].extraction, "ok");

  EvalOptions sql_only;
  sql_only.kind = PredictionKind::kSql;
  EvalReport s = Evaluate(predictions, dataset_, executor_, gold_, sql_only);
  EXPECT_FALSE(s.verdicts[0].valid);

  EvalOptions completions;
  completions.kind = PredictionKind::kCompletion;
  EvalReport c = Evaluate(predictions, dataset_, executor_, gold_, completions);
  EXPECT_FALSE(c.verdicts[1].valid);  // bare SQL is not a completion without fallback
  completions.extract.bare_sql_fallback = true;
  EXPECT_TRUE(Evaluate(predictions, dataset_, executor_, gold_, completions).verdicts[1].correct);
}

TEST_F(EvaluationTest, UnknownTaskWarns) {
  EvalReport r = Evaluate({{"ghost", "SELECT 1"}}, dataset_, executor_, gold_);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("ghost"), std::string::npos);
  EXPECT_EQ(r.n_tasks, 20u);
}

TEST_F(EvaluationTest, BreakdownByDifficulty) {
  std::map<std::string, std::string> predictions;
  for (const Task& t : dataset_.tasks) predictions[t.task_id] = t.gold_sql;
  EvalReport r = Evaluate(predictions, dataset_, executor_, gold_);
  std::size_t total = 0;
  for (const auto& [name, bucket] : r.breakdown) {
    total += bucket.n;
    EXPECT_EQ(bucket.correct, bucket.n) << name;
  }
  EXPECT_EQ(total, 20u);
  EXPECT_TRUE(r.breakdown.count("simple"));
  std::string table = r.ToTable();
  EXPECT_NE(table.find("overall"), std::string::npos);
  EXPECT_NE(table.find("100.00"), std::string::npos);
  Json json = r.ToJson();
  EXPECT_EQ(json["ex_percent"], 100.0);
}

TEST_F(EvaluationTest, SplitFilter) {
  EvalOptions options;
  options.split = Split::kTrain;
  EvalReport r = Evaluate({}, dataset_, executor_, gold_, options);
  EXPECT_EQ(r.n_tasks, 0u);
}

// Property: EX <= Valid on random prediction sets, pointwise and overall.
TEST_F(EvaluationTest, ExNeverExceedsValid) {
  std::mt19937 rng(8);
  std::vector<std::string> junk = {"SELECT 0", "SELECT * FROM nowhere", "SELEC", "DROP TABLE x",
                                   "```sql\nSELECT 1\n```", "", "no sql here"};
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, std::string> predictions;
    for (const Task& t : dataset_.tasks) {
      int pick = static_cast<int>(rng() % 4);
      if (pick == 0) continue;
      predictions[t.task_id] = pick == 1 ? t.gold_sql : junk[rng() % junk.size()];
    }
    EvalReport r = Evaluate(predictions, dataset_, executor_, gold_);
    EXPECT_LE(r.ex_percent, r.valid_percent);
    for (const auto& v : r.verdicts) EXPECT_TRUE(!v.correct || v.valid);
  }
}

TEST(PredictionsFileTest, LoadsAndRejectsDuplicates) {
  testing_support::TempDir dir;
  testing_support::WriteText(dir / "p.jsonl",
                             "{\"task_id\": \"a\", \"output\": \"SELECT 1\"}\n"
                             "{\"task_id\": \"b\", \"output\": \"SELECT 2\"}\n");
  auto p = LoadPredictions(dir / "p.jsonl");
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p["b"], "SELECT 2");
  testing_support::WriteText(dir / "d.jsonl",
                             "{\"task_id\": \"a\", \"output\": \"SELECT 1\"}\n"
                             "{\"task_id\": \"a\", \"output\": \"SELECT 2\"}\n");
  EXPECT_THROW(LoadPredictions(dir / "d.jsonl"), Error);
}

}  // namespace
}  // namespace sqlpref
