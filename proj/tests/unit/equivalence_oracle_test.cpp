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

#include <chrono>
#include <random>

#include <gtest/gtest.h>

#include "core/executor.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace sqlpref {
namespace {

using testing_support::EquivalenceCases;
using testing_support::Materialize;
using testing_support::OracleEquivalent;

class EquivalenceOracleTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing_support::TempDir("equiv");
    testing_support::BuildSchoolsDb(dir_->path() / "schools.sqlite");
    testing_support::BuildShopDb(dir_->path() / "shop.sqlite");
  }
  static void TearDownTestSuite() { delete dir_; }
  static std::filesystem::path Db(const std::string& name) {
    return dir_->path() / (name + ".sqlite");
  }
  static testing_support::TempDir* dir_;
};
testing_support::TempDir* EquivalenceOracleTest::dir_ = nullptr;

TEST_F(EquivalenceOracleTest, AgreesWithBruteForceOnHandCraftedPairs) {
  auto cases = EquivalenceCases();
  ASSERT_GE(cases.size(), 30u);
  std::size_t equal_set = 0, equal_multiset = 0;
  for (const auto& c : cases) {
    auto a = ExecuteSql(Db(c.db), c.a);
    auto b = ExecuteSql(Db(c.db), c.b);
    auto ra = Materialize(Db(c.db), c.a);
    auto rb = Materialize(Db(c.db), c.b);
    for (bool multiset : {false, true}) {
      auto mode = multiset ? EquivalenceMode::kMultiset : EquivalenceMode::kSet;
      bool expected = OracleEquivalent(ra, rb, multiset, 1e-6);
      EXPECT_EQ(CompareResults(a, b, mode).equivalent, expected)
          << (multiset ? "multiset" : "set") << ": " << c.a << "  vs  " << c.b;
      EXPECT_EQ(CompareResults(b, a, mode).equivalent, expected);
      (multiset ? equal_multiset : equal_set) += expected;
    }
  }
  // The suite exercises both outcomes in both modes.
  EXPECT_GT(equal_set, equal_multiset);
  EXPECT_GT(equal_multiset, 0u);
  EXPECT_LT(equal_set, cases.size());
}

TEST_F(EquivalenceOracleTest, OrderByVersusUnorderedIsSetEqual) {
  auto gold = ExecuteSql(Db("shop"), "SELECT name FROM customers ORDER BY name");
  auto cand = ExecuteSql(Db("shop"), "SELECT name FROM customers");
  EXPECT_TRUE(CompareResults(cand, gold, EquivalenceMode::kSet).equivalent);
}

TEST_F(EquivalenceOracleTest, DuplicatesDistinguishModes) {
  testing_support::TempDir dir;
  auto db = dir.path() / "d.sqlite";
  testing_support::RunScript(db, "CREATE TABLE t (a INTEGER); INSERT INTO t VALUES (1), (1), (2);");
  auto gold = ExecuteSql(db, "SELECT a FROM t");
  auto cand = ExecuteSql(db, "SELECT DISTINCT a FROM t");
  EXPECT_TRUE(CompareResults(cand, gold, EquivalenceMode::kSet).equivalent);
  EXPECT_FALSE(CompareResults(cand, gold, EquivalenceMode::kMultiset).equivalent);
  EXPECT_EQ(CompareResults(cand, gold, EquivalenceMode::kMultiset).reason,
            VerdictReason::kRowSetMismatch);
}

// Property: equivalence over random small result sets matches the oracle and
// behaves as an equivalence relation.
TEST_F(EquivalenceOracleTest, RandomResultSetsProperty) {
  testing_support::TempDir dir;
  auto db = dir.path() / "r.sqlite";
  std::mt19937 rng(3);
  std::string script = "CREATE TABLE r (g INTEGER, a, b);";
  const char* values[] = {"1", "2", "1.0", "2.0000001", "NULL", "'x'", "'1'", "0.5", "x'00'"};
  for (int g = 0; g < 60; ++g) {
    int n = static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      script += "INSERT INTO r VALUES (" + std::to_string(g) + ", " + values[rng() % 9] + ", " +
                values[rng() % 9] + ");";
    }
  }
  testing_support::RunScript(db, script);
  std::vector<ExecutionOutcome> outcomes;
  std::vector<testing_support::RawResult> raws;
  for (int g = 0; g < 60; ++g) {
    std::string sql = "SELECT a, b FROM r WHERE g = " + std::to_string(g);
    outcomes.push_back(ExecuteSql(db, sql));
    raws.push_back(Materialize(db, sql));
  }
  for (bool multiset : {false, true}) {
    auto mode = multiset ? EquivalenceMode::kMultiset : EquivalenceMode::kSet;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      EXPECT_TRUE(CompareResults(outcomes[i], outcomes[i], mode).equivalent);
      for (std::size_t j = 0; j < outcomes.size(); ++j) {
        bool eq = CompareResults(outcomes[i], outcomes[j], mode).equivalent;
        EXPECT_EQ(eq, OracleEquivalent(raws[i], raws[j], multiset, 1e-6)) << i << " " << j;
        EXPECT_EQ(eq, CompareResults(outcomes[j], outcomes[i], mode).equivalent);
        if (!eq) continue;
        for (std::size_t k = 0; k < outcomes.size(); ++k) {
          if (CompareResults(outcomes[j], outcomes[k], mode).equivalent) {
            EXPECT_TRUE(CompareResults(outcomes[i], outcomes[k], mode).equivalent);
          }
        }
      }
    }
  }
}

}  // namespace
}  // namespace sqlpref
