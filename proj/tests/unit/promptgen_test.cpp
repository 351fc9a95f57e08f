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

#include "core/promptgen.hpp"

#include <set>

#include <algorithm>

#include <gtest/gtest.h>

#include "core/util.hpp"
#include "support/fixtures.hpp"

namespace sqlpref {
namespace {

Task SampleTask() {
  Task t;
  t.task_id = "t1";
  t.db_id = "one";
  t.question = "How many rows are in t?";
  t.evidence = "rows means records";
  t.gold_sql = "SELECT COUNT(*) FROM t";
  return t;
}

const std::string kSchema = "CREATE TABLE t (\n  a INTEGER PRIMARY KEY\n);\n";

TEST(PromptTest, NoCotDemandsOnlySql) {
  RenderedPrompt p = RenderPrompt(SampleTask(), kSchema, PromptStyle::kNoCot, {});
  EXPECT_NE(p.user_text.find("a SQL query enclosed in ```sql ...``` that answers the question "
                             "(and nothing else)"),
            std::string::npos);
  EXPECT_NE(p.user_text.find("Question: How many rows are in t?"), std::string::npos);
  EXPECT_NE(p.user_text.find("Evidence: rows means records"), std::string::npos);
  EXPECT_NE(p.user_text.find(Trim(kSchema)), std::string::npos);
}

TEST(PromptTest, ComplexCotFraming) {
  RenderedPrompt p = RenderPrompt(SampleTask(), kSchema, PromptStyle::kComplexCot, {});
  EXPECT_NE(p.system_text.find("'divide and conquer' strategy"), std::string::npos);
  EXPECT_NE(ToLower(p.system_text).find("optimization"), std::string::npos);
  EXPECT_NE(p.system_text.find("Sub-questions:"), std::string::npos);

  RenderOptions no_skeleton;
  no_skeleton.skeleton_in_system = false;
  RenderedPrompt q = RenderPrompt(SampleTask(), kSchema, PromptStyle::kComplexCot, {}, no_skeleton);
  EXPECT_EQ(q.system_text.find("Sub-questions:"), std::string::npos);
  EXPECT_NE(q.system_text.find("'divide and conquer' strategy"), std::string::npos);
}

TEST(PromptTest, EvidenceCanBeOmitted) {
  RenderOptions options;
  options.include_evidence = false;
  RenderedPrompt p = RenderPrompt(SampleTask(), kSchema, PromptStyle::kSimpleCot, {}, options);
  EXPECT_EQ(p.user_text.find("rows means records"), std::string::npos);
}

TEST(PromptTest, Deterministic) {
  std::vector<Exemplar> ex = {{"e1", PromptStyle::kComplexCot, "u", "a"}};
  for (auto style : {PromptStyle::kNoCot, PromptStyle::kSimpleCot, PromptStyle::kComplexCot}) {
    RenderedPrompt a = RenderPrompt(SampleTask(), kSchema, style, ex);
    RenderedPrompt b = RenderPrompt(SampleTask(), kSchema, style, ex);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.ToJson().dump(), b.ToJson().dump());
  }
}

TEST(PromptTest, EmptySchemaRejected) {
  EXPECT_THROW(RenderPrompt(SampleTask(), "  \n", PromptStyle::kNoCot, {}), Error);
}

TEST(PromptTest, TooManyExemplarsRejected) {
  std::vector<Exemplar> ex(kMaxExemplars + 1, Exemplar{"e", PromptStyle::kNoCot, "u", "a"});
  EXPECT_THROW(RenderPrompt(SampleTask(), kSchema, PromptStyle::kNoCot, ex), Error);
}

// Property: the gold query never appears anywhere in a rendered prompt.
TEST(PromptPropertyTest, GoldNeverLeaks) {
  testing_support::TempDir dir;
  auto tasks = testing_support::TwentyTasks();
  std::vector<Exemplar> pool;
  for (std::size_t i = 0; i < kMaxExemplars; ++i) {
    const auto& ft = tasks[i];
    pool.push_back({ft.task_id, PromptStyle::kComplexCot, "Question: " + ft.question,
                    "```sql\n" + ft.gold_sql + "\n```"});
  }
  for (const auto& ft : tasks) {
    Task t;
    t.task_id = ft.task_id;
    t.question = ft.question;
    t.gold_sql = ft.gold_sql;
    if (!ft.evidence.empty()) t.evidence = ft.evidence;
    for (auto style : {PromptStyle::kNoCot, PromptStyle::kSimpleCot, PromptStyle::kComplexCot}) {
      RenderedPrompt p = RenderPrompt(t, kSchema, style, pool);
      EXPECT_EQ(p.system_text.find(t.gold_sql), std::string::npos);
      EXPECT_EQ(p.user_text.find(t.gold_sql), std::string::npos);
      for (const Exemplar& e : p.exemplars) {
        EXPECT_EQ(e.user_text.find(t.gold_sql), std::string::npos);
        EXPECT_EQ(e.assistant_text.find(t.gold_sql), std::string::npos);
      }
      bool in_pool = std::any_of(pool.begin(), pool.end(),
                                 [&](const Exemplar& e) { return e.task_id == t.task_id; });
      EXPECT_EQ(p.exemplars.size(), pool.size() - (in_pool ? 1 : 0)) << t.task_id;
    }
  }
}

std::vector<Exemplar> Pool(int n) {
  std::vector<Exemplar> pool;
  for (int i = 0; i < n; ++i) {
    pool.push_back({"e" + std::to_string(i), PromptStyle::kComplexCot, "u" + std::to_string(i),
                    "a" + std::to_string(i)});
  }
  return pool;
}

TEST(ExemplarTest, ZeroPicksNothing) { EXPECT_TRUE(PickExemplars(Pool(10), 0, 7).empty()); }

TEST(ExemplarTest, SeededAndDistinct) {
  auto a = PickExemplars(Pool(10), 3, 7);
  auto b = PickExemplars(Pool(10), 3, 7);
  EXPECT_EQ(a, b);
  std::set<std::string> ids;
  for (const auto& e : a) ids.insert(e.task_id);
  EXPECT_EQ(ids.size(), 3u);
  bool any_differs = false;
  for (std::uint64_t seed = 0; seed < 20; ++seed) any_differs |= PickExemplars(Pool(10), 3, seed) != a;
  EXPECT_TRUE(any_differs);
}

TEST(ExemplarTest, PoolTooSmall) { EXPECT_THROW(PickExemplars(Pool(2), 3, 7), Error); }

TEST(ExemplarTest, LoadFromFile) {
  testing_support::TempDir dir;
  testing_support::WriteText(
      dir / "ex.jsonl",
      R"({"task_id": "x", "style": "simple_cot", "user_text": "U", "assistant_text": "A"})"
      "\n");
  auto pool = LoadExemplars(dir / "ex.jsonl");
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool[0].style, PromptStyle::kSimpleCot);
  EXPECT_EQ(pool[0].assistant_text, "A");
}

TEST(TemplateTest, DirectoryOverridesAndHash) {
  testing_support::TempDir dir;
  const TemplateSet& builtin = TemplateSet::Builtin();
  testing_support::WriteText(dir / "no_cot.system.txt", "Custom system.\n");
  TemplateSet custom = TemplateSet::FromDirectory(dir.path());
  EXPECT_EQ(custom.Get("no_cot.system"), "Custom system.");
  EXPECT_EQ(custom.Get("no_cot.user"), builtin.Get("no_cot.user"));
  EXPECT_NE(custom.Hash(), builtin.Hash());
  EXPECT_EQ(TemplateSet::FromDirectory(dir.path() / "absent").Hash(), builtin.Hash());
}

TEST(PromptTest, TemplateCommentHeaderIsDropped) {
  for (const char* name : {"no_cot.system", "no_cot.user", "simple_cot.system", "simple_cot.user",
                           "complex_cot.system", "complex_cot.skeleton", "complex_cot.user"}) {
    const std::string& body = TemplateSet::Builtin().Get(name);
    EXPECT_EQ(body.find("%%"), std::string::npos) << name;
    EXPECT_EQ(body.find("License"), std::string::npos) << name;
    EXPECT_FALSE(body.empty()) << name;
    EXPECT_NE(body.front(), '\n') << name;
  }
  testing_support::TempDir dir;
  testing_support::WriteText(dir / "no_cot.system.txt", "%% note\n%%\n\nBody %% kept.\n");
  EXPECT_EQ(TemplateSet::FromDirectory(dir.path()).Get("no_cot.system"), "Body %% kept.");
}

TEST(PromptTest, StyleNamesRoundTrip) {
  for (auto s : {PromptStyle::kNoCot, PromptStyle::kSimpleCot, PromptStyle::kComplexCot}) {
    EXPECT_EQ(ParsePromptStyle(PromptStyleName(s)), s);
  }
  EXPECT_THROW(ParsePromptStyle("fancy"), Error);
}

}  // namespace
}  // namespace sqlpref
