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

#include "core/plan.hpp"

#include <gtest/gtest.h>

#include "support/fixtures.hpp"

namespace sqlpref {
namespace {

using testing_support::TempDir;
using testing_support::WriteText;

const char* kPlan = R"(run_id: demo
seed: 11
dataset:
  manifest: data/dev.jsonl
  schema_style: compact
prompt:
  style: simple_cot
  n_exemplars: 2
sampling:
  endpoint_url: http://127.0.0.1:1/v1/chat/completions
  model_name: base
  n_samples: 8
  temperature: 0.7
executor:
  equivalence: multiset
  float_tolerance: 0.0001
rounds:
  - kind: synthesis
  - kind: off_policy
    k_per_task: 3
  - kind: on_policy
    model_name: tuned
    temperature: 1.0
    strategy: random
)";

TEST(PlanTest, LoadsAndResolvesPaths) {
  TempDir dir;
  WriteText(dir / "plan.yaml", kPlan);
  RunPlan plan = RunPlan::Load(dir / "plan.yaml");
  EXPECT_EQ(plan.run_id, "demo");
  EXPECT_EQ(plan.seed, 11u);
  EXPECT_EQ(plan.dataset_manifest, dir.path() / "data/dev.jsonl");
  EXPECT_EQ(plan.RunDir(), dir.path() / "runs" / "demo");
  EXPECT_EQ(plan.schema_style, SchemaStyle::kCompact);
  EXPECT_EQ(plan.style, PromptStyle::kSimpleCot);
  EXPECT_EQ(plan.executor.mode, EquivalenceMode::kMultiset);
  EXPECT_DOUBLE_EQ(plan.executor.normalization.float_tolerance, 1e-4);
  ASSERT_EQ(plan.rounds.size(), 3u);
  EXPECT_EQ(plan.rounds[1].kind, RoundKind::kOffPolicy);
  EXPECT_EQ(plan.rounds[1].k_per_task, 3u);
  EXPECT_EQ(plan.rounds[2].strategy, PairStrategy::kRandom);
  EXPECT_TRUE(plan.include_evidence);
  EXPECT_EQ(plan.sampling.base_seed, 11u);

  SamplingConfig r0 = plan.SamplingForRound(0);
  SamplingConfig r2 = plan.SamplingForRound(2);
  EXPECT_EQ(r0.model_name, "base");
  EXPECT_EQ(r2.model_name, "tuned");
  EXPECT_DOUBLE_EQ(r2.temperature, 1.0);
  EXPECT_EQ(r2.n_samples, 8u);
}

TEST(PlanTest, OverridesWin) {
  TempDir dir;
  WriteText(dir / "plan.yaml", kPlan);
  RunPlan plan = RunPlan::Load(dir / "plan.yaml", {{"sampling.n_samples", 2},
                                                   {"run_id", "other"},
                                                   {"prompt", {{"style", "no_cot"}}}});
  EXPECT_EQ(plan.sampling.n_samples, 2u);
  EXPECT_EQ(plan.run_id, "other");
  EXPECT_EQ(plan.style, PromptStyle::kNoCot);
  EXPECT_EQ(plan.n_exemplars, 2u);
}

TEST(PlanTest, CredentialsRejected) {
  TempDir dir;
  WriteText(dir / "plan.yaml", std::string(kPlan) + "secrets:\n  api_key: sk-123\n");
  try {
    RunPlan::Load(dir / "plan.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPlan);
    EXPECT_NE(std::string(e.what()).find("SQLPREF_API_KEY"), std::string::npos);
  }
  WriteText(dir / "plan2.yaml", kPlan);
  EXPECT_THROW(RunPlan::Load(dir / "plan2.yaml", {{"sampling.token", "x"}}), Error);
}

TEST(PlanTest, Errors) {
  TempDir dir;
  auto code_of = [&](const std::string& text) {
    WriteText(dir / "p.yaml", text);
    try {
      RunPlan::Load(dir / "p.yaml");
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInternal;
  };
  EXPECT_EQ(code_of("run_id: [unclosed\n"), ErrorCode::kPlan);
  EXPECT_EQ(code_of("- a list\n"), ErrorCode::kPlan);
  EXPECT_EQ(code_of("run_id: x\n"), ErrorCode::kPlan);  // no dataset
  std::string no_synthesis = kPlan;
  no_synthesis.replace(no_synthesis.find("kind: synthesis"), 15, "kind: on_policy");
  EXPECT_EQ(code_of(no_synthesis), ErrorCode::kPlan);
  std::string bad_kind = kPlan;
  bad_kind.replace(bad_kind.find("kind: synthesis"), 15, "kind: sideways");
  EXPECT_EQ(code_of(bad_kind), ErrorCode::kPlan);
  try {
    RunPlan::Load(dir / "missing.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPlan);
  }
}

TEST(PlanTest, ToJsonCarriesRounds) {
  TempDir dir;
  WriteText(dir / "plan.yaml", kPlan);
  Json json = RunPlan::Load(dir / "plan.yaml").ToJson();
  EXPECT_EQ(json["rounds"].size(), 3u);
  EXPECT_EQ(json["rounds"][2]["strategy"], "random");
  EXPECT_FALSE(json.dump().empty());
}

TEST(YamlTest, ScalarsTyped) {
  Json j = YamlToJson("a: 1\nb: 1.5\nc: true\nd: ~\ne: text\nf: '12'\n");
  EXPECT_TRUE(j["a"].is_number_integer());
  EXPECT_TRUE(j["b"].is_number_float());
  EXPECT_TRUE(j["c"].is_boolean());
  EXPECT_TRUE(j["d"].is_null());
  EXPECT_EQ(j["e"], "text");
}

TEST(PlanTest, ShippedExampleLoads) {
  RunPlan plan = RunPlan::Load(std::filesystem::path(SQLPREF_SOURCE_DIR) / "resources" /
                               "plan.example.yaml");
  ASSERT_EQ(plan.rounds.size(), 4u);
  EXPECT_EQ(plan.rounds[1].kind, RoundKind::kOffPolicy);
  EXPECT_EQ(plan.sampling.n_samples, 32u);
  EXPECT_EQ(plan.SamplingForRound(3).model_name, "student-round-2");
  EXPECT_EQ(plan.executor.mode, EquivalenceMode::kSet);
}

}  // namespace
}  // namespace sqlpref
