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

// A scripted multi-round scenario over the twenty fixture tasks.
//
// For model M and task t, sample s of n is
//   s <  correct[t]                 a correct rewrite of the gold query
//   first wrong slot, t % 5 == 0,
//     and at least two wrong slots  a completion without any code fence
//   last wrong slot, t % 4 == 1     a query against a missing table
//   otherwise                       a valid query with a wrong answer
// Every variant has distinct SQL text, so nothing is deduplicated.

#ifndef SQLPREF_TESTS_SUPPORT_SCENARIO_HPP_
#define SQLPREF_TESTS_SUPPORT_SCENARIO_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "support/mock_llm.hpp"

namespace testing_support {

enum class SampleKind { kCorrect, kWrong, kInvalid, kUnfenced };

struct ModelScript {
  std::size_t cot_words = 100;
  std::vector<int> correct;  // per task, number of correct samples
};

struct Scenario {
  std::vector<FixtureTask> tasks = TwentyTasks();
  std::size_t n_samples = 4;
  std::uint64_t seed = 7;
  std::map<std::string, ModelScript> models;

  // Three models whose mixed-pool task counts fall 16 -> 12 -> 8 while the
  // reasoning grows 560 -> 700 -> 910 words.
  static Scenario Declining();

  SampleKind Kind(const std::string& model, std::size_t task, std::size_t sample) const;
  std::string Sql(const std::string& model, std::size_t task, std::size_t sample) const;
  MockReply Reply(const MockRequest& request) const;
  MockScript Script() const;

  // Hand-computed expectations.
  std::size_t Wins(const std::string& model, std::size_t task) const;
  std::size_t Losses(const std::string& model, std::size_t task) const;
  std::size_t ExpectedPairs(const std::string& model, std::size_t task, std::size_t k) const;
  std::size_t ExpectedPairsEmitted(const std::string& model, std::size_t k) const;
  std::size_t ExpectedTasksWithPairs(const std::string& model, std::size_t k) const;
  std::size_t ExpectedCorrect(const std::string& model) const;
};

// Writes the dataset, an exemplar pool and a plan for
// [synthesis(model_a), off_policy(k_off), on_policy(model_b), on_policy(model_c)].
struct ScenarioFiles {
  std::filesystem::path dataset;
  std::filesystem::path plan;
  std::filesystem::path run_dir;
};

ScenarioFiles WriteScenario(const std::filesystem::path& dir, const Scenario& scenario,
                            const std::string& endpoint_url, const std::string& extra_yaml = "",
                            bool fsync = false);

}  // namespace testing_support

#endif  // SQLPREF_TESTS_SUPPORT_SCENARIO_HPP_
