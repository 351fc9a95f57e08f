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

// Run plan: a YAML document describing dataset, prompting, sampling,
// execution and the ordered list of rounds. See README for the schema.

#ifndef SQLPREF_CORE_PLAN_HPP_
#define SQLPREF_CORE_PLAN_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/executor.hpp"
#include "core/llm_client.hpp"
#include "core/pairs.hpp"
#include "core/promptgen.hpp"

namespace sqlpref {

struct RoundSpec {
  RoundKind kind = RoundKind::kSynthesis;
  std::optional<PairStrategy> strategy;
  std::size_t k_per_task = 1;
  // Per-round sampling overrides; on-policy rounds point at the newest model.
  std::optional<std::string> endpoint_url;
  std::optional<std::string> model_name;
  std::optional<double> temperature;
  std::optional<std::size_t> n_samples;
};

struct RunPlan {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::string run_id = "default";
  std::filesystem::path run_root = "runs";
  std::uint64_t seed = 0;

  std::filesystem::path dataset_manifest;
  std::optional<std::filesystem::path> database_root;
  bool include_evidence = true;
  SchemaStyle schema_style = SchemaStyle::kDdl;
  int sample_values = 0;

  PromptStyle style = PromptStyle::kComplexCot;
  std::optional<std::filesystem::path> exemplar_pool;
  std::size_t n_exemplars = 3;
  bool skeleton_in_system = true;
  std::optional<std::filesystem::path> template_dir;

  SamplingConfig sampling;
  ExecutorConfig executor;
  bool bare_sql_fallback = false;
  bool invalid_as_rejected = true;
  bool store_fsync = true;

  std::vector<RoundSpec> rounds;

  // `overrides` is an object of dotted paths ("sampling.endpoint_url") or
  // nested objects merged over the file contents.
  static RunPlan Load(const std::filesystem::path& path, const Json& overrides = Json::object());
  static RunPlan FromJson(const Json& document, const std::filesystem::path& base_dir);

  std::filesystem::path RunDir() const;
  SamplingConfig SamplingForRound(std::size_t round_index) const;
  Json ToJson() const;
};

// YAML text to JSON, with plain scalars typed as bool/int/float when they
// parse as such.
Json YamlToJson(const std::string& yaml_text);

}  // namespace sqlpref

#endif  // SQLPREF_CORE_PLAN_HPP_
