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

#include <yaml-cpp/yaml.h>

#include <cctype>

namespace sqlpref {
namespace {

Json ScalarToJson(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text == "~" || text == "null") return nullptr;
  if (text == "true" || text == "True") return true;
  if (text == "false" || text == "False") return false;
  if (!text.empty()) {
    char* end = nullptr;
    long long as_int = std::strtoll(text.c_str(), &end, 10);
    if (*end == '\0') return as_int;
    double as_double = std::strtod(text.c_str(), &end);
    if (*end == '\0') return as_double;
  }
  return text;
}

Json NodeToJson(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return ScalarToJson(node);
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      for (const auto& item : node) out.push_back(NodeToJson(item));
      return out;
    }
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& item : node) out[item.first.as<std::string>()] = NodeToJson(item.second);
      return out;
    }
  }
  return nullptr;
}

void ApplyOverride(Json& document, const std::string& dotted, const Json& value) {
  Json* node = &document;
  std::size_t start = 0;
  for (;;) {
    std::size_t dot = dotted.find('.', start);
    std::string part = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
    if (dot == std::string::npos) {
      // A mapping merges into an existing mapping rather than replacing it.
      if (value.is_object() && (*node)[part].is_object()) {
        for (const auto& [key, item] : value.items()) ApplyOverride((*node)[part], key, item);
      } else {
        (*node)[part] = value;
      }
      return;
    }
    if (!(*node)[part].is_object()) (*node)[part] = Json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

const Json* Section(const Json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end() || it->is_null()) return nullptr;
  if (!it->is_object()) throw Error(ErrorCode::kPlan, std::string("plan: '") + name + "' must be a mapping");
  return &*it;
}

template <typename T>
void Read(const Json* section, const char* key, T& target) {
  if (!section) return;
  auto it = section->find(key);
  if (it == section->end() || it->is_null()) return;
  try {
    target = it->get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::kPlan, std::string("plan: bad value for '") + key + "': " + it->dump());
  }
}

template <typename T>
void ReadOptional(const Json* section, const char* key, std::optional<T>& target) {
  if (!section || !section->contains(key) || (*section)[key].is_null()) return;
  T value{};
  Read(section, key, value);
  target = value;
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

void RejectCredentials(const Json& node, const std::string& where) {
  if (!node.is_object()) return;
  for (const auto& [key, value] : node.items()) {
    std::string lower = ToLower(key);
    if (lower == "api_key" || lower == "apikey" || lower == "token" || lower == "authorization") {
      throw Error(ErrorCode::kPlan, "plan: credential field '" + where + key +
                                        "' is not allowed; set " + kApiKeyEnv + " instead");
    }
    RejectCredentials(value, where + key + ".");
  }
}

}  // namespace

Json YamlToJson(const std::string& yaml_text) {
  try {
    return NodeToJson(YAML::Load(yaml_text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kPlan, std::string("plan: YAML error: ") + e.what());
  }
}

RunPlan RunPlan::Load(const std::filesystem::path& path, const Json& overrides) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::kPlan, "plan file not found: " + path.string());
  }
  Json document = YamlToJson(ReadFile(path));
  if (document.is_null()) document = Json::object();
  if (!document.is_object()) throw Error(ErrorCode::kPlan, "plan: top level must be a mapping");
  if (overrides.is_object()) {
    for (const auto& [key, value] : overrides.items()) ApplyOverride(document, key, value);
  }
  return FromJson(document, std::filesystem::absolute(path).parent_path());
}

RunPlan RunPlan::FromJson(const Json& doc, const std::filesystem::path& base_dir) {
  RejectCredentials(doc, "");
  RunPlan plan;
  plan.base_dir = base_dir;
  Read(&doc, "run_id", plan.run_id);
  std::string run_root = plan.run_root.string();
  Read(&doc, "run_root", run_root);
  plan.run_root = Resolve(base_dir, run_root);
  Read(&doc, "seed", plan.seed);
  if (plan.run_id.empty() || plan.run_id.find('/') != std::string::npos) {
    throw Error(ErrorCode::kPlan, "plan: run_id must be a non-empty name without '/'");
  }

  const Json* dataset = Section(doc, "dataset");
  std::string manifest;
  Read(dataset, "manifest", manifest);
  if (manifest.empty()) throw Error(ErrorCode::kPlan, "plan: dataset.manifest is required");
  plan.dataset_manifest = Resolve(base_dir, manifest);
  std::optional<std::string> databases;
  ReadOptional(dataset, "databases", databases);
  if (databases) plan.database_root = Resolve(base_dir, *databases);
  Read(dataset, "include_evidence", plan.include_evidence);
  std::string schema_style = "ddl";
  Read(dataset, "schema_style", schema_style);
  plan.schema_style = ParseSchemaStyle(schema_style);
  Read(dataset, "sample_values", plan.sample_values);

  const Json* prompt = Section(doc, "prompt");
  std::string style = "complex_cot";
  Read(prompt, "style", style);
  plan.style = ParsePromptStyle(style);
  std::optional<std::string> exemplars;
  ReadOptional(prompt, "exemplars", exemplars);
  if (exemplars) plan.exemplar_pool = Resolve(base_dir, *exemplars);
  Read(prompt, "n_exemplars", plan.n_exemplars);
  if (plan.n_exemplars > kMaxExemplars) {
    throw Error(ErrorCode::kPlan, "plan: prompt.n_exemplars must be <= 8");
  }
  Read(prompt, "skeleton_in_system", plan.skeleton_in_system);
  std::optional<std::string> templates;
  ReadOptional(prompt, "templates", templates);
  if (templates) plan.template_dir = Resolve(base_dir, *templates);

  const Json* sampling = Section(doc, "sampling");
  Read(sampling, "endpoint_url", plan.sampling.endpoint_url);
  Read(sampling, "model_name", plan.sampling.model_name);
  Read(sampling, "n_samples", plan.sampling.n_samples);
  Read(sampling, "temperature", plan.sampling.temperature);
  Read(sampling, "max_tokens", plan.sampling.max_tokens);
  double timeout_s = 120;
  Read(sampling, "timeout_s", timeout_s);
  plan.sampling.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
  Read(sampling, "max_retries", plan.sampling.max_retries);
  Read(sampling, "concurrency_limit", plan.sampling.concurrency_limit);
  long long retry_base_ms = 500;
  Read(sampling, "retry_base_ms", retry_base_ms);
  plan.sampling.retry_base_delay = std::chrono::milliseconds(retry_base_ms);
  plan.sampling.base_seed = plan.seed;
  plan.sampling.Validate();

  const Json* executor = Section(doc, "executor");
  double exec_timeout_s = 30;
  Read(executor, "timeout_s", exec_timeout_s);
  plan.executor.timeout = std::chrono::milliseconds(static_cast<long long>(exec_timeout_s * 1000));
  std::string mode = "set";
  Read(executor, "equivalence", mode);
  plan.executor.mode = ParseEquivalenceMode(mode);
  Read(executor, "float_tolerance", plan.executor.normalization.float_tolerance);
  Read(executor, "workers", plan.executor.workers);
  Read(executor, "bare_sql_fallback", plan.bare_sql_fallback);
  Read(executor, "invalid_as_rejected", plan.invalid_as_rejected);
  // Validates the tolerance.
  CanonicalCell(0.5, plan.executor.normalization);

  const Json* store = Section(doc, "store");
  Read(store, "fsync", plan.store_fsync);

  auto rounds = doc.find("rounds");
  if (rounds == doc.end() || !rounds->is_array() || rounds->empty()) {
    throw Error(ErrorCode::kPlan, "plan: 'rounds' must be a non-empty list");
  }
  for (const Json& entry : *rounds) {
    if (!entry.is_object()) throw Error(ErrorCode::kPlan, "plan: each round must be a mapping");
    RoundSpec spec;
    std::string kind;
    Read(&entry, "kind", kind);
    try {
      spec.kind = ParseRoundKind(kind);
    } catch (const Error& e) {
      throw Error(ErrorCode::kPlan, std::string("plan: ") + e.what());
    }
    std::optional<std::string> strategy;
    ReadOptional(&entry, "strategy", strategy);
    if (strategy) spec.strategy = ParsePairStrategy(*strategy);
    Read(&entry, "k_per_task", spec.k_per_task);
    if (spec.k_per_task < 1) throw Error(ErrorCode::kPlan, "plan: k_per_task must be >= 1");
    ReadOptional(&entry, "endpoint_url", spec.endpoint_url);
    ReadOptional(&entry, "model_name", spec.model_name);
    ReadOptional(&entry, "temperature", spec.temperature);
    ReadOptional(&entry, "n_samples", spec.n_samples);
    plan.rounds.push_back(spec);
  }
  if (plan.rounds.front().kind != RoundKind::kSynthesis) {
    throw Error(ErrorCode::kPlan, "plan: the first round must be a synthesis round");
  }
  return plan;
}

std::filesystem::path RunPlan::RunDir() const { return run_root / run_id; }

SamplingConfig RunPlan::SamplingForRound(std::size_t round_index) const {
  SamplingConfig config = sampling;
  const RoundSpec& spec = rounds.at(round_index);
  if (spec.endpoint_url) config.endpoint_url = *spec.endpoint_url;
  if (spec.model_name) config.model_name = *spec.model_name;
  if (spec.temperature) config.temperature = *spec.temperature;
  if (spec.n_samples) config.n_samples = *spec.n_samples;
  config.Validate();
  return config;
}

Json RunPlan::ToJson() const {
  Json rounds_json = Json::array();
  for (const RoundSpec& r : rounds) {
    Json entry = {{"kind", RoundKindName(r.kind)}, {"k_per_task", r.k_per_task}};
    if (r.strategy) entry["strategy"] = PairStrategyName(*r.strategy);
    if (r.endpoint_url) entry["endpoint_url"] = *r.endpoint_url;
    if (r.model_name) entry["model_name"] = *r.model_name;
    if (r.temperature) entry["temperature"] = *r.temperature;
    if (r.n_samples) entry["n_samples"] = *r.n_samples;
    rounds_json.push_back(entry);
  }
  return {{"run_id", run_id},
          {"seed", seed},
          {"dataset", {{"manifest", dataset_manifest.string()},
                       {"include_evidence", include_evidence},
                       {"schema_style", SchemaStyleName(schema_style)},
                       {"sample_values", sample_values}}},
          {"prompt", {{"style", PromptStyleName(style)},
                      {"n_exemplars", n_exemplars},
                      {"skeleton_in_system", skeleton_in_system}}},
          {"sampling", sampling.CausalJson()},
          {"executor", executor.ToJson()},
          {"rounds", rounds_json}};
}

}  // namespace sqlpref
