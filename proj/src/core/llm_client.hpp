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

// Chat-completions sampling client.
//
// Each of the n samples is an independent request carrying
// "seed": base_seed + sample_index, so any server (hosted or local) can be
// used and a scripted server can tell samples apart. Completions are cached
// in the store under a fingerprint of (round, task, prompt, config,
// sample_index); cached samples never touch the network.

#ifndef SQLPREF_CORE_LLM_CLIENT_HPP_
#define SQLPREF_CORE_LLM_CLIENT_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "core/promptgen.hpp"
#include "core/store.hpp"

namespace sqlpref {

// The API credential is read from this environment variable only.
constexpr const char* kApiKeyEnv = "SQLPREF_API_KEY";

struct SamplingConfig {
  std::size_t n_samples = 32;
  double temperature = 0.8;
  std::size_t max_tokens = 2048;
  std::string endpoint_url;
  std::string model_name;
  std::chrono::milliseconds timeout{120000};
  std::size_t max_retries = 5;
  std::size_t concurrency_limit = 8;
  std::chrono::milliseconds retry_base_delay{500};
  std::uint64_t base_seed = 0;

  void Validate() const;
  // Fields that affect what the model returns. Retry and concurrency
  // settings are excluded.
  Json CausalJson() const;
  std::string Hash() const;
};

struct RawCompletion {
  std::string task_id;
  std::string round_id;
  std::int64_t sample_index = 0;
  std::string text;
  std::size_t token_count = 0;
  bool token_count_estimated = false;
  std::string request_fingerprint;
  std::string model;

  Json ToJson() const;
  static RawCompletion FromJson(const Json& json);
};

struct SampleResult {
  std::vector<RawCompletion> completions;  // sample_index order
  std::vector<std::int64_t> missing;       // indices that exhausted retries
  std::vector<std::string> errors;
  std::size_t cache_hits = 0;
  std::size_t network_calls = 0;

  bool complete() const { return missing.empty(); }
};

struct HealthReport {
  bool healthy = false;
  std::string model_echo;
  double latency_ms = 0.0;
  int http_status = 0;
  std::string error;

  Json ToJson() const;
};

class LlmClient {
 public:
  LlmClient(SamplingConfig config, Store* store);

  std::string RequestFingerprint(const RenderedPrompt& prompt, const std::string& round_id,
                                 const std::string& task_id, std::int64_t sample_index) const;

  SampleResult SampleCandidates(const RenderedPrompt& prompt, const std::string& round_id,
                                const std::string& task_id);

  // True when every sample of this prompt is already in the store.
  bool FullyCached(const RenderedPrompt& prompt, const std::string& round_id,
                   const std::string& task_id) const;

  HealthReport Probe() const;

  const SamplingConfig& config() const { return config_; }
  std::size_t network_calls() const { return network_calls_.load(); }

  static Json BuildRequestBody(const SamplingConfig& config, const RenderedPrompt& prompt,
                               std::int64_t sample_index);

 private:
  struct HttpReply {
    int status = 0;
    std::string body;
    std::string error;
  };
  HttpReply Post(const std::string& body) const;

  SamplingConfig config_;
  Store* store_;
  mutable std::atomic<std::size_t> network_calls_{0};
};

}  // namespace sqlpref

#endif  // SQLPREF_CORE_LLM_CLIENT_HPP_
