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

#include "core/llm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include "core/extract.hpp"
#include "httplib.h"

namespace sqlpref {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl ParseUrl(const std::string& url) {
  std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint_url needs a scheme: " + url);
  }
  std::size_t path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

bool Retryable(int status) {
  return status == 0 || status == 408 || status == 409 || status == 425 || status == 429 ||
         status >= 500;
}

}  // namespace

void SamplingConfig::Validate() const {
  if (n_samples < 1) throw Error(ErrorCode::kPlan, "n_samples must be >= 1");
  if (concurrency_limit < 1) throw Error(ErrorCode::kPlan, "concurrency_limit must be >= 1");
  if (temperature < 0) throw Error(ErrorCode::kPlan, "temperature must be >= 0");
}

Json SamplingConfig::CausalJson() const {
  return {{"n_samples", n_samples},   {"temperature", temperature},
          {"max_tokens", max_tokens}, {"endpoint_url", endpoint_url},
          {"model_name", model_name}, {"base_seed", base_seed}};
}

std::string SamplingConfig::Hash() const { return Fingerprint(CausalJson()); }

Json RawCompletion::ToJson() const {
  return {{"task_id", task_id},
          {"round_id", round_id},
          {"sample_index", sample_index},
          {"text", text},
          {"token_count", token_count},
          {"token_count_estimated", token_count_estimated},
          {"request_fingerprint", request_fingerprint},
          {"model", model}};
}

RawCompletion RawCompletion::FromJson(const Json& json) {
  RawCompletion c;
  c.task_id = json.at("task_id").get<std::string>();
  c.round_id = json.value("round_id", "");
  c.sample_index = json.at("sample_index").get<std::int64_t>();
  c.text = json.at("text").get<std::string>();
  c.token_count = json.value("token_count", std::size_t{0});
  c.token_count_estimated = json.value("token_count_estimated", false);
  c.request_fingerprint = json.value("request_fingerprint", "");
  c.model = json.value("model", "");
  return c;
}

Json HealthReport::ToJson() const {
  return {{"healthy", healthy},
          {"model", model_echo},
          {"latency_ms", latency_ms},
          {"http_status", http_status},
          {"error", error}};
}

LlmClient::LlmClient(SamplingConfig config, Store* store)
    : config_(std::move(config)), store_(store) {
  config_.Validate();
}

Json LlmClient::BuildRequestBody(const SamplingConfig& config, const RenderedPrompt& prompt,
                                 std::int64_t sample_index) {
  Json messages = Json::array();
  messages.push_back({{"role", "system"}, {"content", prompt.system_text}});
  for (const Exemplar& shot : prompt.exemplars) {
    messages.push_back({{"role", "user"}, {"content", shot.user_text}});
    messages.push_back({{"role", "assistant"}, {"content", shot.assistant_text}});
  }
  messages.push_back({{"role", "user"}, {"content", prompt.user_text}});
  return {{"model", config.model_name},
          {"messages", messages},
          {"temperature", config.temperature},
          {"max_tokens", config.max_tokens},
          {"n", 1},
          {"seed", config.base_seed + static_cast<std::uint64_t>(sample_index)}};
}

std::string LlmClient::RequestFingerprint(const RenderedPrompt& prompt,
                                          const std::string& round_id,
                                          const std::string& task_id,
                                          std::int64_t sample_index) const {
  return Fingerprint({{"round_id", round_id},
                      {"task_id", task_id},
                      {"prompt", prompt.ToJson()},
                      {"config", config_.CausalJson()},
                      {"sample_index", sample_index}});
}

LlmClient::HttpReply LlmClient::Post(const std::string& body) const {
  HttpReply reply;
  ParsedUrl url;
  try {
    url = ParseUrl(config_.endpoint_url);
  } catch (const Error& e) {
    reply.error = e.what();
    return reply;
  }
  httplib::Client client(url.origin);
  auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  httplib::Headers headers;
  if (const char* key = std::getenv(kApiKeyEnv); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  network_calls_.fetch_add(1);
  auto result = client.Post(url.path, headers, body, "application/json");
  if (!result) {
    reply.error = httplib::to_string(result.error());
    return reply;
  }
  reply.status = result->status;
  reply.body = result->body;
  return reply;
}

bool LlmClient::FullyCached(const RenderedPrompt& prompt, const std::string& round_id,
                            const std::string& task_id) const {
  if (!store_) return false;
  for (std::size_t i = 0; i < config_.n_samples; ++i) {
    auto key = RequestFingerprint(prompt, round_id, task_id, static_cast<std::int64_t>(i));
    if (!store_->Contains({Namespace::kCompletion, key})) return false;
  }
  return true;
}

SampleResult LlmClient::SampleCandidates(const RenderedPrompt& prompt,
                                         const std::string& round_id,
                                         const std::string& task_id) {
  SampleResult result;
  std::vector<std::optional<RawCompletion>> slots(config_.n_samples);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < config_.n_samples; ++i) {
    std::string key = RequestFingerprint(prompt, round_id, task_id, static_cast<std::int64_t>(i));
    if (store_) {
      if (auto record = store_->Get({Namespace::kCompletion, key})) {
        slots[i] = RawCompletion::FromJson(*record);
        ++result.cache_hits;
        continue;
      }
    }
    pending.push_back(i);
  }

  std::mutex error_mutex;
  std::atomic<std::size_t> calls{0};
  ParallelFor(pending.size(), config_.concurrency_limit, [&](std::size_t p) {
    const std::size_t index = pending[p];
    const auto sample_index = static_cast<std::int64_t>(index);
    std::string fingerprint = RequestFingerprint(prompt, round_id, task_id, sample_index);
    Json request = BuildRequestBody(config_, prompt, sample_index);
    std::string body = CanonicalDump(request);
    std::mt19937_64 jitter(DeriveSeed(0, fingerprint));
    std::string last_error;

    for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::uniform_real_distribution<double> factor(0.5, 1.5);
        auto delay = config_.retry_base_delay * (1LL << std::min<std::size_t>(attempt - 1, 10));
        std::this_thread::sleep_for(std::chrono::duration_cast<std::chrono::milliseconds>(
            delay * factor(jitter)));
      }
      calls.fetch_add(1);
      HttpReply reply = Post(body);
      if (reply.status == 200) {
        try {
          Json response = Json::parse(reply.body);
          RawCompletion completion;
          completion.task_id = task_id;
          completion.round_id = round_id;
          completion.sample_index = sample_index;
          completion.text =
              response.at("choices").at(0).at("message").at("content").get<std::string>();
          completion.model = response.value("model", config_.model_name);
          completion.request_fingerprint = fingerprint;
          const Json* usage = response.contains("usage") ? &response["usage"] : nullptr;
          if (usage && usage->contains("completion_tokens") &&
              (*usage)["completion_tokens"].is_number_integer()) {
            completion.token_count = (*usage)["completion_tokens"].get<std::size_t>();
          } else {
            completion.token_count = DefaultTokenCounter().Count(completion.text);
            completion.token_count_estimated = true;
          }
          if (store_) {
            Json record = completion.ToJson();
            record["request"] = request;
            record["response"] = reply.body;
            store_->Put({Namespace::kCompletion, fingerprint}, record,
                        {round_id, task_id, sample_index});
          }
          slots[index] = std::move(completion);
          return;
        } catch (const Json::exception& e) {
          last_error = std::string("malformed completion response: ") + e.what();
          continue;
        }
      }
      last_error = reply.status == 0 ? reply.error
                                     : "HTTP " + std::to_string(reply.status) + ": " +
                                           reply.body.substr(0, 200);
      if (!Retryable(reply.status)) break;
    }
    std::lock_guard<std::mutex> lock(error_mutex);
    result.errors.push_back("sample " + std::to_string(index) + ": " + last_error);
  });
  result.network_calls = calls.load();

  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) {
      result.completions.push_back(std::move(*slots[i]));
    } else {
      result.missing.push_back(static_cast<std::int64_t>(i));
    }
  }
  std::sort(result.errors.begin(), result.errors.end());
  return result;
}

HealthReport LlmClient::Probe() const {
  HealthReport report;
  Json body = {{"model", config_.model_name},
               {"messages", Json::array({{{"role", "user"}, {"content", "ping"}}})},
               {"max_tokens", 1},
               {"temperature", 0.0}};
  auto start = std::chrono::steady_clock::now();
  HttpReply reply = Post(CanonicalDump(body));
  report.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  report.http_status = reply.status;
  if (reply.status != 200) {
    report.error = reply.status == 0 ? reply.error : "HTTP " + std::to_string(reply.status);
    return report;
  }
  try {
    Json response = Json::parse(reply.body);
    report.model_echo = response.value("model", "");
    report.healthy = true;
  } catch (const Json::exception& e) {
    report.error = std::string("malformed response: ") + e.what();
  }
  return report;
}

}  // namespace sqlpref
