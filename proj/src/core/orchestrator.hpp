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

// Round-based pipeline driver.
//
// Run directory layout (runs/<run_id>/):
//
//   .lock                     held while a process works on the run
//   store/                    content-addressed records (see store.hpp)
//   validation.json           gold validation report
//   round_<k>/manifest.json   deterministic round manifest
//   round_<k>/timing.json     wall-clock start/finish of each phase
//   round_<k>/pairs.jsonl     selected preference pairs
//   exports/<kind>_<rounds>.jsonl (+ .manifest.json checksum sidecar)
//   reports/trend.{json,csv}, reports/trend_*.svg, reports/eval_*.json
//
// A synthesis round samples the plan's model with few-shot prompts; an
// off-policy round adopts the candidates of the preceding synthesis round;
// an on-policy round samples the (externally retrained) model zero-shot.
// Training happens outside this tool between rounds.

#ifndef SQLPREF_CORE_ORCHESTRATOR_HPP_
#define SQLPREF_CORE_ORCHESTRATOR_HPP_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/evaluation.hpp"
#include "core/executor.hpp"
#include "core/llm_client.hpp"
#include "core/pairs.hpp"
#include "core/plan.hpp"
#include "core/store.hpp"

namespace sqlpref {

constexpr int kManifestFormatVersion = 1;
constexpr int kExportFormatVersion = 1;

struct TaskTally {
  std::string task_id;
  std::size_t n_candidates = 0;
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
  std::size_t n_invalid = 0;
  std::size_t n_extraction_failed = 0;
  std::size_t n_valid = 0;
  std::vector<std::int64_t> missing_samples;

  Json ToJson() const;
  static TaskTally FromJson(const Json& json);
};

struct PairingInfo {
  PairStrategy strategy = PairStrategy::kFurthest;
  std::size_t k_per_task = 1;
  std::size_t pairs_emitted = 0;
  std::size_t tasks_with_pairs = 0;
  std::string pair_scope;
};

struct RoundManifest {
  std::string round_id;
  std::size_t index = 0;
  RoundKind kind = RoundKind::kSynthesis;
  std::size_t ordinal = 0;  // 1-based for on-policy rounds, else 0
  std::optional<std::string> predecessor;
  std::optional<std::string> source_round;  // off-policy: adopted synthesis round
  std::string candidate_scope;
  std::string endpoint_url;
  std::string model_name;
  PromptStyle style = PromptStyle::kComplexCot;
  std::string sampling_config_hash;
  std::string template_hash;
  Json executor = Json::object();
  std::vector<TaskTally> tallies;  // task_id order
  std::vector<std::string> quarantined;
  std::vector<std::string> warnings;
  bool generation_complete = true;
  double mean_cot_tokens = 0.0;
  double median_cot_tokens = 0.0;
  std::optional<PairingInfo> pairing;
  std::optional<Json> greedy_eval;

  std::size_t TotalCandidates() const;
  std::size_t TotalCorrect() const;
  std::size_t TotalIncorrect() const;
  Json ToJson() const;
  static RoundManifest FromJson(const Json& json);
};

enum class ExportKind { kSft, kDpo };
std::string ExportKindName(ExportKind kind);
ExportKind ParseExportKind(const std::string& name);

struct ExportResult {
  ExportKind kind = ExportKind::kSft;
  std::vector<Json> records;
  std::filesystem::path file;
  std::filesystem::path sidecar;
  std::string sha256;
};

struct PairResult {
  PairRoundResult selection;
  std::filesystem::path pair_file;
  RoundManifest manifest;
};

struct PipelineOptions {
  bool dry_run = false;
  // Probe the endpoint before sampling anything not already cached.
  bool probe_endpoint = true;
};

class Pipeline {
 public:
  explicit Pipeline(RunPlan plan, PipelineOptions options = {});
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const RunPlan& plan() const { return plan_; }
  const Dataset& dataset();
  Store& store() { return *store_; }
  Executor& executor();

  std::filesystem::path RunDir() const { return plan_.RunDir(); }
  std::filesystem::path RoundDir(std::size_t round_index) const;
  static std::string RoundId(std::size_t round_index);

  // Gold validation (cached); writes validation.json.
  GoldReport Validate();

  RoundManifest Generate(std::size_t round_index, bool resume = false);
  PairResult Pair(std::size_t round_index,
                  std::optional<PairStrategy> strategy_override = std::nullopt);
  ExportResult Export(const std::vector<std::size_t>& round_indices, ExportKind kind);
  Json TrendReport();
  EvalReport EvaluatePredictions(const std::filesystem::path& predictions_path,
                                 PredictionKind kind = PredictionKind::kAuto,
                                 std::optional<Split> split = std::nullopt);
  EvalReport GreedyEval(std::size_t round_index);

  std::optional<RoundManifest> LoadManifest(std::size_t round_index) const;
  std::vector<Candidate> RoundCandidates(const RoundManifest& manifest) const;
  std::vector<PreferencePair> RoundPairs(const RoundManifest& manifest) const;

  // Dry-run descriptions: what the verb would do, touching nothing.
  Json DescribeValidate();
  Json DescribeGenerate(std::size_t round_index, bool resume);
  Json DescribePair(std::size_t round_index, std::optional<PairStrategy> strategy_override);
  Json DescribeExport(const std::vector<std::size_t>& round_indices, ExportKind kind);
  Json DescribeReport();

 private:
  void CheckRoundIndex(std::size_t round_index) const;
  const TemplateSet& Templates();
  const std::vector<Exemplar>& ExemplarPool();
  RenderedPrompt PromptFor(const Task& task, bool few_shot, std::size_t round_index);
  std::string CandidateScope(std::size_t round_index, const SamplingConfig& sampling);
  ExtractOptions ExtractOptionsForPlan() const;
  void WriteManifest(const RoundManifest& manifest, const Json& timing);
  RoundManifest GenerateSampled(std::size_t round_index, const RoundManifest* predecessor);
  RoundManifest AdoptSource(std::size_t round_index, const RoundManifest* predecessor);
  Json ExportRecordBase(const Task& task, const std::string& round_id);

  RunPlan plan_;
  PipelineOptions options_;
  int lock_fd_ = -1;
  std::unique_ptr<Store> store_;
  std::unique_ptr<Executor> executor_;
  std::optional<Dataset> dataset_;
  std::optional<GoldReport> gold_;
  std::optional<TemplateSet> templates_;
  std::optional<std::vector<Exemplar>> exemplars_;
};

// Chain checks used by tests and the report: ordinals strictly increase,
// every predecessor exists.
bool ManifestChainValid(const std::vector<RoundManifest>& chain, std::string* problem = nullptr);

}  // namespace sqlpref

#endif  // SQLPREF_CORE_ORCHESTRATOR_HPP_
