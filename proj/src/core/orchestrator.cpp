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

#include "core/orchestrator.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <set>

#include "core/svg_chart.hpp"

namespace sqlpref {
namespace {

std::string ShortHash(const Json& inputs) { return Fingerprint(inputs).substr(0, 16); }

Json OptionalString(const std::optional<std::string>& value) {
  return value ? Json(*value) : Json(nullptr);
}

std::optional<std::string> OptionalFrom(const Json& json, const char* key) {
  if (!json.contains(key) || json[key].is_null()) return std::nullopt;
  return json[key].get<std::string>();
}

struct CotStats {
  double mean = 0.0;
  double median = 0.0;
};

CotStats ComputeCotStats(std::vector<std::size_t> counts) {
  CotStats stats;
  if (counts.empty()) return stats;
  std::sort(counts.begin(), counts.end());
  double sum = 0;
  for (std::size_t c : counts) sum += static_cast<double>(c);
  stats.mean = sum / static_cast<double>(counts.size());
  std::size_t mid = counts.size() / 2;
  stats.median = counts.size() % 2 == 1
                     ? static_cast<double>(counts[mid])
                     : (static_cast<double>(counts[mid - 1]) + static_cast<double>(counts[mid])) / 2;
  return stats;
}

std::string JsonLines(const std::vector<Json>& records) {
  std::string out;
  for (const Json& r : records) out += CanonicalDump(r) + "\n";
  return out;
}

std::string Pretty(const Json& json) { return json.dump(2) + "\n"; }

}  // namespace

// ---------------------------------------------------------------------------
// Manifest serialization

Json TaskTally::ToJson() const {
  return {{"task_id", task_id},
          {"n_candidates", n_candidates},
          {"n_correct", n_correct},
          {"n_incorrect", n_incorrect},
          {"n_invalid", n_invalid},
          {"n_extraction_failed", n_extraction_failed},
          {"n_valid", n_valid},
          {"missing_samples", missing_samples}};
}

TaskTally TaskTally::FromJson(const Json& json) {
  TaskTally t;
  t.task_id = json.at("task_id").get<std::string>();
  t.n_candidates = json.at("n_candidates").get<std::size_t>();
  t.n_correct = json.at("n_correct").get<std::size_t>();
  t.n_incorrect = json.at("n_incorrect").get<std::size_t>();
  t.n_invalid = json.at("n_invalid").get<std::size_t>();
  t.n_extraction_failed = json.at("n_extraction_failed").get<std::size_t>();
  t.n_valid = json.value("n_valid", std::size_t{0});
  t.missing_samples = json.value("missing_samples", std::vector<std::int64_t>{});
  return t;
}

std::size_t RoundManifest::TotalCandidates() const {
  std::size_t n = 0;
  for (const auto& t : tallies) n += t.n_candidates;
  return n;
}

std::size_t RoundManifest::TotalCorrect() const {
  std::size_t n = 0;
  for (const auto& t : tallies) n += t.n_correct;
  return n;
}

std::size_t RoundManifest::TotalIncorrect() const {
  std::size_t n = 0;
  for (const auto& t : tallies) n += t.n_incorrect;
  return n;
}

Json RoundManifest::ToJson() const {
  Json tally_json = Json::array();
  std::size_t invalid = 0, extraction_failed = 0, valid = 0;
  for (const auto& t : tallies) {
    tally_json.push_back(t.ToJson());
    invalid += t.n_invalid;
    extraction_failed += t.n_extraction_failed;
    valid += t.n_valid;
  }
  Json json = {{"format_version", kManifestFormatVersion},
               {"round_id", round_id},
               {"index", index},
               {"kind", RoundKindName(kind)},
               {"ordinal", ordinal},
               {"predecessor", OptionalString(predecessor)},
               {"source_round", OptionalString(source_round)},
               {"candidate_scope", candidate_scope},
               {"endpoint_url", endpoint_url},
               {"model_name", model_name},
               {"prompt_style", PromptStyleName(style)},
               {"sampling_config_hash", sampling_config_hash},
               {"template_hash", template_hash},
               {"executor", executor},
               {"tallies", tally_json},
               {"totals",
                {{"n_tasks", tallies.size()},
                 {"n_candidates", TotalCandidates()},
                 {"n_correct", TotalCorrect()},
                 {"n_incorrect", TotalIncorrect()},
                 {"n_invalid", invalid},
                 {"n_extraction_failed", extraction_failed},
                 {"n_valid", valid}}},
               {"quarantined", quarantined},
               {"warnings", warnings},
               {"generation_complete", generation_complete},
               {"mean_cot_tokens", mean_cot_tokens},
               {"median_cot_tokens", median_cot_tokens},
               {"pairing", nullptr},
               {"pairs_emitted", nullptr},
               {"tasks_with_pairs", nullptr},
               {"greedy_eval", greedy_eval ? *greedy_eval : Json(nullptr)}};
  if (pairing) {
    json["pairing"] = {{"strategy", PairStrategyName(pairing->strategy)},
                       {"k_per_task", pairing->k_per_task},
                       {"pair_scope", pairing->pair_scope}};
    json["pairs_emitted"] = pairing->pairs_emitted;
    json["tasks_with_pairs"] = pairing->tasks_with_pairs;
  }
  return json;
}

RoundManifest RoundManifest::FromJson(const Json& json) {
  RoundManifest m;
  m.round_id = json.at("round_id").get<std::string>();
  m.index = json.at("index").get<std::size_t>();
  m.kind = ParseRoundKind(json.at("kind").get<std::string>());
  m.ordinal = json.value("ordinal", std::size_t{0});
  m.predecessor = OptionalFrom(json, "predecessor");
  m.source_round = OptionalFrom(json, "source_round");
  m.candidate_scope = json.at("candidate_scope").get<std::string>();
  m.endpoint_url = json.value("endpoint_url", "");
  m.model_name = json.value("model_name", "");
  m.style = ParsePromptStyle(json.value("prompt_style", "complex_cot"));
  m.sampling_config_hash = json.value("sampling_config_hash", "");
  m.template_hash = json.value("template_hash", "");
  m.executor = json.value("executor", Json::object());
  for (const Json& t : json.at("tallies")) m.tallies.push_back(TaskTally::FromJson(t));
  m.quarantined = json.value("quarantined", std::vector<std::string>{});
  m.warnings = json.value("warnings", std::vector<std::string>{});
  m.generation_complete = json.value("generation_complete", true);
  m.mean_cot_tokens = json.value("mean_cot_tokens", 0.0);
  m.median_cot_tokens = json.value("median_cot_tokens", 0.0);
  if (json.contains("pairing") && json["pairing"].is_object()) {
    PairingInfo info;
    info.strategy = ParsePairStrategy(json["pairing"].at("strategy").get<std::string>());
    info.k_per_task = json["pairing"].at("k_per_task").get<std::size_t>();
    info.pair_scope = json["pairing"].at("pair_scope").get<std::string>();
    info.pairs_emitted = json.at("pairs_emitted").get<std::size_t>();
    info.tasks_with_pairs = json.at("tasks_with_pairs").get<std::size_t>();
    m.pairing = info;
  }
  if (json.contains("greedy_eval") && !json["greedy_eval"].is_null()) {
    m.greedy_eval = json["greedy_eval"];
  }
  return m;
}

std::string ExportKindName(ExportKind kind) { return kind == ExportKind::kSft ? "sft" : "dpo"; }

ExportKind ParseExportKind(const std::string& name) {
  if (name == "sft") return ExportKind::kSft;
  if (name == "dpo") return ExportKind::kDpo;
  throw Error(ErrorCode::kInvalidArgument, "unknown export kind '" + name + "' (sft|dpo)");
}

bool ManifestChainValid(const std::vector<RoundManifest>& chain, std::string* problem) {
  auto fail = [&](const std::string& why) {
    if (problem) *problem = why;
    return false;
  };
  std::set<std::string> seen;
  std::size_t last_ordinal = 0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const RoundManifest& m = chain[i];
    if (i == 0) {
      if (m.kind != RoundKind::kSynthesis) return fail("chain must start with synthesis");
      if (m.predecessor) return fail(m.round_id + ": synthesis round has a predecessor");
    } else {
      if (!m.predecessor) return fail(m.round_id + ": missing predecessor");
      if (*m.predecessor != chain[i - 1].round_id) {
        return fail(m.round_id + ": predecessor " + *m.predecessor + " is not " +
                    chain[i - 1].round_id);
      }
    }
    if (m.predecessor && !seen.count(*m.predecessor)) {
      return fail(m.round_id + ": predecessor " + *m.predecessor + " not found");
    }
    if (m.kind == RoundKind::kOnPolicy) {
      if (m.ordinal <= last_ordinal) return fail(m.round_id + ": ordinal not increasing");
      last_ordinal = m.ordinal;
    }
    seen.insert(m.round_id);
  }
  return true;
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(RunPlan plan, PipelineOptions options)
    : plan_(std::move(plan)), options_(options) {
  const std::filesystem::path run_dir = RunDir();
  if (!options_.dry_run) {
    std::error_code ec;
    std::filesystem::create_directories(run_dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create run directory " + run_dir.string());
    const std::string lock_path = (run_dir / ".lock").string();
    lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (lock_fd_ < 0) {
      throw Error(ErrorCode::kIo, "cannot open " + lock_path + ": " + std::strerror(errno));
    }
    if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(lock_fd_);
      lock_fd_ = -1;
      throw Error(ErrorCode::kLocked,
                  "run '" + plan_.run_id + "' is locked by another process (" + lock_path + ")");
    }
  }
  store_ = std::make_unique<Store>(run_dir / "store",
                                   StoreOptions{plan_.store_fsync, options_.dry_run});
}

Pipeline::~Pipeline() {
  executor_.reset();
  store_.reset();
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

const Dataset& Pipeline::dataset() {
  if (!dataset_) {
    dataset_ = LoadDataset(plan_.dataset_manifest,
                           LoadOptions{plan_.database_root, plan_.sample_values});
  }
  return *dataset_;
}

Executor& Pipeline::executor() {
  if (!executor_) executor_ = std::make_unique<Executor>(plan_.executor, store_.get());
  return *executor_;
}

std::string Pipeline::RoundId(std::size_t round_index) {
  return "round_" + std::to_string(round_index);
}

std::filesystem::path Pipeline::RoundDir(std::size_t round_index) const {
  return RunDir() / RoundId(round_index);
}

void Pipeline::CheckRoundIndex(std::size_t round_index) const {
  if (round_index >= plan_.rounds.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "round " + std::to_string(round_index) + " out of range; the plan has " +
                    std::to_string(plan_.rounds.size()) + " round(s) (0-based)");
  }
}

const TemplateSet& Pipeline::Templates() {
  if (!templates_) {
    templates_ = plan_.template_dir ? TemplateSet::FromDirectory(*plan_.template_dir)
                                    : TemplateSet::Builtin();
  }
  return *templates_;
}

const std::vector<Exemplar>& Pipeline::ExemplarPool() {
  if (!exemplars_) {
    exemplars_.emplace();
    if (plan_.exemplar_pool) {
      for (Exemplar& e : LoadExemplars(*plan_.exemplar_pool)) {
        if (e.style == plan_.style) exemplars_->push_back(std::move(e));
      }
    }
  }
  return *exemplars_;
}

ExtractOptions Pipeline::ExtractOptionsForPlan() const {
  ExtractOptions options;
  options.bare_sql_fallback = plan_.bare_sql_fallback && plan_.style == PromptStyle::kNoCot;
  return options;
}

RenderedPrompt Pipeline::PromptFor(const Task& task, bool few_shot, std::size_t) {
  const DatabaseRef& db = dataset().Database(task.db_id);
  std::vector<Exemplar> shots;
  if (few_shot && plan_.n_exemplars > 0) {
    std::vector<Exemplar> pool;
    for (const Exemplar& e : ExemplarPool()) {
      if (e.task_id != task.task_id) pool.push_back(e);
    }
    std::size_t k = std::min(plan_.n_exemplars, pool.size());
    if (k > 0) shots = PickExemplars(pool, k, DeriveSeed(plan_.seed, task.task_id));
  }
  RenderOptions options;
  options.include_evidence = plan_.include_evidence;
  options.skeleton_in_system = plan_.skeleton_in_system;
  return RenderPrompt(task, SerializeSchema(db.schema, plan_.schema_style), plan_.style, shots,
                      options, Templates());
}

std::string Pipeline::CandidateScope(std::size_t round_index, const SamplingConfig& sampling) {
  Json tasks = Json::array();
  for (const Task& t : dataset().tasks) {
    tasks.push_back({t.task_id, t.gold_sql, dataset().Database(t.db_id).file_hash});
  }
  std::string exemplar_hash;
  if (plan_.exemplar_pool) exemplar_hash = Sha256File(*plan_.exemplar_pool);
  return RoundId(round_index) + "/" +
         ShortHash({{"sampling", sampling.CausalJson()},
                    {"kind", RoundKindName(plan_.rounds[round_index].kind)},
                    {"templates", Templates().Hash()},
                    {"style", PromptStyleName(plan_.style)},
                    {"include_evidence", plan_.include_evidence},
                    {"schema_style", SchemaStyleName(plan_.schema_style)},
                    {"sample_values", plan_.sample_values},
                    {"n_exemplars", plan_.n_exemplars},
                    {"exemplars", exemplar_hash},
                    {"skeleton_in_system", plan_.skeleton_in_system},
                    {"executor", plan_.executor.ToJson()},
                    {"bare_sql_fallback", ExtractOptionsForPlan().bare_sql_fallback},
                    {"seed", plan_.seed},
                    {"tasks", tasks}});
}

std::optional<RoundManifest> Pipeline::LoadManifest(std::size_t round_index) const {
  std::filesystem::path path = RoundDir(round_index) / "manifest.json";
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return RoundManifest::FromJson(Json::parse(ReadFile(path)));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIntegrity, "corrupt manifest " + path.string() + ": " + e.what());
  }
}

void Pipeline::WriteManifest(const RoundManifest& manifest, const Json& timing) {
  std::filesystem::path dir = RoundDir(manifest.index);
  std::filesystem::create_directories(dir);
  std::string text = Pretty(manifest.ToJson());
  WriteFileAtomic(dir / "manifest.json", text);
  store_->Put({Namespace::kManifest, Sha256Hex(text)}, manifest.ToJson(),
              {manifest.round_id, "", -1});

  Json merged = Json::object();
  std::filesystem::path timing_path = dir / "timing.json";
  if (std::filesystem::exists(timing_path)) {
    try {
      merged = Json::parse(ReadFile(timing_path));
    } catch (const Json::exception&) {
      merged = Json::object();
    }
  }
  for (const auto& [phase, value] : timing.items()) merged[phase] = value;
  WriteFileAtomic(timing_path, Pretty(merged));
}

GoldReport Pipeline::Validate() {
  if (!gold_) {
    gold_ = executor().ValidateGold(dataset());
    for (const std::string& id : gold_->quarantined) {
      LogWarning("gold query fails for task " + id + "; task quarantined");
    }
    if (!options_.dry_run) WriteFileAtomic(RunDir() / "validation.json", Pretty(gold_->ToJson()));
  }
  return *gold_;
}

RoundManifest Pipeline::Generate(std::size_t round_index, bool resume) {
  CheckRoundIndex(round_index);
  if (options_.dry_run) {
    throw Error(ErrorCode::kInvalidArgument, "Generate called on a dry-run pipeline");
  }
  if (auto existing = LoadManifest(round_index); existing && !resume) {
    LogInfo(RoundId(round_index) + " already generated; pass --resume to re-run it from cache");
    return *existing;
  }
  std::optional<RoundManifest> predecessor;
  if (round_index > 0) {
    predecessor = LoadManifest(round_index - 1);
    if (!predecessor) {
      throw Error(ErrorCode::kPrecondition, RoundId(round_index - 1) +
                                                " has not been generated; rounds run in order");
    }
    if (plan_.rounds[round_index].kind == RoundKind::kOnPolicy &&
        predecessor->kind != RoundKind::kSynthesis && !predecessor->pairing) {
      throw Error(ErrorCode::kPrecondition, "pair " + predecessor->round_id + " before generating " +
                                                RoundId(round_index));
    }
  }
  if (plan_.rounds[round_index].kind == RoundKind::kOffPolicy) {
    return AdoptSource(round_index, predecessor ? &*predecessor : nullptr);
  }
  return GenerateSampled(round_index, predecessor ? &*predecessor : nullptr);
}

RoundManifest Pipeline::AdoptSource(std::size_t round_index, const RoundManifest* predecessor) {
  std::optional<RoundManifest> source;
  for (std::size_t i = round_index; i-- > 0;) {
    if (plan_.rounds[i].kind == RoundKind::kSynthesis) {
      source = LoadManifest(i);
      if (!source) {
        throw Error(ErrorCode::kPrecondition, RoundId(i) + " has not been generated");
      }
      break;
    }
  }
  if (!source) {
    throw Error(ErrorCode::kPrecondition,
                RoundId(round_index) + ": no preceding synthesis round to adopt");
  }
  std::string started = IsoTimestampNow();
  RoundManifest m = *source;
  m.round_id = RoundId(round_index);
  m.index = round_index;
  m.kind = RoundKind::kOffPolicy;
  m.ordinal = 0;
  m.predecessor = predecessor ? std::optional<std::string>(predecessor->round_id) : std::nullopt;
  m.source_round = source->round_id;
  m.pairing.reset();
  m.greedy_eval.reset();
  WriteManifest(m, {{"generate", {{"started", started}, {"finished", IsoTimestampNow()}}}});
  return m;
}

RoundManifest Pipeline::GenerateSampled(std::size_t round_index,
                                        const RoundManifest* predecessor) {
  const RoundSpec& spec = plan_.rounds[round_index];
  const SamplingConfig sampling = plan_.SamplingForRound(round_index);
  const bool few_shot = spec.kind == RoundKind::kSynthesis;
  const std::string round_id = RoundId(round_index);
  const std::string started = IsoTimestampNow();

  GoldReport gold = Validate();
  const Dataset& data = dataset();
  std::vector<const Task*> tasks;
  for (const Task& task : data.tasks) {
    if (!gold.IsQuarantined(task.task_id)) tasks.push_back(&task);
  }
  std::vector<RenderedPrompt> prompts;
  prompts.reserve(tasks.size());
  for (const Task* task : tasks) prompts.push_back(PromptFor(*task, few_shot, round_index));

  LlmClient client(sampling, store_.get());
  bool all_cached = true;
  for (std::size_t i = 0; i < tasks.size() && all_cached; ++i) {
    all_cached = client.FullyCached(prompts[i], round_id, tasks[i]->task_id);
  }
  if (!all_cached && options_.probe_endpoint) {
    HealthReport health = client.Probe();
    if (!health.healthy) {
      throw Error(ErrorCode::kEndpoint,
                  "endpoint " + sampling.endpoint_url + " is unhealthy: " + health.error);
    }
  }

  RoundManifest m;
  m.round_id = round_id;
  m.index = round_index;
  m.kind = spec.kind;
  if (spec.kind == RoundKind::kOnPolicy) {
    for (std::size_t i = 0; i <= round_index; ++i) {
      m.ordinal += plan_.rounds[i].kind == RoundKind::kOnPolicy;
    }
  }
  if (predecessor) m.predecessor = predecessor->round_id;
  m.candidate_scope = CandidateScope(round_index, sampling);
  m.endpoint_url = sampling.endpoint_url;
  m.model_name = sampling.model_name;
  m.style = plan_.style;
  m.sampling_config_hash = sampling.Hash();
  m.template_hash = Templates().Hash();
  m.executor = plan_.executor.ToJson();
  m.quarantined = gold.quarantined;

  Executor& exec = executor();
  const ExtractOptions extract_options = ExtractOptionsForPlan();
  std::vector<std::size_t> cot_counts;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = *tasks[t];
    const DatabaseRef& db = data.Database(task.db_id);
    const ExecutionOutcome& gold_outcome = gold.outcomes.at(task.task_id);
    SampleResult sampled = client.SampleCandidates(prompts[t], round_id, task.task_id);

    std::vector<Candidate> labeled(sampled.completions.size());
    ParallelFor(sampled.completions.size(), exec.config().workers, [&](std::size_t i) {
      const RawCompletion& completion = sampled.completions[i];
      ExtractionResult extraction = ExtractFinalSql(completion.text, extract_options);
      LabelResult label = exec.Label(task, db, extraction, gold_outcome);
      Candidate& c = labeled[i];
      c.task_id = task.task_id;
      c.round_id = round_id;
      c.sample_index = completion.sample_index;
      c.text = completion.text;
      c.final_sql = extraction.final_sql;
      c.extraction = extraction.status;
      c.cot_token_count = extraction.cot_token_count;
      c.label = label.label;
      c.valid = label.valid;
      if (label.outcome) c.exec_status = ExecStatusName(label.outcome->status);
    });

    TaskTally tally;
    tally.task_id = task.task_id;
    tally.missing_samples = sampled.missing;
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      const Candidate& c = labeled[i];
      store_->Put({Namespace::kLabel,
                   Fingerprint({{"scope", m.candidate_scope},
                                {"task_id", c.task_id},
                                {"sample_index", c.sample_index},
                                {"completion", sampled.completions[i].request_fingerprint}})},
                  c.ToJson(), {m.candidate_scope, c.task_id, c.sample_index});
      ++tally.n_candidates;
      tally.n_valid += c.valid;
      switch (c.label) {
        case CandidateLabel::kCorrect: ++tally.n_correct; break;
        case CandidateLabel::kIncorrect: ++tally.n_incorrect; break;
        case CandidateLabel::kInvalidSql: ++tally.n_invalid; break;
        case CandidateLabel::kExtractionFailed: ++tally.n_extraction_failed; break;
      }
      if (c.extraction == ExtractionStatus::kOk) cot_counts.push_back(c.cot_token_count);
    }
    if (!sampled.missing.empty()) {
      m.generation_complete = false;
      m.warnings.push_back("task " + task.task_id + ": " + std::to_string(sampled.missing.size()) +
                           " sample(s) failed after retries");
      for (const std::string& e : sampled.errors) LogWarning("task " + task.task_id + " " + e);
    }
    m.tallies.push_back(std::move(tally));
  }
  CotStats stats = ComputeCotStats(std::move(cot_counts));
  m.mean_cot_tokens = stats.mean;
  m.median_cot_tokens = stats.median;
  for (const std::string& w : m.warnings) LogWarning(w);
  WriteManifest(m, {{"generate", {{"started", started}, {"finished", IsoTimestampNow()}}}});
  return m;
}

std::vector<Candidate> Pipeline::RoundCandidates(const RoundManifest& manifest) const {
  std::vector<Candidate> out;
  for (const Json& record : store_->Scan(Namespace::kLabel, manifest.candidate_scope)) {
    out.push_back(Candidate::FromJson(record));
  }
  return out;
}

std::vector<PreferencePair> Pipeline::RoundPairs(const RoundManifest& manifest) const {
  std::vector<PreferencePair> out;
  if (!manifest.pairing) return out;
  for (const Json& record : store_->Scan(Namespace::kPair, manifest.pairing->pair_scope)) {
    out.push_back(PreferencePair::FromJson(record));
  }
  return out;
}

PairResult Pipeline::Pair(std::size_t round_index,
                          std::optional<PairStrategy> strategy_override) {
  CheckRoundIndex(round_index);
  std::optional<RoundManifest> manifest = LoadManifest(round_index);
  if (!manifest) {
    throw Error(ErrorCode::kPrecondition, RoundId(round_index) + " has not been generated");
  }
  if (!manifest->generation_complete) {
    LogWarning(manifest->round_id + " has missing samples; pairing the candidates obtained");
  }
  const std::string started = IsoTimestampNow();
  const RoundSpec& spec = plan_.rounds[round_index];

  std::map<std::string, std::vector<Candidate>> by_task;
  for (const TaskTally& t : manifest->tallies) by_task[t.task_id];
  for (Candidate& c : RoundCandidates(*manifest)) by_task[c.task_id].push_back(std::move(c));
  std::vector<CandidatePools> pools;
  for (auto& [task_id, candidates] : by_task) {
    CandidatePools p = BuildPools(std::move(candidates), {plan_.invalid_as_rejected});
    p.task_id = task_id;
    pools.push_back(std::move(p));
  }

  PairRoundOptions options;
  options.strategy_override = strategy_override ? strategy_override : spec.strategy;
  options.k_per_task = spec.k_per_task;
  options.seed = DeriveSeed(plan_.seed, manifest->round_id);
  options.workers = plan_.executor.workers;
  PairResult result;
  result.selection = PairRound(pools, manifest->kind, options);

  PairingInfo info;
  info.strategy = result.selection.strategy;
  info.k_per_task = spec.k_per_task;
  info.pairs_emitted = result.selection.tally.pairs_emitted;
  info.tasks_with_pairs = result.selection.tally.tasks_with_pairs;
  info.pair_scope = manifest->round_id + "/" +
                    ShortHash({{"candidates", manifest->candidate_scope},
                               {"strategy", PairStrategyName(info.strategy)},
                               {"k_per_task", info.k_per_task},
                               {"seed", options.seed},
                               {"invalid_as_rejected", plan_.invalid_as_rejected}});

  std::vector<Json> lines;
  std::string current_task;
  std::int64_t rank = 0;
  for (PreferencePair& pair : result.selection.pairs) {
    pair.round_id = manifest->round_id;
    if (pair.task_id != current_task) {
      current_task = pair.task_id;
      rank = 0;
    }
    Json record = pair.ToJson();
    store_->Put({Namespace::kPair, Fingerprint({{"scope", info.pair_scope},
                                                {"task_id", pair.task_id},
                                                {"rank", rank}})},
                record, {info.pair_scope, pair.task_id, rank});
    ++rank;
    lines.push_back(std::move(record));
  }
  result.pair_file = RoundDir(round_index) / "pairs.jsonl";
  WriteFileAtomic(result.pair_file, JsonLines(lines));

  manifest->pairing = info;
  WriteManifest(*manifest, {{"pair", {{"started", started}, {"finished", IsoTimestampNow()}}}});
  result.manifest = *manifest;
  return result;
}

Json Pipeline::ExportRecordBase(const Task& task, const std::string& round_id) {
  RenderedPrompt prompt = PromptFor(task, false, 0);
  return {{"format_version", kExportFormatVersion},
          {"task_id", task.task_id},
          {"db_id", task.db_id},
          {"round_id", round_id},
          {"question", task.question},
          {"evidence", plan_.include_evidence ? OptionalString(task.evidence) : Json(nullptr)},
          {"schema", SerializeSchema(dataset().Database(task.db_id).schema, plan_.schema_style)},
          {"prompt_style", PromptStyleName(plan_.style)},
          {"system", prompt.system_text},
          {"user", prompt.user_text}};
}

ExportResult Pipeline::Export(const std::vector<std::size_t>& round_indices, ExportKind kind) {
  if (round_indices.empty()) throw Error(ErrorCode::kInvalidArgument, "export: no rounds given");
  std::vector<RoundManifest> manifests;
  for (std::size_t index : round_indices) {
    CheckRoundIndex(index);
    auto m = LoadManifest(index);
    if (!m) throw Error(ErrorCode::kPrecondition, RoundId(index) + " has not been generated");
    if (kind == ExportKind::kDpo && !m->pairing) {
      throw Error(ErrorCode::kPrecondition, RoundId(index) + " has not been paired");
    }
    manifests.push_back(std::move(*m));
  }
  GoldReport gold = Validate();
  const Dataset& data = dataset();
  Executor& exec = executor();
  const ExtractOptions extract_options = ExtractOptionsForPlan();

  // Gold results are re-executed once per task, bypassing every cache.
  std::map<std::string, ExecutionOutcome> fresh_gold;
  std::mutex gold_mutex;
  auto gold_for = [&](const Task& task) {
    {
      std::lock_guard<std::mutex> lock(gold_mutex);
      if (auto it = fresh_gold.find(task.task_id); it != fresh_gold.end()) return it->second;
    }
    ExecutionOutcome outcome = exec.ExecuteFresh(data.Database(task.db_id), task.gold_sql);
    std::lock_guard<std::mutex> lock(gold_mutex);
    return fresh_gold.emplace(task.task_id, std::move(outcome)).first->second;
  };
  auto relabel = [&](const Task& task, const Candidate& c) {
    ExtractionResult extraction = ExtractFinalSql(c.text, extract_options);
    if (extraction.final_sql != c.final_sql) return CandidateLabel::kExtractionFailed;
    return exec.LabelFresh(task, data.Database(task.db_id), extraction, gold_for(task)).label;
  };
  auto record_name = [](const Candidate& c) {
    return "task " + c.task_id + " " + c.round_id + " sample " + std::to_string(c.sample_index);
  };

  struct Item {
    std::size_t round_order;
    std::size_t rank;
    const Task* task;
    Json record;
    std::string failure;
  };
  std::vector<Item> items;
  std::vector<Candidate> sft_candidates;
  std::vector<PreferencePair> dpo_pairs;
  for (std::size_t r = 0; r < manifests.size(); ++r) {
    const RoundManifest& m = manifests[r];
    if (kind == ExportKind::kSft) {
      for (Candidate& c : RoundCandidates(m)) {
        if (c.label != CandidateLabel::kCorrect) continue;
        const Task* task = data.FindTask(c.task_id);
        if (!task) continue;
        items.push_back({r, static_cast<std::size_t>(c.sample_index), task,
                         ExportRecordBase(*task, m.round_id), ""});
        sft_candidates.push_back(std::move(c));
      }
    } else {
      std::size_t rank = 0;
      std::string current;
      for (PreferencePair& p : RoundPairs(m)) {
        if (p.task_id != current) {
          current = p.task_id;
          rank = 0;
        }
        const Task* task = data.FindTask(p.task_id);
        if (!task) continue;
        items.push_back({r, rank++, task, ExportRecordBase(*task, m.round_id), ""});
        dpo_pairs.push_back(std::move(p));
      }
    }
  }

  ParallelFor(items.size(), exec.config().workers, [&](std::size_t i) {
    Item& item = items[i];
    if (gold.IsQuarantined(item.task->task_id)) {
      item.failure = "gold query for task " + item.task->task_id + " no longer executes";
      return;
    }
    if (kind == ExportKind::kSft) {
      const Candidate& c = sft_candidates[i];
      if (relabel(*item.task, c) != CandidateLabel::kCorrect) {
        item.failure = "sft record " + record_name(c) + " no longer re-verifies as correct";
        return;
      }
      item.record["kind"] = "sft";
      item.record["sample_index"] = c.sample_index;
      item.record["response"] = c.text;
      item.record["final_sql"] = *c.final_sql;
      item.record["cot_token_count"] = c.cot_token_count;
    } else {
      const PreferencePair& p = dpo_pairs[i];
      CandidateLabel chosen = relabel(*item.task, p.chosen);
      CandidateLabel rejected = relabel(*item.task, p.rejected);
      bool rejected_ok = rejected == CandidateLabel::kIncorrect ||
                         (plan_.invalid_as_rejected && rejected == CandidateLabel::kInvalidSql);
      if (chosen != CandidateLabel::kCorrect) {
        item.failure = "dpo record chosen " + record_name(p.chosen) + " no longer re-verifies";
        return;
      }
      if (!rejected_ok) {
        item.failure = "dpo record rejected " + record_name(p.rejected) +
                       " re-labels as " + CandidateLabelName(rejected);
        return;
      }
      if (!p.chosen.final_sql || !p.rejected.final_sql ||
          EditDistance(*p.chosen.final_sql, *p.rejected.final_sql) != p.distance) {
        item.failure = "dpo record for task " + p.task_id + " has a stale distance";
        return;
      }
      item.record["kind"] = "dpo";
      item.record["chosen"] = p.chosen.text;
      item.record["rejected"] = p.rejected.text;
      item.record["chosen_sql"] = *p.chosen.final_sql;
      item.record["rejected_sql"] = *p.rejected.final_sql;
      item.record["chosen_sample_index"] = p.chosen.sample_index;
      item.record["rejected_sample_index"] = p.rejected.sample_index;
      item.record["distance"] = p.distance;
      item.record["strategy"] = PairStrategyName(p.strategy);
    }
  });
  for (const Item& item : items) {
    if (!item.failure.empty()) {
      throw Error(ErrorCode::kVerification, "export aborted: " + item.failure);
    }
  }

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(items[a].task->task_id, items[a].round_order, items[a].rank) <
           std::tie(items[b].task->task_id, items[b].round_order, items[b].rank);
  });
  ExportResult result;
  result.kind = kind;
  for (std::size_t i : order) result.records.push_back(std::move(items[i].record));

  std::string rounds_label;
  Json round_ids = Json::array();
  for (const RoundManifest& m : manifests) {
    rounds_label += (rounds_label.empty() ? "" : "+") + m.round_id;
    round_ids.push_back(m.round_id);
  }
  std::string body = JsonLines(result.records);
  result.sha256 = Sha256Hex(body);
  std::filesystem::path dir = RunDir() / "exports";
  std::filesystem::create_directories(dir);
  std::string stem = ExportKindName(kind) + "_" + rounds_label;
  result.file = dir / (stem + ".jsonl");
  result.sidecar = dir / (stem + ".manifest.json");
  WriteFileAtomic(result.file, body);
  WriteFileAtomic(result.sidecar,
                  Pretty({{"format_version", kExportFormatVersion},
                          {"kind", ExportKindName(kind)},
                          {"rounds", round_ids},
                          {"file", result.file.filename().string()},
                          {"records", result.records.size()},
                          {"bytes", body.size()},
                          {"sha256", result.sha256}}));
  return result;
}

Json Pipeline::TrendReport() {
  std::vector<RoundManifest> chain;
  for (std::size_t i = 0; i < plan_.rounds.size(); ++i) {
    auto m = LoadManifest(i);
    if (!m) break;
    chain.push_back(std::move(*m));
  }
  if (chain.empty()) throw Error(ErrorCode::kPrecondition, "report: no round manifests yet");

  // A synthesis round adopted by an off-policy round is the same data; the
  // off-policy row stands for it.
  std::set<std::string> adopted;
  for (const RoundManifest& m : chain) {
    if (m.source_round) adopted.insert(*m.source_round);
  }
  std::string problem;
  bool chain_ok = ManifestChainValid(chain, &problem);

  Json rows = Json::array();
  std::vector<std::string> labels;
  ChartSeries with_pairs{"tasks_with_pairs", {}}, emitted{"pairs_emitted", {}};
  ChartSeries cot_mean{"mean CoT tokens", {}}, cot_median{"median CoT tokens", {}};
  ChartSeries greedy_ex{"greedy EX%", {}}, greedy_valid{"greedy Valid%", {}};
  bool any_greedy = false;
  std::string csv =
      "round_id,kind,ordinal,n_candidates,n_correct,tasks_with_pairs,pairs_emitted,"
      "mean_cot_tokens,median_cot_tokens,greedy_ex_percent,greedy_valid_percent\n";
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  for (const RoundManifest& m : chain) {
    if (m.kind == RoundKind::kSynthesis && adopted.count(m.round_id)) continue;
    Json row = {{"round_id", m.round_id},
                {"kind", RoundKindName(m.kind)},
                {"ordinal", m.ordinal},
                {"n_candidates", m.TotalCandidates()},
                {"n_correct", m.TotalCorrect()},
                {"tasks_with_pairs", m.pairing ? Json(m.pairing->tasks_with_pairs) : Json(nullptr)},
                {"pairs_emitted", m.pairing ? Json(m.pairing->pairs_emitted) : Json(nullptr)},
                {"mean_cot_tokens", m.mean_cot_tokens},
                {"median_cot_tokens", m.median_cot_tokens},
                {"greedy_ex_percent", nullptr},
                {"greedy_valid_percent", nullptr}};
    if (m.greedy_eval) {
      row["greedy_ex_percent"] = m.greedy_eval->at("ex_percent");
      row["greedy_valid_percent"] = m.greedy_eval->at("valid_percent");
      any_greedy = true;
    }
    rows.push_back(row);
    labels.push_back(m.round_id);
    with_pairs.values.push_back(m.pairing ? static_cast<double>(m.pairing->tasks_with_pairs) : 0);
    emitted.values.push_back(m.pairing ? static_cast<double>(m.pairing->pairs_emitted) : 0);
    cot_mean.values.push_back(m.mean_cot_tokens);
    cot_median.values.push_back(m.median_cot_tokens);
    double ex = m.greedy_eval ? m.greedy_eval->at("ex_percent").get<double>() : 0;
    double valid = m.greedy_eval ? m.greedy_eval->at("valid_percent").get<double>() : 0;
    greedy_ex.values.push_back(ex);
    greedy_valid.values.push_back(valid);
    csv += m.round_id + "," + RoundKindName(m.kind) + "," + std::to_string(m.ordinal) + "," +
           std::to_string(m.TotalCandidates()) + "," + std::to_string(m.TotalCorrect()) + "," +
           (m.pairing ? std::to_string(m.pairing->tasks_with_pairs) : "") + "," +
           (m.pairing ? std::to_string(m.pairing->pairs_emitted) : "") + "," +
           num(m.mean_cot_tokens) + "," + num(m.median_cot_tokens) + "," +
           (m.greedy_eval ? num(ex) : "") + "," + (m.greedy_eval ? num(valid) : "") + "\n";
  }

  std::filesystem::path dir = RunDir() / "reports";
  Json files = {{"json", (dir / "trend.json").string()},
                {"csv", (dir / "trend.csv").string()},
                {"pairs_svg", (dir / "trend_pairs.svg").string()},
                {"cot_svg", (dir / "trend_cot.svg").string()}};
  if (any_greedy) files["ex_svg"] = (dir / "trend_ex.svg").string();
  Json report = {{"rows", rows}, {"chain_valid", chain_ok}, {"files", files}};
  if (!chain_ok) report["chain_problem"] = problem;
  if (options_.dry_run) return report;

  std::filesystem::create_directories(dir);
  Json document = report;
  document.erase("files");
  WriteFileAtomic(dir / "trend.json", Pretty(document));
  WriteFileAtomic(dir / "trend.csv", csv);
  WriteFileAtomic(dir / "trend_pairs.svg",
                  LineChartSvg("Preference pairs per round", labels, {with_pairs, emitted}));
  WriteFileAtomic(dir / "trend_cot.svg",
                  LineChartSvg("CoT tokens per round", labels, {cot_mean, cot_median}));
  if (any_greedy) {
    WriteFileAtomic(dir / "trend_ex.svg",
                    LineChartSvg("Greedy evaluation", labels, {greedy_ex, greedy_valid}));
  }
  return report;
}

EvalReport Pipeline::EvaluatePredictions(const std::filesystem::path& predictions_path,
                                         PredictionKind kind, std::optional<Split> split) {
  auto predictions = LoadPredictions(predictions_path);
  GoldReport gold = Validate();
  EvalOptions options;
  options.kind = kind;
  options.extract = ExtractOptionsForPlan();
  options.split = split;
  EvalReport report = Evaluate(predictions, dataset(), executor(), gold, options);
  if (!options_.dry_run) {
    std::filesystem::path dir = RunDir() / "reports";
    std::filesystem::create_directories(dir);
    WriteFileAtomic(dir / ("eval_" + predictions_path.stem().string() + ".json"),
                    Pretty(report.ToJson()));
  }
  return report;
}

EvalReport Pipeline::GreedyEval(std::size_t round_index) {
  CheckRoundIndex(round_index);
  std::optional<RoundManifest> manifest = LoadManifest(round_index);
  if (!manifest) {
    throw Error(ErrorCode::kPrecondition, RoundId(round_index) + " has not been generated");
  }
  if (options_.dry_run) {
    throw Error(ErrorCode::kInvalidArgument, "GreedyEval called on a dry-run pipeline");
  }
  const std::string started = IsoTimestampNow();
  SamplingConfig sampling = plan_.SamplingForRound(round_index);
  sampling.n_samples = 1;
  sampling.temperature = 0.0;
  const std::string scope = "eval@" + manifest->round_id;

  GoldReport gold = Validate();
  const Dataset& data = dataset();
  std::vector<RenderedPrompt> prompts;
  for (const Task& task : data.tasks) prompts.push_back(PromptFor(task, false, round_index));
  LlmClient client(sampling, store_.get());
  bool all_cached = true;
  for (std::size_t i = 0; i < data.tasks.size() && all_cached; ++i) {
    all_cached = client.FullyCached(prompts[i], scope, data.tasks[i].task_id);
  }
  if (!all_cached && options_.probe_endpoint) {
    HealthReport health = client.Probe();
    if (!health.healthy) {
      throw Error(ErrorCode::kEndpoint,
                  "endpoint " + sampling.endpoint_url + " is unhealthy: " + health.error);
    }
  }

  // One request per task, so the per-task fan-out is bounded by the limit.
  std::vector<std::optional<std::string>> outputs(data.tasks.size());
  ParallelFor(data.tasks.size(), sampling.concurrency_limit, [&](std::size_t i) {
    SampleResult r = client.SampleCandidates(prompts[i], scope, data.tasks[i].task_id);
    if (!r.completions.empty()) outputs[i] = r.completions.front().text;
  });
  std::map<std::string, std::string> predictions;
  for (std::size_t i = 0; i < data.tasks.size(); ++i) {
    if (outputs[i]) predictions.emplace(data.tasks[i].task_id, *outputs[i]);
  }
  EvalOptions options;
  options.kind = PredictionKind::kCompletion;
  options.extract = ExtractOptionsForPlan();
  EvalReport report = Evaluate(predictions, data, executor(), gold, options);

  std::filesystem::path dir = RunDir() / "reports";
  std::filesystem::create_directories(dir);
  WriteFileAtomic(dir / ("eval_" + manifest->round_id + ".json"), Pretty(report.ToJson()));
  manifest->greedy_eval = Json{{"n_tasks", report.n_tasks},
                               {"ex_percent", report.ex_percent},
                               {"valid_percent", report.valid_percent},
                               {"model_name", sampling.model_name}};
  WriteManifest(*manifest, {{"eval", {{"started", started}, {"finished", IsoTimestampNow()}}}});
  return report;
}

// ---------------------------------------------------------------------------
// Dry-run descriptions

Json Pipeline::DescribeValidate() {
  const Dataset& data = dataset();
  return {{"verb", "validate"},
          {"dry_run", true},
          {"actions",
           {"execute " + std::to_string(data.tasks.size()) + " gold queries across " +
                std::to_string(data.databases.size()) + " database(s)",
            "write " + (RunDir() / "validation.json").string()}}};
}

Json Pipeline::DescribeGenerate(std::size_t round_index, bool resume) {
  CheckRoundIndex(round_index);
  const RoundSpec& spec = plan_.rounds[round_index];
  Json actions = Json::array();
  Json out = {{"verb", "generate"},
              {"dry_run", true},
              {"round_id", RoundId(round_index)},
              {"kind", RoundKindName(spec.kind)}};
  if (LoadManifest(round_index) && !resume) {
    actions.push_back(RoundId(round_index) + " already generated; nothing to do without --resume");
    out["actions"] = actions;
    return out;
  }
  if (round_index > 0 && !LoadManifest(round_index - 1)) {
    actions.push_back("would fail: " + RoundId(round_index - 1) + " has not been generated");
    out["actions"] = actions;
    return out;
  }
  if (spec.kind == RoundKind::kOffPolicy) {
    actions.push_back("adopt the candidates of the preceding synthesis round");
    actions.push_back("write " + (RoundDir(round_index) / "manifest.json").string());
    out["actions"] = actions;
    return out;
  }
  SamplingConfig sampling = plan_.SamplingForRound(round_index);
  GoldReport gold = Validate();
  LlmClient client(sampling, store_.get());
  std::size_t tasks = 0, cached_tasks = 0;
  for (const Task& task : dataset().tasks) {
    if (gold.IsQuarantined(task.task_id)) continue;
    ++tasks;
    RenderedPrompt prompt = PromptFor(task, spec.kind == RoundKind::kSynthesis, round_index);
    cached_tasks += client.FullyCached(prompt, RoundId(round_index), task.task_id);
  }
  actions.push_back("render " + std::to_string(tasks) + " " +
                    (spec.kind == RoundKind::kSynthesis ? "few-shot" : "zero-shot") + " " +
                    PromptStyleName(plan_.style) + " prompts (" +
                    std::to_string(gold.quarantined.size()) + " task(s) quarantined)");
  actions.push_back("sample " + std::to_string(sampling.n_samples) + " completion(s) per task from " +
                    sampling.model_name + " at " + sampling.endpoint_url + "; " +
                    std::to_string(cached_tasks) + " task(s) fully cached");
  actions.push_back("extract, execute and label every completion");
  actions.push_back("write " + (RoundDir(round_index) / "manifest.json").string());
  out["actions"] = actions;
  out["tasks"] = tasks;
  out["tasks_fully_cached"] = cached_tasks;
  return out;
}

Json Pipeline::DescribePair(std::size_t round_index,
                            std::optional<PairStrategy> strategy_override) {
  CheckRoundIndex(round_index);
  const RoundSpec& spec = plan_.rounds[round_index];
  PairStrategy strategy =
      strategy_override.value_or(spec.strategy.value_or(DefaultStrategy(spec.kind)));
  Json actions = Json::array();
  auto manifest = LoadManifest(round_index);
  if (!manifest) {
    actions.push_back("would fail: " + RoundId(round_index) + " has not been generated");
  } else {
    actions.push_back("build win/lose pools from " + std::to_string(manifest->TotalCandidates()) +
                      " candidate(s) over " + std::to_string(manifest->tallies.size()) + " task(s)");
    actions.push_back("select up to " + std::to_string(spec.k_per_task) + " pair(s) per task with " +
                      PairStrategyName(strategy));
    actions.push_back("write " + (RoundDir(round_index) / "pairs.jsonl").string() +
                      " and update the manifest");
  }
  return {{"verb", "pair"},
          {"dry_run", true},
          {"round_id", RoundId(round_index)},
          {"strategy", PairStrategyName(strategy)},
          {"actions", actions}};
}

Json Pipeline::DescribeExport(const std::vector<std::size_t>& round_indices, ExportKind kind) {
  Json actions = Json::array();
  std::string label;
  for (std::size_t index : round_indices) {
    CheckRoundIndex(index);
    label += (label.empty() ? "" : "+") + RoundId(index);
    auto m = LoadManifest(index);
    if (!m) {
      actions.push_back("would fail: " + RoundId(index) + " has not been generated");
    } else if (kind == ExportKind::kSft) {
      actions.push_back("re-verify and export " + std::to_string(m->TotalCorrect()) +
                        " correct candidate(s) from " + m->round_id);
    } else if (!m->pairing) {
      actions.push_back("would fail: " + m->round_id + " has not been paired");
    } else {
      actions.push_back("re-verify and export " + std::to_string(m->pairing->pairs_emitted) +
                        " pair(s) from " + m->round_id);
    }
  }
  std::filesystem::path file = RunDir() / "exports" / (ExportKindName(kind) + "_" + label + ".jsonl");
  actions.push_back("write " + file.string() + " and its checksum sidecar");
  return {{"verb", "export"}, {"dry_run", true}, {"kind", ExportKindName(kind)}, {"actions", actions}};
}

Json Pipeline::DescribeReport() {
  std::size_t manifests = 0;
  for (std::size_t i = 0; i < plan_.rounds.size() && LoadManifest(i); ++i) ++manifests;
  return {{"verb", "report"},
          {"dry_run", true},
          {"actions",
           {"summarize " + std::to_string(manifests) + " round manifest(s)",
            "write trend.json, trend.csv and SVG charts under " + (RunDir() / "reports").string()}}};
}

}  // namespace sqlpref
