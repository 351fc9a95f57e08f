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

#include "sqlpref/sqlpref.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "core/evaluation.hpp"
#include "core/extract.hpp"
#include "core/orchestrator.hpp"
#include "core/pairs.hpp"
#include "core/plan.hpp"

struct sqlpref_run {
  std::unique_ptr<sqlpref::Pipeline> pipeline;
  bool dry_run = false;
};

namespace {

using sqlpref::Error;
using sqlpref::ErrorCode;
using sqlpref::Json;

thread_local std::string g_last_error;

sqlpref_status StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return SQLPREF_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return SQLPREF_ERR_IO;
    case ErrorCode::kPlan: return SQLPREF_ERR_PLAN;
    case ErrorCode::kDataset: return SQLPREF_ERR_DATASET;
    case ErrorCode::kIntegrity: return SQLPREF_ERR_INTEGRITY;
    case ErrorCode::kEndpoint: return SQLPREF_ERR_ENDPOINT;
    case ErrorCode::kVerification: return SQLPREF_ERR_VERIFICATION;
    case ErrorCode::kLocked: return SQLPREF_ERR_LOCKED;
    case ErrorCode::kPrecondition: return SQLPREF_ERR_PRECONDITION;
    case ErrorCode::kInternal: return SQLPREF_ERR_INTERNAL;
  }
  return SQLPREF_ERR_INTERNAL;
}

sqlpref_status Fail(sqlpref_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, translating every exception into a status and last-error text.
template <typename Fn>
sqlpref_status Guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return SQLPREF_OK;
  } catch (const Error& e) {
    return Fail(StatusFor(e.code()), e.what());
  } catch (const Json::exception& e) {
    return Fail(SQLPREF_ERR_INVALID_ARGUMENT, std::string("JSON error: ") + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return Fail(SQLPREF_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return Fail(SQLPREF_ERR_INTERNAL, e.what());
  } catch (...) {
    return Fail(SQLPREF_ERR_INTERNAL, "unknown error");
  }
}

char* Duplicate(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

void Emit(const Json& json, char** out_json) {
  if (out_json) *out_json = Duplicate(json.dump(2));
}

void Require(const void* ptr, const char* what) {
  if (!ptr) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

Json ManifestOutput(sqlpref::Pipeline& pipeline, const sqlpref::RoundManifest& m) {
  return {{"manifest", m.ToJson()},
          {"manifest_path", (pipeline.RoundDir(m.index) / "manifest.json").string()}};
}

}  // namespace

extern "C" {

const char* sqlpref_version(void) { return "0.3.0"; }

const char* sqlpref_status_name(sqlpref_status status) {
  switch (status) {
    case SQLPREF_OK: return "ok";
    case SQLPREF_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SQLPREF_ERR_IO: return "io";
    case SQLPREF_ERR_PLAN: return "plan";
    case SQLPREF_ERR_DATASET: return "dataset";
    case SQLPREF_ERR_INTEGRITY: return "integrity";
    case SQLPREF_ERR_ENDPOINT: return "endpoint";
    case SQLPREF_ERR_VERIFICATION: return "verification";
    case SQLPREF_ERR_LOCKED: return "locked";
    case SQLPREF_ERR_PRECONDITION: return "precondition";
    case SQLPREF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* sqlpref_last_error(void) { return g_last_error.c_str(); }

void sqlpref_free(char* ptr) { std::free(ptr); }

void sqlpref_set_quiet(int quiet) { sqlpref::SetLogQuiet(quiet != 0); }

sqlpref_status sqlpref_run_open(const char* plan_path, const char* overrides_json, int dry_run,
                                sqlpref_run** out_run) {
  return Guard([&] {
    Require(plan_path, "plan_path");
    Require(out_run, "out_run");
    *out_run = nullptr;
    Json overrides = Json::object();
    if (overrides_json && *overrides_json) {
      try {
        overrides = Json::parse(overrides_json);
      } catch (const Json::exception& e) {
        throw Error(ErrorCode::kInvalidArgument, std::string("overrides: ") + e.what());
      }
      if (!overrides.is_object()) {
        throw Error(ErrorCode::kInvalidArgument, "overrides must be a JSON object");
      }
    }
    sqlpref::RunPlan plan = sqlpref::RunPlan::Load(plan_path, overrides);
    auto run = std::make_unique<sqlpref_run>();
    run->dry_run = dry_run != 0;
    sqlpref::PipelineOptions options;
    options.dry_run = run->dry_run;
    run->pipeline = std::make_unique<sqlpref::Pipeline>(std::move(plan), options);
    *out_run = run.release();
  });
}

void sqlpref_run_close(sqlpref_run* run) { delete run; }

sqlpref_status sqlpref_run_plan(sqlpref_run* run, char** out_json) {
  return Guard([&] {
    Require(run, "run");
    Emit(run->pipeline->plan().ToJson(), out_json);
  });
}

sqlpref_status sqlpref_validate(sqlpref_run* run, char** out_json) {
  return Guard([&] {
    Require(run, "run");
    if (run->dry_run) {
      Emit(run->pipeline->DescribeValidate(), out_json);
      return;
    }
    Json out = run->pipeline->Validate().ToJson();
    out["report_path"] = (run->pipeline->RunDir() / "validation.json").string();
    Emit(out, out_json);
  });
}

sqlpref_status sqlpref_generate(sqlpref_run* run, size_t round_index, int resume,
                                char** out_json) {
  return Guard([&] {
    Require(run, "run");
    if (run->dry_run) {
      Emit(run->pipeline->DescribeGenerate(round_index, resume != 0), out_json);
      return;
    }
    sqlpref::RoundManifest m = run->pipeline->Generate(round_index, resume != 0);
    Emit(ManifestOutput(*run->pipeline, m), out_json);
  });
}

sqlpref_status sqlpref_pair(sqlpref_run* run, size_t round_index, const char* strategy,
                            char** out_json) {
  return Guard([&] {
    Require(run, "run");
    std::optional<sqlpref::PairStrategy> override;
    if (strategy && *strategy) override = sqlpref::ParsePairStrategy(strategy);
    if (run->dry_run) {
      Emit(run->pipeline->DescribePair(round_index, override), out_json);
      return;
    }
    sqlpref::PairResult result = run->pipeline->Pair(round_index, override);
    Json out = ManifestOutput(*run->pipeline, result.manifest);
    out["pair_file"] = result.pair_file.string();
    out["strategy"] = sqlpref::PairStrategyName(result.selection.strategy);
    out["pairs_emitted"] = result.selection.tally.pairs_emitted;
    out["tasks_with_pairs"] = result.selection.tally.tasks_with_pairs;
    Emit(out, out_json);
  });
}

sqlpref_status sqlpref_export(sqlpref_run* run, const size_t* round_indices, size_t n_rounds,
                              const char* kind, char** out_json) {
  return Guard([&] {
    Require(run, "run");
    Require(kind, "kind");
    if (n_rounds > 0) Require(round_indices, "round_indices");
    sqlpref::ExportKind export_kind = sqlpref::ParseExportKind(kind);
    std::vector<std::size_t> rounds(round_indices, round_indices + n_rounds);
    if (run->dry_run) {
      Emit(run->pipeline->DescribeExport(rounds, export_kind), out_json);
      return;
    }
    sqlpref::ExportResult result = run->pipeline->Export(rounds, export_kind);
    Emit({{"kind", sqlpref::ExportKindName(result.kind)},
          {"records", result.records.size()},
          {"file", result.file.string()},
          {"sidecar", result.sidecar.string()},
          {"sha256", result.sha256}},
         out_json);
  });
}

sqlpref_status sqlpref_eval_predictions(sqlpref_run* run, const char* predictions_path,
                                        const char* kind, const char* split, char** out_json) {
  return Guard([&] {
    Require(run, "run");
    Require(predictions_path, "predictions_path");
    sqlpref::PredictionKind prediction_kind =
        kind && *kind ? sqlpref::ParsePredictionKind(kind) : sqlpref::PredictionKind::kAuto;
    std::optional<sqlpref::Split> which;
    if (split && *split) which = sqlpref::ParseSplit(split);
    if (run->dry_run) {
      auto predictions = sqlpref::LoadPredictions(predictions_path);
      Emit({{"verb", "eval"},
            {"dry_run", true},
            {"actions",
             {"score " + std::to_string(predictions.size()) + " prediction(s) from " +
                  std::string(predictions_path),
              "write a report under " + (run->pipeline->RunDir() / "reports").string()}}},
           out_json);
      return;
    }
    sqlpref::EvalReport report =
        run->pipeline->EvaluatePredictions(predictions_path, prediction_kind, which);
    Json out = report.ToJson();
    out["table"] = report.ToTable();
    Emit(out, out_json);
  });
}

sqlpref_status sqlpref_eval_greedy(sqlpref_run* run, size_t round_index, char** out_json) {
  return Guard([&] {
    Require(run, "run");
    if (run->dry_run) {
      Emit({{"verb", "eval"},
            {"dry_run", true},
            {"actions",
             {"sample one temperature-0 completion per task from the endpoint of " +
                  sqlpref::Pipeline::RoundId(round_index),
              "score the completions and attach the result to its manifest"}}},
           out_json);
      return;
    }
    sqlpref::EvalReport report = run->pipeline->GreedyEval(round_index);
    Json out = report.ToJson();
    out["table"] = report.ToTable();
    Emit(out, out_json);
  });
}

sqlpref_status sqlpref_report(sqlpref_run* run, char** out_json) {
  return Guard([&] {
    Require(run, "run");
    if (run->dry_run) {
      Emit(run->pipeline->DescribeReport(), out_json);
      return;
    }
    Emit(run->pipeline->TrendReport(), out_json);
  });
}

sqlpref_status sqlpref_extract_final_sql(const char* completion, int bare_sql_fallback,
                                         char** out_json) {
  return Guard([&] {
    Require(completion, "completion");
    sqlpref::ExtractOptions options;
    options.bare_sql_fallback = bare_sql_fallback != 0;
    sqlpref::ExtractionResult r = sqlpref::ExtractFinalSql(completion, options);
    Emit({{"status", sqlpref::ExtractionStatusName(r.status)},
          {"final_sql", r.final_sql ? Json(*r.final_sql) : Json(nullptr)},
          {"cot_text", r.cot_text},
          {"cot_token_count", r.cot_token_count}},
         out_json);
  });
}

sqlpref_status sqlpref_edit_distance(const char* a, const char* b, size_t* out_distance) {
  return Guard([&] {
    Require(a, "a");
    Require(b, "b");
    Require(out_distance, "out_distance");
    *out_distance = sqlpref::EditDistance(a, b);
  });
}

sqlpref_status sqlpref_execute(const char* db_path, const char* sql, double timeout_s,
                               double float_tolerance, char** out_json) {
  return Guard([&] {
    Require(db_path, "db_path");
    Require(sql, "sql");
    sqlpref::ExecutionOptions options;
    if (timeout_s > 0) {
      options.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
    }
    if (float_tolerance > 0) options.normalization.float_tolerance = float_tolerance;
    sqlpref::CanonicalCell(0.5, options.normalization);
    Json out = sqlpref::ExecuteSql(db_path, sql, options).ToJson();
    Emit(out, out_json);
  });
}

sqlpref_status sqlpref_compare(const char* db_path, const char* candidate_sql,
                               const char* gold_sql, const char* mode, int* out_equivalent) {
  return Guard([&] {
    Require(db_path, "db_path");
    Require(candidate_sql, "candidate_sql");
    Require(gold_sql, "gold_sql");
    Require(out_equivalent, "out_equivalent");
    sqlpref::EquivalenceMode m =
        mode && *mode ? sqlpref::ParseEquivalenceMode(mode) : sqlpref::EquivalenceMode::kSet;
    auto candidate = sqlpref::ExecuteSql(db_path, candidate_sql);
    auto gold = sqlpref::ExecuteSql(db_path, gold_sql);
    *out_equivalent = sqlpref::CompareResults(candidate, gold, m).equivalent ? 1 : 0;
  });
}

}  // extern "C"
