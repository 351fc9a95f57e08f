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

// Sandboxed query execution and result equivalence.
//
// Queries run on read-only connections behind three independent guards: a
// leading-keyword check, an authorizer that denies every write/DDL/attach
// action, and sqlite3_stmt_readonly(). A progress handler enforces the
// wall-clock timeout.
//
// Results are reduced to canonical row strings. Numeric cells (integer or
// real) are quantized onto a grid of `float_tolerance`, so 3, 3.0 and
// 2.9999999999 share one canonical form; text is byte-exact; NULL is its own
// atom. Equivalence is equality of the sorted (set mode: deduplicated)
// canonical row lists, which is what the digests hash.

#ifndef SQLPREF_CORE_EXECUTOR_HPP_
#define SQLPREF_CORE_EXECUTOR_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "core/dataset.hpp"
#include "core/extract.hpp"
#include "core/store.hpp"

namespace sqlpref {

enum class ExecStatus { kOk, kSyntaxError, kRuntimeError, kTimeout, kNonSelectRejected };
enum class EquivalenceMode { kSet, kMultiset };

std::string ExecStatusName(ExecStatus status);
ExecStatus ParseExecStatus(const std::string& name);
std::string EquivalenceModeName(EquivalenceMode mode);
EquivalenceMode ParseEquivalenceMode(const std::string& name);

struct Blob {
  std::string bytes;
  bool operator==(const Blob&) const = default;
};

using Cell = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;
using Row = std::vector<Cell>;

struct NormalizationConfig {
  // Must be a power of ten in [1e-12, 1].
  double float_tolerance = 1e-6;
};

std::string CanonicalCell(const Cell& cell, const NormalizationConfig& config);
std::string CanonicalRow(const Row& row, const NormalizationConfig& config);

struct ExecutionOutcome {
  ExecStatus status = ExecStatus::kRuntimeError;
  // Full rows for fresh executions; a bounded preview when restored from the
  // store (rows_truncated is then set if rows were dropped).
  std::vector<Row> rows;
  bool rows_truncated = false;
  std::size_t row_count = 0;
  std::size_t column_count = 0;
  double duration_ms = 0.0;
  std::string error_message;
  std::string digest_set;
  std::string digest_multiset;
  // LIMIT without ORDER BY: result depends on scan order.
  bool order_unstable = false;

  bool ok() const { return status == ExecStatus::kOk; }
  const std::string& Digest(EquivalenceMode mode) const {
    return mode == EquivalenceMode::kSet ? digest_set : digest_multiset;
  }
  Json ToJson(std::size_t max_rows = 50) const;
  static ExecutionOutcome FromJson(const Json& json);
};

enum class VerdictReason { kMatch, kRowSetMismatch, kCandidateFailed, kGoldFailed };
std::string VerdictReasonName(VerdictReason reason);

struct EquivalenceVerdict {
  bool equivalent = false;
  VerdictReason reason = VerdictReason::kCandidateFailed;
  EquivalenceMode mode = EquivalenceMode::kSet;
};

EquivalenceVerdict CompareResults(const ExecutionOutcome& candidate, const ExecutionOutcome& gold,
                                  EquivalenceMode mode);

struct ExecutionOptions {
  std::chrono::milliseconds timeout{30000};
  NormalizationConfig normalization;
};

// Executes one statement against the file at `db_path` on a fresh read-only
// connection. Never throws for SQL-level failures; they are encoded in the
// returned status.
ExecutionOutcome ExecuteSql(const std::filesystem::path& db_path, const std::string& sql,
                            const ExecutionOptions& options = {});

struct ExecutorConfig {
  std::chrono::milliseconds timeout{30000};
  EquivalenceMode mode = EquivalenceMode::kSet;
  NormalizationConfig normalization;
  std::size_t workers = 8;

  Json ToJson() const;
};

enum class CandidateLabel { kCorrect, kIncorrect, kInvalidSql, kExtractionFailed };
std::string CandidateLabelName(CandidateLabel label);
CandidateLabel ParseCandidateLabel(const std::string& name);

struct LabelResult {
  CandidateLabel label = CandidateLabel::kExtractionFailed;
  // Parses and executes without error.
  bool valid = false;
  EquivalenceVerdict verdict;
  std::optional<ExecutionOutcome> outcome;
};

struct GoldReport {
  std::size_t n_tasks = 0;
  std::map<std::string, ExecutionOutcome> outcomes;  // by task_id, ok or not
  std::vector<std::string> quarantined;              // sorted task ids
  std::size_t executions = 0;
  std::size_t cache_hits = 0;

  bool IsQuarantined(const std::string& task_id) const;
  Json ToJson() const;
};

// Execution with per-thread connection reuse and an outcome cache keyed by
// (database file hash, SQL, timeout, normalization). With a store attached
// the cache is durable.
class Executor {
 public:
  explicit Executor(ExecutorConfig config, Store* store = nullptr);

  ExecutionOutcome Execute(const DatabaseRef& db, const std::string& sql);
  // Always runs the query; used for re-verification.
  ExecutionOutcome ExecuteFresh(const DatabaseRef& db, const std::string& sql);

  struct Job {
    const DatabaseRef* db;
    std::string sql;
  };
  // Parallel over config.workers threads; results in job order.
  std::vector<ExecutionOutcome> ExecuteBatch(const std::vector<Job>& jobs);

  LabelResult Label(const Task& task, const DatabaseRef& db, const ExtractionResult& extraction,
                    const ExecutionOutcome& gold_outcome);
  LabelResult LabelFresh(const Task& task, const DatabaseRef& db,
                         const ExtractionResult& extraction,
                         const ExecutionOutcome& gold_outcome);

  GoldReport ValidateGold(const Dataset& dataset);

  std::string OutcomeKey(const DatabaseRef& db, const std::string& sql) const;
  const ExecutorConfig& config() const { return config_; }

  std::size_t executions() const { return executions_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }

 private:
  ExecutionOutcome Run(const DatabaseRef& db, const std::string& sql);
  LabelResult LabelWith(const ExtractionResult& extraction, const ExecutionOutcome& gold,
                        const std::function<ExecutionOutcome(const std::string&)>& exec) const;

  ExecutorConfig config_;
  Store* store_;
  std::mutex memo_mutex_;
  std::map<std::string, ExecutionOutcome> memo_;
  std::atomic<std::size_t> executions_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace sqlpref

#endif  // SQLPREF_CORE_EXECUTOR_HPP_
