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

#include "core/executor.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <unordered_map>

#include "core/sqlite_util.hpp"

namespace sqlpref {
namespace {

using Clock = std::chrono::steady_clock;

// Per-connection sandbox state shared with the sqlite callbacks.
struct Connection {
  SqliteHandle db;
  std::string file_hash;
  bool denied = false;
  Clock::time_point deadline;
};

int Authorize(void* user, int action, const char* arg1, const char* arg2, const char*,
              const char*) {
  auto* conn = static_cast<Connection*>(user);
  switch (action) {
    case SQLITE_SELECT:
    case SQLITE_READ:
    case SQLITE_RECURSIVE:
      return SQLITE_OK;
    case SQLITE_FUNCTION: {
      std::string name = ToLower(arg2 ? arg2 : "");
      if (name == "load_extension" || name == "readfile" || name == "writefile" ||
          name == "edit" || name == "fts3_tokenizer") {
        conn->denied = true;
        return SQLITE_DENY;
      }
      return SQLITE_OK;
    }
    default:
      (void)arg1;
      conn->denied = true;
      return SQLITE_DENY;
  }
}

int CheckDeadline(void* user) {
  auto* conn = static_cast<Connection*>(user);
  return Clock::now() > conn->deadline ? 1 : 0;
}

std::unique_ptr<Connection> Connect(const std::filesystem::path& path, std::string* error) {
  auto conn = std::make_unique<Connection>();
  conn->db = OpenReadOnly(path, error);
  if (!conn->db) return nullptr;
  sqlite3_set_authorizer(conn->db.get(), &Authorize, conn.get());
  return conn;
}

// Skips whitespace, ';' separators and SQL comments starting at `pos`.
std::size_t SkipTrivia(const std::string& sql, std::size_t pos, bool skip_semicolons) {
  while (pos < sql.size()) {
    char c = sql[pos];
    if (std::isspace(static_cast<unsigned char>(c)) || (skip_semicolons && c == ';')) {
      ++pos;
    } else if (sql.compare(pos, 2, "--") == 0) {
      std::size_t nl = sql.find('\n', pos);
      pos = nl == std::string::npos ? sql.size() : nl + 1;
    } else if (sql.compare(pos, 2, "/*") == 0) {
      std::size_t end = sql.find("*/", pos + 2);
      pos = end == std::string::npos ? sql.size() : end + 2;
    } else {
      break;
    }
  }
  return pos;
}

std::string LeadingKeyword(const std::string& sql) {
  std::size_t pos = SkipTrivia(sql, 0, false);
  std::string word;
  while (pos < sql.size() && std::isalpha(static_cast<unsigned char>(sql[pos]))) {
    word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(sql[pos]))));
    ++pos;
  }
  return word;
}

bool IsWriteKeyword(const std::string& keyword) {
  static const std::set<std::string> kWrites = {
      "INSERT", "UPDATE", "DELETE", "REPLACE", "UPSERT", "DROP", "CREATE",
      "ALTER", "ATTACH", "DETACH", "PRAGMA", "VACUUM", "REINDEX", "BEGIN",
      "COMMIT", "END", "ROLLBACK", "SAVEPOINT", "RELEASE", "ANALYZE"};
  return kWrites.count(keyword) > 0;
}

bool LooksLikeSyntaxError(const std::string& message) {
  return message.find("syntax error") != std::string::npos ||
         message.find("incomplete input") != std::string::npos ||
         message.find("unrecognized token") != std::string::npos;
}

bool HasWord(const std::string& upper, const std::string& word) {
  std::size_t pos = 0;
  while ((pos = upper.find(word, pos)) != std::string::npos) {
    bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(upper[pos - 1]));
    std::size_t end = pos + word.size();
    bool right = end >= upper.size() || !std::isalnum(static_cast<unsigned char>(upper[end]));
    if (left && right) return true;
    pos = end;
  }
  return false;
}

bool OrderUnstable(const std::string& sql) {
  std::string upper = sql;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return HasWord(upper, "LIMIT") && !HasWord(CollapseWhitespace(upper), "ORDER BY");
}

std::string Hex(const std::string& bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 0xf]);
  }
  return out;
}

std::string Unhex(const std::string& hex) {
  std::string out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

int ToleranceDecimals(double tolerance) {
  double k = -std::log10(tolerance);
  int decimals = static_cast<int>(std::lround(k));
  if (!(tolerance > 0) || decimals < 0 || decimals > 12 || std::fabs(k - decimals) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument,
                "float tolerance must be a power of ten in [1e-12, 1]");
  }
  return decimals;
}

std::string Digest(const char* tag, const std::vector<std::string>& rows) {
  std::string buffer = tag;
  buffer.push_back('\n');
  for (const auto& row : rows) {
    buffer += std::to_string(row.size());
    buffer.push_back(':');
    buffer += row;
  }
  return Sha256Hex(buffer);
}

void FinalizeDigests(ExecutionOutcome& outcome, const NormalizationConfig& config) {
  std::vector<std::string> canonical;
  canonical.reserve(outcome.rows.size());
  for (const Row& row : outcome.rows) canonical.push_back(CanonicalRow(row, config));
  std::sort(canonical.begin(), canonical.end());
  outcome.digest_multiset = Digest("multiset", canonical);
  canonical.erase(std::unique(canonical.begin(), canonical.end()), canonical.end());
  outcome.digest_set = Digest("set", canonical);
}

Cell ReadCell(sqlite3_stmt* stmt, int col) {
  switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(stmt, col));
    case SQLITE_FLOAT: return sqlite3_column_double(stmt, col);
    case SQLITE_TEXT: {
      const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, col));
      return std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt, col)));
    }
    case SQLITE_BLOB: {
      const auto* data = static_cast<const char*>(sqlite3_column_blob(stmt, col));
      int size = sqlite3_column_bytes(stmt, col);
      return Blob{data ? std::string(data, static_cast<std::size_t>(size)) : std::string()};
    }
    default: return std::monostate{};
  }
}

ExecutionOutcome RunOn(Connection& conn, const std::string& sql, const ExecutionOptions& options) {
  const auto start = Clock::now();
  ExecutionOutcome outcome;
  auto finish = [&](ExecStatus status, std::string message) {
    outcome.status = status;
    outcome.error_message = std::move(message);
    outcome.rows.clear();
    outcome.row_count = 0;
    outcome.duration_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return outcome;
  };

  if (Trim(sql).empty()) return finish(ExecStatus::kSyntaxError, "empty statement");
  std::string keyword = LeadingKeyword(sql);
  if (IsWriteKeyword(keyword)) {
    return finish(ExecStatus::kNonSelectRejected, keyword + " statements are not allowed");
  }

  conn.denied = false;
  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(conn.db.get(), sql.c_str(), static_cast<int>(sql.size()), &raw,
                              &tail);
  StmtHandle stmt(raw);
  if (rc != SQLITE_OK) {
    std::string message = sqlite3_errmsg(conn.db.get());
    if (conn.denied || (rc & 0xff) == SQLITE_AUTH) {
      return finish(ExecStatus::kNonSelectRejected, "statement denied by sandbox: " + message);
    }
    return finish(LooksLikeSyntaxError(message) ? ExecStatus::kSyntaxError
                                                : ExecStatus::kRuntimeError,
                  message);
  }
  if (!stmt) return finish(ExecStatus::kSyntaxError, "empty statement");
  std::size_t tail_offset = tail ? static_cast<std::size_t>(tail - sql.c_str()) : sql.size();
  if (SkipTrivia(sql, tail_offset, true) < sql.size()) {
    return finish(ExecStatus::kNonSelectRejected, "multiple statements are not allowed");
  }
  if (!sqlite3_stmt_readonly(stmt.get())) {
    return finish(ExecStatus::kNonSelectRejected, "only read queries are allowed");
  }

  conn.deadline = start + options.timeout;
  sqlite3_progress_handler(conn.db.get(), 1000, &CheckDeadline, &conn);
  outcome.column_count = static_cast<std::size_t>(sqlite3_column_count(stmt.get()));
  int columns = static_cast<int>(outcome.column_count);
  while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
    Row row;
    row.reserve(outcome.column_count);
    for (int c = 0; c < columns; ++c) row.push_back(ReadCell(stmt.get(), c));
    outcome.rows.push_back(std::move(row));
  }
  sqlite3_progress_handler(conn.db.get(), 0, nullptr, nullptr);
  if (rc != SQLITE_DONE) {
    int primary = rc & 0xff;
    std::string message = sqlite3_errmsg(conn.db.get());
    if (primary == SQLITE_INTERRUPT) {
      return finish(ExecStatus::kTimeout,
                    "query exceeded " + std::to_string(options.timeout.count()) + " ms");
    }
    if (primary == SQLITE_READONLY || primary == SQLITE_AUTH) {
      return finish(ExecStatus::kNonSelectRejected, message);
    }
    return finish(ExecStatus::kRuntimeError, message);
  }

  outcome.status = ExecStatus::kOk;
  outcome.row_count = outcome.rows.size();
  outcome.order_unstable = OrderUnstable(sql);
  FinalizeDigests(outcome, options.normalization);
  outcome.duration_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return outcome;
}

Json CellToJson(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, Blob>) {
          return Json{{"blob", Hex(v.bytes)}};
        } else {
          return v;
        }
      },
      cell);
}

Cell CellFromJson(const Json& json) {
  if (json.is_null()) return std::monostate{};
  if (json.is_number_integer()) return json.get<std::int64_t>();
  if (json.is_number()) return json.get<double>();
  if (json.is_string()) return json.get<std::string>();
  if (json.is_object() && json.contains("blob")) return Blob{Unhex(json["blob"])};
  return std::monostate{};
}

}  // namespace

std::string ExecStatusName(ExecStatus status) {
  switch (status) {
    case ExecStatus::kOk: return "ok";
    case ExecStatus::kSyntaxError: return "syntax_error";
    case ExecStatus::kRuntimeError: return "runtime_error";
    case ExecStatus::kTimeout: return "timeout";
    case ExecStatus::kNonSelectRejected: return "non_select_rejected";
  }
  return "runtime_error";
}

ExecStatus ParseExecStatus(const std::string& name) {
  if (name == "ok") return ExecStatus::kOk;
  if (name == "syntax_error") return ExecStatus::kSyntaxError;
  if (name == "timeout") return ExecStatus::kTimeout;
  if (name == "non_select_rejected") return ExecStatus::kNonSelectRejected;
  return ExecStatus::kRuntimeError;
}

std::string EquivalenceModeName(EquivalenceMode mode) {
  return mode == EquivalenceMode::kSet ? "set" : "multiset";
}

EquivalenceMode ParseEquivalenceMode(const std::string& name) {
  std::string lower = ToLower(name);
  if (lower == "set") return EquivalenceMode::kSet;
  if (lower == "multiset") return EquivalenceMode::kMultiset;
  throw Error(ErrorCode::kInvalidArgument, "unknown equivalence mode '" + name + "'");
}

std::string CanonicalCell(const Cell& cell, const NormalizationConfig& config) {
  const int decimals = ToleranceDecimals(config.float_tolerance);
  std::int64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  constexpr long double kInt64Limit = 9.2e18L;

  if (std::holds_alternative<std::monostate>(cell)) return "N";
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return "I" + std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&cell)) return "T" + *s;
  if (const auto* b = std::get_if<Blob>(&cell)) return "B" + Hex(b->bytes);

  double r = std::get<double>(cell);
  if (std::isnan(r)) return "Fnan";
  if (std::isinf(r)) return r > 0 ? "Finf" : "F-inf";
  long double scaled = static_cast<long double>(r) * scale;
  if (std::fabs(scaled) < kInt64Limit) {
    std::int64_t q = std::llround(scaled);
    if (q % scale == 0) return "I" + std::to_string(q / scale);
    return "D" + std::to_string(q) + "e-" + std::to_string(decimals);
  }
  if (std::floor(r) == r && std::fabs(static_cast<long double>(r)) < kInt64Limit) {
    return "I" + std::to_string(static_cast<std::int64_t>(r));
  }
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "F%.17g", r);
  return buffer;
}

std::string CanonicalRow(const Row& row, const NormalizationConfig& config) {
  std::string out;
  for (const Cell& cell : row) {
    std::string c = CanonicalCell(cell, config);
    out += std::to_string(c.size());
    out.push_back(':');
    out += c;
  }
  return out;
}

Json ExecutionOutcome::ToJson(std::size_t max_rows) const {
  Json preview = Json::array();
  for (std::size_t i = 0; i < rows.size() && i < max_rows; ++i) {
    Json row = Json::array();
    for (const Cell& cell : rows[i]) row.push_back(CellToJson(cell));
    preview.push_back(std::move(row));
  }
  return {{"status", ExecStatusName(status)},
          {"rows", preview},
          {"rows_truncated", rows_truncated || rows.size() > max_rows},
          {"row_count", row_count},
          {"column_count", column_count},
          {"error", error_message},
          {"digest_set", digest_set},
          {"digest_multiset", digest_multiset},
          {"order_unstable", order_unstable}};
}

ExecutionOutcome ExecutionOutcome::FromJson(const Json& json) {
  ExecutionOutcome outcome;
  outcome.status = ParseExecStatus(json.at("status").get<std::string>());
  for (const Json& row_json : json.value("rows", Json::array())) {
    Row row;
    for (const Json& cell : row_json) row.push_back(CellFromJson(cell));
    outcome.rows.push_back(std::move(row));
  }
  outcome.rows_truncated = json.value("rows_truncated", false);
  outcome.row_count = json.value("row_count", std::size_t{0});
  outcome.column_count = json.value("column_count", std::size_t{0});
  outcome.error_message = json.value("error", "");
  outcome.digest_set = json.value("digest_set", "");
  outcome.digest_multiset = json.value("digest_multiset", "");
  outcome.order_unstable = json.value("order_unstable", false);
  return outcome;
}

std::string VerdictReasonName(VerdictReason reason) {
  switch (reason) {
    case VerdictReason::kMatch: return "match";
    case VerdictReason::kRowSetMismatch: return "row_set_mismatch";
    case VerdictReason::kCandidateFailed: return "candidate_failed";
    case VerdictReason::kGoldFailed: return "gold_failed";
  }
  return "candidate_failed";
}

EquivalenceVerdict CompareResults(const ExecutionOutcome& candidate, const ExecutionOutcome& gold,
                                  EquivalenceMode mode) {
  EquivalenceVerdict verdict;
  verdict.mode = mode;
  if (!candidate.ok()) {
    verdict.reason = VerdictReason::kCandidateFailed;
  } else if (!gold.ok()) {
    verdict.reason = VerdictReason::kGoldFailed;
  } else if (candidate.Digest(mode) == gold.Digest(mode)) {
    verdict.equivalent = true;
    verdict.reason = VerdictReason::kMatch;
  } else {
    verdict.reason = VerdictReason::kRowSetMismatch;
  }
  return verdict;
}

ExecutionOutcome ExecuteSql(const std::filesystem::path& db_path, const std::string& sql,
                            const ExecutionOptions& options) {
  std::string error;
  auto conn = Connect(db_path, &error);
  if (!conn) {
    ExecutionOutcome outcome;
    outcome.status = ExecStatus::kRuntimeError;
    outcome.error_message = error;
    return outcome;
  }
  return RunOn(*conn, sql, options);
}

Json ExecutorConfig::ToJson() const {
  return {{"timeout_ms", timeout.count()},
          {"mode", EquivalenceModeName(mode)},
          {"float_tolerance", normalization.float_tolerance}};
}

std::string CandidateLabelName(CandidateLabel label) {
  switch (label) {
    case CandidateLabel::kCorrect: return "correct";
    case CandidateLabel::kIncorrect: return "incorrect";
    case CandidateLabel::kInvalidSql: return "invalid_sql";
    case CandidateLabel::kExtractionFailed: return "extraction_failed";
  }
  return "extraction_failed";
}

CandidateLabel ParseCandidateLabel(const std::string& name) {
  if (name == "correct") return CandidateLabel::kCorrect;
  if (name == "incorrect") return CandidateLabel::kIncorrect;
  if (name == "invalid_sql") return CandidateLabel::kInvalidSql;
  return CandidateLabel::kExtractionFailed;
}

bool GoldReport::IsQuarantined(const std::string& task_id) const {
  return std::binary_search(quarantined.begin(), quarantined.end(), task_id);
}

Json GoldReport::ToJson() const {
  Json failures = Json::array();
  for (const auto& task_id : quarantined) {
    const ExecutionOutcome& outcome = outcomes.at(task_id);
    failures.push_back({{"task_id", task_id},
                        {"status", ExecStatusName(outcome.status)},
                        {"error", outcome.error_message}});
  }
  return {{"n_tasks", n_tasks},
          {"n_ok", n_tasks - quarantined.size()},
          {"quarantined", failures},
          {"executions", executions},
          {"cache_hits", cache_hits}};
}

Executor::Executor(ExecutorConfig config, Store* store)
    : config_(std::move(config)), store_(store) {
  ToleranceDecimals(config_.normalization.float_tolerance);
  if (config_.workers == 0) config_.workers = 1;
}

std::string Executor::OutcomeKey(const DatabaseRef& db, const std::string& sql) const {
  return Fingerprint({{"db", db.file_hash},
                      {"sql", Trim(sql)},
                      {"timeout_ms", config_.timeout.count()},
                      {"float_tolerance", config_.normalization.float_tolerance},
                      {"schema", 1}});
}

ExecutionOutcome Executor::Run(const DatabaseRef& db, const std::string& sql) {
  // One read-only connection per (thread, database file).
  thread_local std::unordered_map<std::string, std::unique_ptr<Connection>> connections;
  std::string cache_key = db.file_path.string();
  auto it = connections.find(cache_key);
  if (it == connections.end() || it->second->file_hash != db.file_hash) {
    std::string error;
    auto conn = Connect(db.file_path, &error);
    if (!conn) {
      ExecutionOutcome outcome;
      outcome.status = ExecStatus::kRuntimeError;
      outcome.error_message = error;
      return outcome;
    }
    conn->file_hash = db.file_hash;
    it = connections.insert_or_assign(cache_key, std::move(conn)).first;
  }
  executions_.fetch_add(1);
  return RunOn(*it->second, sql, ExecutionOptions{config_.timeout, config_.normalization});
}

ExecutionOutcome Executor::ExecuteFresh(const DatabaseRef& db, const std::string& sql) {
  return Run(db, sql);
}

ExecutionOutcome Executor::Execute(const DatabaseRef& db, const std::string& sql) {
  std::string key = OutcomeKey(db, sql);
  {
    std::lock_guard<std::mutex> lock(memo_mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) {
      cache_hits_.fetch_add(1);
      return it->second;
    }
  }
  if (store_) {
    if (auto record = store_->Get({Namespace::kOutcome, key})) {
      ExecutionOutcome outcome = ExecutionOutcome::FromJson(*record);
      cache_hits_.fetch_add(1);
      std::lock_guard<std::mutex> lock(memo_mutex_);
      memo_.emplace(key, outcome);
      return outcome;
    }
  }
  ExecutionOutcome outcome = Run(db, sql);
  Json record = outcome.ToJson();
  ExecutionOutcome compact = ExecutionOutcome::FromJson(record);
  if (store_ && !store_->read_only()) {
    try {
      store_->Put({Namespace::kOutcome, key}, record);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kIntegrity) throw;
      // A nondeterministic query raced with itself; the first stored result wins.
      compact = ExecutionOutcome::FromJson(*store_->Get({Namespace::kOutcome, key}));
      outcome = compact;
    }
  }
  std::lock_guard<std::mutex> lock(memo_mutex_);
  memo_.emplace(key, std::move(compact));
  return outcome;
}

std::vector<ExecutionOutcome> Executor::ExecuteBatch(const std::vector<Job>& jobs) {
  std::vector<ExecutionOutcome> outcomes(jobs.size());
  ParallelFor(jobs.size(), config_.workers,
              [&](std::size_t i) { outcomes[i] = Execute(*jobs[i].db, jobs[i].sql); });
  return outcomes;
}

LabelResult Executor::LabelWith(
    const ExtractionResult& extraction, const ExecutionOutcome& gold,
    const std::function<ExecutionOutcome(const std::string&)>& exec) const {
  LabelResult result;
  result.verdict.mode = config_.mode;
  if (extraction.status != ExtractionStatus::kOk || !extraction.final_sql) {
    result.label = CandidateLabel::kExtractionFailed;
    result.verdict.reason = VerdictReason::kCandidateFailed;
    return result;
  }
  ExecutionOutcome outcome = exec(*extraction.final_sql);
  result.valid = outcome.ok();
  result.verdict = CompareResults(outcome, gold, config_.mode);
  if (!outcome.ok()) {
    result.label = CandidateLabel::kInvalidSql;
  } else {
    result.label = result.verdict.equivalent ? CandidateLabel::kCorrect : CandidateLabel::kIncorrect;
  }
  result.outcome = std::move(outcome);
  return result;
}

LabelResult Executor::Label(const Task&, const DatabaseRef& db, const ExtractionResult& extraction,
                            const ExecutionOutcome& gold_outcome) {
  return LabelWith(extraction, gold_outcome,
                   [&](const std::string& sql) { return Execute(db, sql); });
}

LabelResult Executor::LabelFresh(const Task&, const DatabaseRef& db,
                                 const ExtractionResult& extraction,
                                 const ExecutionOutcome& gold_outcome) {
  return LabelWith(extraction, gold_outcome,
                   [&](const std::string& sql) { return ExecuteFresh(db, sql); });
}

GoldReport Executor::ValidateGold(const Dataset& dataset) {
  GoldReport report;
  report.n_tasks = dataset.tasks.size();
  const std::size_t executions_before = executions_.load();
  const std::size_t hits_before = cache_hits_.load();
  std::vector<Job> jobs;
  jobs.reserve(dataset.tasks.size());
  for (const Task& task : dataset.tasks) {
    jobs.push_back({&dataset.Database(task.db_id), task.gold_sql});
  }
  std::vector<ExecutionOutcome> outcomes = ExecuteBatch(jobs);
  for (std::size_t i = 0; i < dataset.tasks.size(); ++i) {
    const Task& task = dataset.tasks[i];
    if (!outcomes[i].ok()) report.quarantined.push_back(task.task_id);
    report.outcomes.emplace(task.task_id, std::move(outcomes[i]));
  }
  std::sort(report.quarantined.begin(), report.quarantined.end());
  report.executions = executions_.load() - executions_before;
  report.cache_hits = cache_hits_.load() - hits_before;
  return report;
}

}  // namespace sqlpref
