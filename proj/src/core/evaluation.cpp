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

#include "core/evaluation.hpp"

#include <cstdio>
#include <set>

namespace sqlpref {
namespace {

double Percent(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

Json BucketJson(const EvalBucket& b) {
  return {{"n", b.n},
          {"correct", b.correct},
          {"valid", b.valid},
          {"ex_percent", Percent(b.correct, b.n)},
          {"valid_percent", Percent(b.valid, b.n)}};
}

}  // namespace

PredictionKind ParsePredictionKind(const std::string& name) {
  if (name == "auto") return PredictionKind::kAuto;
  if (name == "sql") return PredictionKind::kSql;
  if (name == "completion") return PredictionKind::kCompletion;
  throw Error(ErrorCode::kInvalidArgument, "unknown prediction kind: " + name);
}

Json EvalReport::ToJson() const {
  Json buckets = Json::object();
  for (const auto& [name, bucket] : breakdown) buckets[name] = BucketJson(bucket);
  Json per_task = Json::array();
  for (const TaskVerdict& v : verdicts) {
    Json entry = {{"task_id", v.task_id},
                  {"has_prediction", v.has_prediction},
                  {"valid", v.valid},
                  {"correct", v.correct}};
    if (!v.difficulty.empty()) entry["difficulty"] = v.difficulty;
    if (!v.extraction.empty()) entry["extraction"] = v.extraction;
    if (!v.exec_status.empty()) entry["exec_status"] = v.exec_status;
    if (v.gold_failed) entry["gold_failed"] = true;
    per_task.push_back(entry);
  }
  return {{"n_tasks", n_tasks},
          {"n_correct", n_correct},
          {"n_valid", n_valid},
          {"ex_percent", ex_percent},
          {"valid_percent", valid_percent},
          {"breakdown", buckets},
          {"tasks", per_task},
          {"warnings", warnings}};
}

std::string EvalReport::ToTable() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %7s %8s %8s\n", "bucket", "n", "EX%", "Valid%");
  out += line;
  auto row = [&](const std::string& name, std::size_t n, std::size_t correct, std::size_t valid) {
    std::snprintf(line, sizeof line, "%-14s %7zu %8.2f %8.2f\n", name.c_str(), n,
                  Percent(correct, n), Percent(valid, n));
    out += line;
  };
  for (const auto& [name, b] : breakdown) row(name, b.n, b.correct, b.valid);
  row("overall", n_tasks, n_correct, n_valid);
  return out;
}

EvalReport Evaluate(const std::map<std::string, std::string>& predictions, const Dataset& dataset,
                    Executor& executor, const GoldReport& gold, const EvalOptions& options) {
  std::vector<const Task*> tasks;
  for (const Task& task : dataset.tasks) {
    if (!options.split || task.split == *options.split) tasks.push_back(&task);
  }
  std::set<std::string> evaluated;
  bool any_difficulty = false;
  for (const Task* task : tasks) {
    evaluated.insert(task->task_id);
    any_difficulty = any_difficulty || task->difficulty.has_value();
  }

  EvalReport report;
  for (const auto& [task_id, output] : predictions) {
    if (!evaluated.count(task_id)) {
      report.warnings.push_back("prediction for unknown task_id ignored: " + task_id);
    }
  }

  report.verdicts.resize(tasks.size());
  ParallelFor(tasks.size(), executor.config().workers, [&](std::size_t i) {
    const Task& task = *tasks[i];
    TaskVerdict& v = report.verdicts[i];
    v.task_id = task.task_id;
    v.difficulty = task.difficulty.value_or("");
    auto it = predictions.find(task.task_id);
    if (it == predictions.end()) return;
    v.has_prediction = true;

    const std::string& output = it->second;
    bool completion = options.kind == PredictionKind::kCompletion ||
                      (options.kind == PredictionKind::kAuto &&
                       output.find("```") != std::string::npos);
    ExtractionResult extraction;
    if (completion) {
      extraction = ExtractFinalSql(output, options.extract);
      v.extraction = ExtractionStatusName(extraction.status);
    } else {
      extraction.final_sql = output;
      extraction.status = Trim(output).empty() ? ExtractionStatus::kEmptyBlock
                                               : ExtractionStatus::kOk;
    }

    auto gold_it = gold.outcomes.find(task.task_id);
    ExecutionOutcome gold_outcome;
    if (gold_it != gold.outcomes.end()) gold_outcome = gold_it->second;
    v.gold_failed = !gold_outcome.ok();

    LabelResult label =
        executor.Label(task, dataset.Database(task.db_id), extraction, gold_outcome);
    v.valid = label.valid;
    v.correct = label.label == CandidateLabel::kCorrect;
    if (label.outcome) v.exec_status = ExecStatusName(label.outcome->status);
  });

  for (const TaskVerdict& v : report.verdicts) {
    ++report.n_tasks;
    report.n_correct += v.correct;
    report.n_valid += v.valid;
    std::string bucket = any_difficulty ? (v.difficulty.empty() ? "unlabeled" : v.difficulty)
                                        : "all";
    EvalBucket& b = report.breakdown[bucket];
    ++b.n;
    b.correct += v.correct;
    b.valid += v.valid;
    if (v.gold_failed) {
      report.warnings.push_back("gold query fails for task " + v.task_id +
                                "; counted as incorrect");
    }
  }
  report.ex_percent = Percent(report.n_correct, report.n_tasks);
  report.valid_percent = Percent(report.n_valid, report.n_tasks);
  for (const std::string& w : report.warnings) LogWarning(w);
  return report;
}

std::map<std::string, std::string> LoadPredictions(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (const Json& line : ReadJsonLines(path)) {
    if (!line.is_object() || !line.contains("task_id") || !line.contains("output")) {
      throw Error(ErrorCode::kInvalidArgument,
                  "predictions: each line needs task_id and output: " + path.string());
    }
    std::string task_id = line["task_id"].is_string() ? line["task_id"].get<std::string>()
                                                      : line["task_id"].dump();
    if (!out.emplace(task_id, line["output"].get<std::string>()).second) {
      throw Error(ErrorCode::kInvalidArgument, "predictions: duplicate task_id " + task_id);
    }
  }
  return out;
}

}  // namespace sqlpref
