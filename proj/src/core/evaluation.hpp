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

// EX% / Valid% scoring of prediction sets.

#ifndef SQLPREF_CORE_EVALUATION_HPP_
#define SQLPREF_CORE_EVALUATION_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/executor.hpp"
#include "core/extract.hpp"

namespace sqlpref {

// kAuto treats an output containing a code fence as a completion and
// anything else as plain SQL.
enum class PredictionKind { kAuto, kSql, kCompletion };
PredictionKind ParsePredictionKind(const std::string& name);

struct TaskVerdict {
  std::string task_id;
  std::string difficulty;
  bool has_prediction = false;
  std::string extraction;  // "" when the input was plain SQL
  std::string exec_status;
  bool valid = false;
  bool correct = false;
  bool gold_failed = false;
};

struct EvalBucket {
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t valid = 0;
};

struct EvalReport {
  std::size_t n_tasks = 0;
  std::size_t n_correct = 0;
  std::size_t n_valid = 0;
  double ex_percent = 0.0;
  double valid_percent = 0.0;
  std::map<std::string, EvalBucket> breakdown;
  std::vector<TaskVerdict> verdicts;  // task_id order
  std::vector<std::string> warnings;

  Json ToJson() const;
  std::string ToTable() const;
};

struct EvalOptions {
  PredictionKind kind = PredictionKind::kAuto;
  ExtractOptions extract;
  std::optional<Split> split;
};

EvalReport Evaluate(const std::map<std::string, std::string>& predictions, const Dataset& dataset,
                    Executor& executor, const GoldReport& gold, const EvalOptions& options = {});

// JSON-lines {task_id, output}.
std::map<std::string, std::string> LoadPredictions(const std::filesystem::path& path);

}  // namespace sqlpref

#endif  // SQLPREF_CORE_EVALUATION_HPP_
