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

// Benchmark loading (BIRD/Spider-style JSON-lines manifests) and schema
// snapshots of the SQLite files the tasks run against.

#ifndef SQLPREF_CORE_DATASET_HPP_
#define SQLPREF_CORE_DATASET_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/util.hpp"

namespace sqlpref {

enum class Split { kTrain, kDev, kTest };

std::string SplitName(Split split);
Split ParseSplit(const std::string& name);

struct Task {
  std::string task_id;
  std::string db_id;
  std::string question;
  std::optional<std::string> evidence;
  std::string gold_sql;
  Split split = Split::kDev;
  std::optional<std::string> difficulty;

  bool operator==(const Task&) const = default;
};

struct Column {
  std::string name;
  std::string type;
  bool primary_key = false;
  std::vector<std::string> sample_values;

  bool operator==(const Column&) const = default;
};

struct Table {
  std::string name;
  std::vector<Column> columns;

  bool operator==(const Table&) const = default;
};

struct ForeignKey {
  std::string from_table;
  std::string from_column;
  std::string to_table;
  std::string to_column;

  bool operator==(const ForeignKey&) const = default;
};

struct SchemaSnapshot {
  std::vector<Table> tables;  // catalog order
  std::vector<ForeignKey> foreign_keys;

  bool operator==(const SchemaSnapshot&) const = default;
};

struct DatabaseRef {
  std::string db_id;
  std::filesystem::path file_path;
  std::string file_hash;  // sha256 of the file bytes at load time
  SchemaSnapshot schema;

  bool operator==(const DatabaseRef&) const = default;
};

using DatabaseRegistry = std::map<std::string, DatabaseRef>;

struct LoadOptions {
  // Defaults to <manifest dir>/databases.
  std::optional<std::filesystem::path> database_root;
  int sample_values = 0;
};

struct Dataset {
  std::vector<Task> tasks;  // sorted by task_id
  DatabaseRegistry databases;

  const Task* FindTask(const std::string& task_id) const;
  const DatabaseRef& Database(const std::string& db_id) const;
};

// Loads one JSON-lines split file. Database files are resolved as
// <database_root>/<db_id>/<db_id>.sqlite. Throws Error(kDataset) on missing
// files, duplicate task ids, or unresolvable db ids.
Dataset LoadDataset(const std::filesystem::path& manifest_path,
                    const LoadOptions& options = {});

std::filesystem::path DatabasePath(const std::filesystem::path& root,
                                   const std::string& db_id);

SchemaSnapshot SnapshotSchema(const std::filesystem::path& db_file,
                              const std::string& db_id, int sample_values = 0);

enum class SchemaStyle { kDdl, kCompact };

SchemaStyle ParseSchemaStyle(const std::string& name);
std::string SchemaStyleName(SchemaStyle style);

std::string SerializeSchema(const SchemaSnapshot& snapshot,
                            SchemaStyle style = SchemaStyle::kDdl);

Json TaskToJson(const Task& task);

}  // namespace sqlpref

#endif  // SQLPREF_CORE_DATASET_HPP_
