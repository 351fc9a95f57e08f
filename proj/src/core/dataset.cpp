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

#include "core/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "core/sqlite_util.hpp"

namespace sqlpref {
namespace {

std::string FieldAsString(const Json& record, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    auto it = record.find(name);
    if (it == record.end() || it->is_null()) continue;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    return it->dump();
  }
  return {};
}

Split InferSplit(const std::filesystem::path& manifest_path) {
  std::string stem = ToLower(manifest_path.stem().string());
  if (stem.find("train") != std::string::npos) return Split::kTrain;
  if (stem.find("test") != std::string::npos) return Split::kTest;
  return Split::kDev;
}

bool IsPlainIdentifier(const std::string& name) {
  if (name.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

// Backtick quoting, the convention BIRD gold queries use for odd names.
std::string PromptIdentifier(const std::string& name) {
  if (IsPlainIdentifier(name)) return name;
  std::string out = "`";
  for (char c : name) {
    if (c == '`') out.push_back('`');
    out.push_back(c);
  }
  out.push_back('`');
  return out;
}

std::string ColumnText(sqlite3_stmt* stmt, int col) {
  const unsigned char* text = sqlite3_column_text(stmt, col);
  return text ? reinterpret_cast<const char*>(text) : "";
}

}  // namespace

std::string SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "dev";
}

Split ParseSplit(const std::string& name) {
  std::string lower = ToLower(name);
  if (lower == "train") return Split::kTrain;
  if (lower == "dev" || lower == "validation") return Split::kDev;
  if (lower == "test") return Split::kTest;
  throw Error(ErrorCode::kDataset, "unknown split '" + name + "'");
}

const Task* Dataset::FindTask(const std::string& task_id) const {
  auto it = std::lower_bound(tasks.begin(), tasks.end(), task_id,
                             [](const Task& t, const std::string& id) { return t.task_id < id; });
  if (it == tasks.end() || it->task_id != task_id) return nullptr;
  return &*it;
}

const DatabaseRef& Dataset::Database(const std::string& db_id) const {
  auto it = databases.find(db_id);
  if (it == databases.end()) {
    throw Error(ErrorCode::kDataset, "unregistered db_id '" + db_id + "'");
  }
  return it->second;
}

std::filesystem::path DatabasePath(const std::filesystem::path& root,
                                   const std::string& db_id) {
  return root / db_id / (db_id + ".sqlite");
}

Dataset LoadDataset(const std::filesystem::path& manifest_path, const LoadOptions& options) {
  if (!std::filesystem::is_regular_file(manifest_path)) {
    throw Error(ErrorCode::kDataset, "dataset manifest not found: " + manifest_path.string());
  }
  std::filesystem::path db_root = options.database_root.value_or(
      manifest_path.parent_path() / "databases");

  Dataset dataset;
  std::set<std::string> seen;
  Split default_split = InferSplit(manifest_path);
  std::vector<Json> records;
  try {
    records = ReadJsonLines(manifest_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDataset, e.what());
  }
  for (const Json& record : records) {
    Task task;
    task.task_id = FieldAsString(record, {"task_id", "question_id"});
    task.db_id = FieldAsString(record, {"db_id"});
    task.question = FieldAsString(record, {"question"});
    task.gold_sql = FieldAsString(record, {"gold_sql", "SQL", "query"});
    std::string evidence = FieldAsString(record, {"evidence"});
    if (!Trim(evidence).empty()) task.evidence = evidence;
    std::string difficulty = FieldAsString(record, {"difficulty"});
    if (!difficulty.empty()) task.difficulty = difficulty;
    std::string split = FieldAsString(record, {"split"});
    task.split = split.empty() ? default_split : ParseSplit(split);

    if (task.task_id.empty()) {
      throw Error(ErrorCode::kDataset, manifest_path.string() + ": record without task_id");
    }
    if (Trim(task.gold_sql).empty()) {
      throw Error(ErrorCode::kDataset, "task '" + task.task_id + "' has empty gold_sql");
    }
    if (!seen.insert(task.task_id).second) {
      throw Error(ErrorCode::kDataset, "duplicate task_id '" + task.task_id + "'");
    }
    dataset.tasks.push_back(std::move(task));
  }
  std::sort(dataset.tasks.begin(), dataset.tasks.end(),
            [](const Task& a, const Task& b) { return a.task_id < b.task_id; });

  std::set<std::string> missing;
  for (const Task& task : dataset.tasks) {
    if (dataset.databases.count(task.db_id) || missing.count(task.db_id)) continue;
    std::filesystem::path path = DatabasePath(db_root, task.db_id);
    if (!std::filesystem::is_regular_file(path)) {
      missing.insert(task.db_id);
      continue;
    }
    DatabaseRef ref;
    ref.db_id = task.db_id;
    ref.file_path = path;
    ref.file_hash = Sha256File(path);
    ref.schema = SnapshotSchema(path, task.db_id, options.sample_values);
    dataset.databases.emplace(task.db_id, std::move(ref));
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& id : missing) names += (names.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::kDataset,
                "unresolvable db_id(s): " + names + " (searched " + db_root.string() + ")");
  }
  return dataset;
}

SchemaSnapshot SnapshotSchema(const std::filesystem::path& db_file, const std::string& db_id,
                              int sample_values) {
  std::string error;
  SqliteHandle db = OpenReadOnly(db_file, &error);
  if (!db) {
    throw Error(ErrorCode::kDataset, "database '" + db_id + "': " + error);
  }
  auto prepare = [&](const std::string& sql) {
    sqlite3_stmt* raw = nullptr;
    if (sqlite3_prepare_v2(db.get(), sql.c_str(), -1, &raw, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::kDataset,
                  "database '" + db_id + "': " + sqlite3_errmsg(db.get()));
    }
    return StmtHandle(raw);
  };

  SchemaSnapshot snapshot;
  {
    StmtHandle stmt = prepare(
        "SELECT name FROM sqlite_master WHERE type = 'table' "
        "AND name NOT LIKE 'sqlite_%' ORDER BY rowid");
    while (sqlite3_step(stmt.get()) == SQLITE_ROW) {
      snapshot.tables.push_back(Table{ColumnText(stmt.get(), 0), {}});
    }
  }

  for (Table& table : snapshot.tables) {
    StmtHandle info = prepare("PRAGMA table_info(" + QuoteIdentifier(table.name) + ")");
    while (sqlite3_step(info.get()) == SQLITE_ROW) {
      Column column;
      column.name = ColumnText(info.get(), 1);
      column.type = ColumnText(info.get(), 2);
      column.primary_key = sqlite3_column_int(info.get(), 5) > 0;
      table.columns.push_back(std::move(column));
    }
    if (sample_values > 0) {
      for (Column& column : table.columns) {
        StmtHandle values = prepare("SELECT DISTINCT " + QuoteIdentifier(column.name) + " FROM " +
                                    QuoteIdentifier(table.name) + " WHERE " +
                                    QuoteIdentifier(column.name) + " IS NOT NULL LIMIT " +
                                    std::to_string(sample_values));
        while (sqlite3_step(values.get()) == SQLITE_ROW) {
          column.sample_values.push_back(ColumnText(values.get(), 0));
        }
      }
    }

    StmtHandle fks = prepare("PRAGMA foreign_key_list(" + QuoteIdentifier(table.name) + ")");
    while (sqlite3_step(fks.get()) == SQLITE_ROW) {
      ForeignKey fk;
      fk.from_table = table.name;
      fk.to_table = ColumnText(fks.get(), 2);
      fk.from_column = ColumnText(fks.get(), 3);
      fk.to_column = ColumnText(fks.get(), 4);
      snapshot.foreign_keys.push_back(std::move(fk));
    }
  }

  // An FK without an explicit target column references the target's primary key.
  for (ForeignKey& fk : snapshot.foreign_keys) {
    if (!fk.to_column.empty()) continue;
    for (const Table& table : snapshot.tables) {
      if (table.name != fk.to_table) continue;
      for (const Column& column : table.columns) {
        if (column.primary_key) {
          fk.to_column = column.name;
          break;
        }
      }
    }
  }
  return snapshot;
}

SchemaStyle ParseSchemaStyle(const std::string& name) {
  std::string lower = ToLower(name);
  if (lower == "ddl") return SchemaStyle::kDdl;
  if (lower == "compact") return SchemaStyle::kCompact;
  throw Error(ErrorCode::kInvalidArgument, "unknown schema style '" + name + "'");
}

std::string SchemaStyleName(SchemaStyle style) {
  return style == SchemaStyle::kDdl ? "ddl" : "compact";
}

std::string SerializeSchema(const SchemaSnapshot& snapshot, SchemaStyle style) {
  std::ostringstream out;
  bool first_table = true;
  for (const Table& table : snapshot.tables) {
    std::size_t pk_count = std::count_if(table.columns.begin(), table.columns.end(),
                                         [](const Column& c) { return c.primary_key; });
    if (style == SchemaStyle::kCompact) {
      out << PromptIdentifier(table.name) << '(';
      for (std::size_t i = 0; i < table.columns.size(); ++i) {
        const Column& column = table.columns[i];
        if (i > 0) out << ", ";
        out << PromptIdentifier(column.name) << ':' << column.type;
        if (column.primary_key) out << "[pk]";
        if (!column.sample_values.empty()) {
          out << "{";
          for (std::size_t v = 0; v < column.sample_values.size(); ++v) {
            out << (v ? "|" : "") << column.sample_values[v];
          }
          out << "}";
        }
      }
      out << ")\n";
      continue;
    }

    if (!first_table) out << '\n';
    first_table = false;
    out << "CREATE TABLE " << PromptIdentifier(table.name) << " (\n";
    std::vector<std::string> lines;
    std::vector<std::string> pk_names;
    for (const Column& column : table.columns) {
      std::string line = "  " + PromptIdentifier(column.name);
      if (!column.type.empty()) line += " " + column.type;
      if (column.primary_key) {
        if (pk_count == 1) {
          line += " PRIMARY KEY";
        } else {
          pk_names.push_back(PromptIdentifier(column.name));
        }
      }
      lines.push_back(std::move(line));
    }
    if (!pk_names.empty()) {
      std::string line = "  PRIMARY KEY (";
      for (std::size_t i = 0; i < pk_names.size(); ++i) line += (i ? ", " : "") + pk_names[i];
      lines.push_back(line + ")");
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      out << lines[i] << (i + 1 < lines.size() ? ",\n" : "\n");
    }
    out << ");\n";
    for (const ForeignKey& fk : snapshot.foreign_keys) {
      if (fk.from_table != table.name) continue;
      out << "-- FOREIGN KEY " << PromptIdentifier(fk.from_table) << '.'
          << PromptIdentifier(fk.from_column) << " REFERENCES " << PromptIdentifier(fk.to_table)
          << '.' << PromptIdentifier(fk.to_column) << '\n';
    }
    for (const Column& column : table.columns) {
      if (column.sample_values.empty()) continue;
      out << "-- " << PromptIdentifier(table.name) << '.' << PromptIdentifier(column.name)
          << " examples: ";
      for (std::size_t v = 0; v < column.sample_values.size(); ++v) {
        out << (v ? " | " : "") << column.sample_values[v];
      }
      out << '\n';
    }
  }
  if (style == SchemaStyle::kCompact) {
    for (const ForeignKey& fk : snapshot.foreign_keys) {
      out << "fk: " << PromptIdentifier(fk.from_table) << '.' << PromptIdentifier(fk.from_column)
          << " -> " << PromptIdentifier(fk.to_table) << '.' << PromptIdentifier(fk.to_column)
          << '\n';
    }
  }
  std::string text = out.str();
  // Compact output is line-oriented; drop the final newline so that a single
  // table serializes to exactly one line.
  if (style == SchemaStyle::kCompact && !text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

Json TaskToJson(const Task& task) {
  Json out = {
      {"task_id", task.task_id},
      {"db_id", task.db_id},
      {"question", task.question},
      {"gold_sql", task.gold_sql},
      {"split", SplitName(task.split)},
  };
  out["evidence"] = task.evidence ? Json(*task.evidence) : Json(nullptr);
  out["difficulty"] = task.difficulty ? Json(*task.difficulty) : Json(nullptr);
  return out;
}

}  // namespace sqlpref
