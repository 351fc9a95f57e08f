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

// Test fixtures: temporary directories, small SQLite databases and dataset
// layouts. Independent of the library under test.

#ifndef SQLPREF_TESTS_SUPPORT_FIXTURES_HPP_
#define SQLPREF_TESTS_SUPPORT_FIXTURES_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace testing_support {

class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "sqlpref");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Runs a SQL script against a (new or existing) database file.
void RunScript(const std::filesystem::path& db, const std::string& script);

// frpm / satscores school tables joined on a school code.
void BuildSchoolsDb(const std::filesystem::path& db);
// customers / orders / items with floats, NULLs and duplicate rows.
void BuildShopDb(const std::filesystem::path& db);
// items(id INTEGER PRIMARY KEY, grp INTEGER, price REAL, label TEXT) with n rows.
void BuildLargeDb(const std::filesystem::path& db, int rows);

struct FixtureTask {
  std::string task_id;
  std::string db_id;
  std::string question;
  std::string evidence;  // empty for none
  std::string gold_sql;
  std::string difficulty;
};

// Writes <dir>/dev.jsonl plus <dir>/databases/<db>/<db>.sqlite for every
// db_id used ("schools" and "shop" are built on demand).
std::filesystem::path WriteDataset(const std::filesystem::path& dir,
                                   const std::vector<FixtureTask>& tasks);

// Twenty tasks over the schools and shop databases. No gold query returns a
// single cell whose value is an integer >= 1000.
std::vector<FixtureTask> TwentyTasks();

std::string ReadText(const std::filesystem::path& path);
void WriteText(const std::filesystem::path& path, const std::string& text);
std::string FileSha256(const std::filesystem::path& path);

}  // namespace testing_support

#endif  // SQLPREF_TESTS_SUPPORT_FIXTURES_HPP_
