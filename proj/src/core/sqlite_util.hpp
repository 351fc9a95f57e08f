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

#ifndef SQLPREF_CORE_SQLITE_UTIL_HPP_
#define SQLPREF_CORE_SQLITE_UTIL_HPP_

#include <sqlite3.h>

#include <filesystem>
#include <memory>
#include <string>

namespace sqlpref {

struct SqliteCloser {
  void operator()(sqlite3* db) const { sqlite3_close_v2(db); }
};
struct StmtFinalizer {
  void operator()(sqlite3_stmt* stmt) const { sqlite3_finalize(stmt); }
};

using SqliteHandle = std::unique_ptr<sqlite3, SqliteCloser>;
using StmtHandle = std::unique_ptr<sqlite3_stmt, StmtFinalizer>;

// Opens `path` read-only through a URI so that the file is never created or
// written. Returns null and fills `error` on failure.
inline SqliteHandle OpenReadOnly(const std::filesystem::path& path,
                                 std::string* error) {
  if (!std::filesystem::is_regular_file(path)) {
    if (error) *error = "no such database file: " + path.string();
    return nullptr;
  }
  sqlite3* raw = nullptr;
  int rc = sqlite3_open_v2(path.c_str(), &raw,
                           SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr);
  SqliteHandle db(raw);
  if (rc != SQLITE_OK) {
    if (error) *error = raw ? sqlite3_errmsg(raw) : "sqlite3_open_v2 failed";
    return nullptr;
  }
  sqlite3_extended_result_codes(raw, 1);
  return db;
}

inline std::string QuoteIdentifier(const std::string& name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace sqlpref

#endif  // SQLPREF_CORE_SQLITE_UTIL_HPP_
