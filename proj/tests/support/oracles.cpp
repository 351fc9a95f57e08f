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

#include "support/oracles.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cmath>
#include <tuple>

namespace testing_support {

RawResult Materialize(const std::filesystem::path& db, const std::string& sql) {
  RawResult result;
  sqlite3* handle = nullptr;
  if (sqlite3_open_v2(db.c_str(), &handle, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK) {
    sqlite3_close(handle);
    return result;
  }
  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(handle, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK || !stmt) {
    sqlite3_close(handle);
    return result;
  }
  int columns = sqlite3_column_count(stmt);
  int rc;
  while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
    RawRow row;
    for (int c = 0; c < columns; ++c) {
      RawCell cell;
      switch (sqlite3_column_type(stmt, c)) {
        case SQLITE_INTEGER:
          cell.kind = RawCell::kInteger;
          cell.integer = sqlite3_column_int64(stmt, c);
          break;
        case SQLITE_FLOAT:
          cell.kind = RawCell::kReal;
          cell.real = sqlite3_column_double(stmt, c);
          break;
        case SQLITE_TEXT:
          cell.kind = RawCell::kText;
          cell.bytes.assign(reinterpret_cast<const char*>(sqlite3_column_text(stmt, c)),
                            static_cast<std::size_t>(sqlite3_column_bytes(stmt, c)));
          break;
        case SQLITE_BLOB: {
          cell.kind = RawCell::kBlob;
          const void* data = sqlite3_column_blob(stmt, c);
          int n = sqlite3_column_bytes(stmt, c);
          if (data) cell.bytes.assign(static_cast<const char*>(data), static_cast<std::size_t>(n));
          break;
        }
        default:
          break;
      }
      row.push_back(std::move(cell));
    }
    result.rows.push_back(std::move(row));
  }
  result.ok = rc == SQLITE_DONE;
  sqlite3_finalize(stmt);
  sqlite3_close(handle);
  return result;
}

namespace {

bool IsNumber(const RawCell& c) { return c.kind == RawCell::kInteger || c.kind == RawCell::kReal; }

long long Units(const RawCell& c, double tolerance) {
  long double value = c.kind == RawCell::kInteger ? static_cast<long double>(c.integer)
                                                  : static_cast<long double>(c.real);
  return std::llroundl(value / static_cast<long double>(tolerance));
}

}  // namespace

bool CellsEqual(const RawCell& a, const RawCell& b, double tolerance) {
  if (IsNumber(a) && IsNumber(b)) return Units(a, tolerance) == Units(b, tolerance);
  if (a.kind != b.kind) return false;
  return a.bytes == b.bytes;
}

bool RowsEqual(const RawRow& a, const RawRow& b, double tolerance) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!CellsEqual(a[i], b[i], tolerance)) return false;
  }
  return true;
}

bool OracleEquivalent(const RawResult& a, const RawResult& b, bool multiset, double tolerance) {
  if (!a.ok || !b.ok) return false;
  if (multiset) {
    if (a.rows.size() != b.rows.size()) return false;
    std::vector<bool> used(b.rows.size(), false);
    for (const RawRow& row : a.rows) {
      bool matched = false;
      for (std::size_t j = 0; j < b.rows.size() && !matched; ++j) {
        if (!used[j] && RowsEqual(row, b.rows[j], tolerance)) used[j] = matched = true;
      }
      if (!matched) return false;
    }
    return true;
  }
  auto contained = [&](const std::vector<RawRow>& xs, const std::vector<RawRow>& ys) {
    for (const RawRow& x : xs) {
      bool found = false;
      for (const RawRow& y : ys) found = found || RowsEqual(x, y, tolerance);
      if (!found) return false;
    }
    return true;
  };
  return contained(a.rows, b.rows) && contained(b.rows, a.rows);
}

std::vector<QueryPair> EquivalenceCases() {
  const std::string join =
      "SELECT T1.`School Name` FROM frpm AS T1 INNER JOIN satscores AS T2 "
      "ON T1.CDSCode = T2.cds ";
  return {
      // row order
      {"shop", "SELECT id FROM orders ORDER BY id", "SELECT id FROM orders"},
      {"shop", "SELECT id FROM orders ORDER BY id DESC", "SELECT id FROM orders ORDER BY amount"},
      {"shop", "SELECT customer_id, COUNT(*) FROM orders GROUP BY customer_id",
       "SELECT customer_id, COUNT(id) FROM orders GROUP BY 1 ORDER BY 2 DESC"},
      {"schools", "SELECT County, COUNT(*) FROM frpm GROUP BY County",
       "SELECT County, COUNT(CDSCode) FROM frpm GROUP BY County ORDER BY County DESC"},
      // duplicate rows
      {"shop", "SELECT sku FROM items", "SELECT DISTINCT sku FROM items"},
      {"shop", "SELECT order_id, sku, qty, price FROM items", "SELECT DISTINCT * FROM items"},
      {"shop", "SELECT customer_id FROM orders", "SELECT DISTINCT customer_id FROM orders"},
      {"shop", "SELECT price FROM items WHERE sku = 'pen'",
       "SELECT price FROM items WHERE sku = 'pen' AND qty > 1"},
      {"schools", "SELECT `Charter School (Y/N)` FROM frpm",
       "SELECT DISTINCT `Charter School (Y/N)` FROM frpm"},
      // float aggregates
      {"shop", "SELECT SUM(amount) FROM orders WHERE status = 'shipped'",
       "SELECT TOTAL(amount) FROM orders WHERE status = 'shipped'"},
      {"shop", "SELECT SUM(amount) FROM orders", "SELECT SUM(amount) + 0.0000001 FROM orders"},
      {"shop", "SELECT 0.1 + 0.2", "SELECT 0.3"},
      {"shop", "SELECT AVG(amount) FROM orders", "SELECT SUM(amount) / COUNT(amount) FROM orders"},
      {"shop", "SELECT sku, SUM(qty) FROM items GROUP BY sku",
       "SELECT sku, SUM(qty * 1.0) FROM items GROUP BY sku"},
      {"shop", "SELECT COUNT(*) FROM orders", "SELECT 9.0"},
      {"shop", "SELECT 1.0000004", "SELECT 1.0000006"},
      {"shop", "SELECT -0.0", "SELECT 0"},
      {"schools", "SELECT AVG(AvgScrRead) FROM satscores",
       "SELECT SUM(AvgScrRead) / COUNT(*) FROM satscores"},
      {"schools", "SELECT AVG(AvgScrRead) FROM satscores",
       "SELECT SUM(AvgScrRead) * 1.0 / COUNT(AvgScrRead) FROM satscores"},
      {"schools", "SELECT MAX(`FRPM Count (Ages 5-17)` / `Enrollment (K-12)`) FROM frpm",
       "SELECT `FRPM Count (Ages 5-17)` / `Enrollment (K-12)` FROM frpm ORDER BY 1 DESC LIMIT 1"},
      // NULLs
      {"shop", "SELECT note FROM orders", "SELECT note FROM orders WHERE note IS NOT NULL"},
      {"shop", "SELECT city FROM customers", "SELECT DISTINCT city FROM customers"},
      {"shop", "SELECT city FROM customers WHERE city IS NULL", "SELECT NULL"},
      {"shop", "SELECT NULL", "SELECT ''"},
      {"schools", "SELECT sname FROM satscores WHERE AvgScrRead IS NULL",
       "SELECT sname FROM satscores WHERE AvgScrRead = NULL"},
      // projection differences
      {"shop", "SELECT name, city FROM customers", "SELECT city, name FROM customers"},
      {"shop", "SELECT name FROM customers", "SELECT name, id FROM customers"},
      {"shop", "SELECT COUNT(*) FROM orders", "SELECT 9"},
      {"shop", "SELECT COUNT(*) FROM orders", "SELECT '9'"},
      {"shop", "SELECT 'abc'", "SELECT 'abc '"},
      {"shop", "SELECT x'01ff'", "SELECT x'01ff'"},
      {"shop", "SELECT x'41'", "SELECT 'A'"},
      {"shop", "SELECT id FROM orders WHERE amount > 100",
       "SELECT id FROM orders WHERE amount >= 120.5"},
      {"shop", "SELECT id FROM orders WHERE 0", "SELECT name FROM customers WHERE 0"},
      {"shop", "SELECT nope FROM orders", "SELECT id FROM orders"},
      // frpm / satscores join pattern
      {"schools", join + "ORDER BY T2.AvgScrRead DESC LIMIT 1",
       "SELECT sname FROM satscores WHERE AvgScrRead IS NOT NULL ORDER BY AvgScrRead DESC LIMIT 1"},
      {"schools", join + "ORDER BY T2.AvgScrRead ASC LIMIT 1",
       join + "WHERE T2.AvgScrRead IS NOT NULL ORDER BY T2.AvgScrRead ASC LIMIT 1"},
      {"schools",
       "SELECT T2.sname FROM satscores AS T2 JOIN frpm AS T1 ON T1.CDSCode = T2.cds "
       "WHERE T1.County = 'Fresno'",
       "SELECT sname FROM satscores WHERE cds LIKE '10%'"},
      {"schools",
       "SELECT T1.CDSCode FROM frpm AS T1 LEFT JOIN satscores AS T2 ON T1.CDSCode = T2.cds "
       "WHERE T2.cds IS NULL",
       "SELECT CDSCode FROM frpm WHERE CDSCode NOT IN (SELECT cds FROM satscores)"},
      {"schools",
       "SELECT T2.AvgScrMath FROM frpm AS T1 JOIN satscores AS T2 ON T1.CDSCode = T2.cds "
       "WHERE T1.`Charter School (Y/N)` = 1",
       "SELECT AvgScrMath FROM satscores WHERE sname LIKE '%Charter%' OR sname = 'Sierra Prep'"},
      {"schools", join + "WHERE T1.County = 'Alameda'",
       "SELECT `School Name` FROM frpm WHERE County = 'Alameda'"},
  };
}

namespace {

std::vector<std::string> SplitWords(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    if (space) {
      if (!current.empty()) words.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) words.push_back(current);
  return words;
}

std::vector<std::uint32_t> CodePoints(const std::string& text) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < text.size();) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    std::uint32_t cp = len == 1 ? c : c & (0xFF >> (len + 1));
    for (int k = 1; k < len && i + static_cast<std::size_t>(k) < text.size(); ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(text[i + static_cast<std::size_t>(k)]) & 0x3F);
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

}  // namespace

std::size_t OracleEditDistance(const std::string& a, const std::string& b) {
  auto normalize = [](const std::string& s) {
    std::string joined;
    for (const std::string& w : SplitWords(s)) joined += (joined.empty() ? "" : " ") + w;
    return CodePoints(joined);
  };
  std::vector<std::uint32_t> s = normalize(a);
  std::vector<std::uint32_t> t = normalize(b);
  std::vector<std::vector<std::size_t>> d(s.size() + 1, std::vector<std::size_t>(t.size() + 1));
  for (std::size_t i = 0; i <= s.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= t.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    for (std::size_t j = 1; j <= t.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1)});
    }
  }
  return d[s.size()][t.size()];
}

std::vector<std::pair<std::size_t, std::size_t>> OracleSelect(
    const std::vector<std::string>& wins, const std::vector<std::string>& losses, bool furthest,
    std::size_t k) {
  std::vector<std::tuple<long long, std::size_t, std::size_t>> all;
  for (std::size_t w = 0; w < wins.size(); ++w) {
    for (std::size_t l = 0; l < losses.size(); ++l) {
      long long d = static_cast<long long>(OracleEditDistance(wins[w], losses[l]));
      all.emplace_back(furthest ? -d : d, w, l);
    }
  }
  std::sort(all.begin(), all.end());
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < all.size() && i < k; ++i) {
    out.emplace_back(std::get<1>(all[i]), std::get<2>(all[i]));
  }
  return out;
}

}  // namespace testing_support
