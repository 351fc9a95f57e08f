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

#include "support/fixtures.hpp"

#include <openssl/evp.h>
#include <sqlite3.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace testing_support {

TempDir::TempDir(const std::string& prefix) {
  std::string pattern = (std::filesystem::temp_directory_path() / (prefix + "-XXXXXX")).string();
  if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void RunScript(const std::filesystem::path& db, const std::string& script) {
  sqlite3* handle = nullptr;
  if (sqlite3_open(db.c_str(), &handle) != SQLITE_OK) {
    throw std::runtime_error("cannot open " + db.string());
  }
  char* error = nullptr;
  int rc = sqlite3_exec(handle, script.c_str(), nullptr, nullptr, &error);
  std::string message = error ? error : "";
  sqlite3_free(error);
  sqlite3_close(handle);
  if (rc != SQLITE_OK) throw std::runtime_error("fixture script failed: " + message);
}

void BuildSchoolsDb(const std::filesystem::path& db) {
  RunScript(db, R"sql(
CREATE TABLE frpm (
  CDSCode TEXT PRIMARY KEY,
  `School Name` TEXT,
  County TEXT,
  `Enrollment (K-12)` REAL,
  `FRPM Count (Ages 5-17)` REAL,
  `Charter School (Y/N)` INTEGER
);
CREATE TABLE satscores (
  cds TEXT PRIMARY KEY REFERENCES frpm(CDSCode),
  sname TEXT,
  NumTstTakr INTEGER,
  AvgScrRead INTEGER,
  AvgScrMath INTEGER
);
INSERT INTO frpm VALUES
  ('01100170109835', 'Lincoln High', 'Alameda', 1200.0, 410.0, 0),
  ('01100170112607', 'Oak Charter', 'Alameda', 350.0, 220.5, 1),
  ('01100170118489', 'Bayview Academy', 'Alameda', 800.0, 120.0, 0),
  ('10101080109991', 'Fresno Central', 'Fresno', 2100.0, 1650.0, 0),
  ('10101080111682', 'Sierra Prep', 'Fresno', 640.0, 300.0, 1),
  ('10101080119628', 'Valley Tech', 'Fresno', 910.0, 455.25, 0),
  ('19647330100289', 'Pacific Coast', 'Los Angeles', 3100.0, 2400.0, 0),
  ('19647330100743', 'Harbor Charter', 'Los Angeles', 420.0, 380.0, 1),
  ('19647330101196', 'Westside Prep', 'Los Angeles', 1500.0, 210.0, 0),
  ('37683380107771', 'Mesa Verde', 'San Diego', 980.0, 505.0, 0),
  ('37683380108218', 'Torrey Pines', 'San Diego', 2200.0, 150.0, 0),
  ('37683380109901', 'Canyon Charter', 'San Diego', 300.0, 240.0, 1);
INSERT INTO satscores VALUES
  ('01100170109835', 'Lincoln High', 310, 512, 530),
  ('01100170112607', 'Oak Charter', 45, 470, 455),
  ('01100170118489', 'Bayview Academy', 120, NULL, 498),
  ('10101080109991', 'Fresno Central', 640, 455, 470),
  ('10101080111682', 'Sierra Prep', 88, 560, 575),
  ('10101080119628', 'Valley Tech', 210, 498, 540),
  ('19647330100289', 'Pacific Coast', 720, 488, 505),
  ('19647330100743', 'Harbor Charter', 60, 502, 489),
  ('19647330101196', 'Westside Prep', 530, 541, 560),
  ('37683380107771', 'Mesa Verde', 250, NULL, 512),
  ('37683380108218', 'Torrey Pines', 690, 549, 602);
)sql");
}

void BuildShopDb(const std::filesystem::path& db) {
  RunScript(db, R"sql(
CREATE TABLE customers (
  id INTEGER PRIMARY KEY,
  name TEXT NOT NULL,
  city TEXT,
  vip INTEGER
);
CREATE TABLE orders (
  id INTEGER PRIMARY KEY,
  customer_id INTEGER REFERENCES customers(id),
  amount REAL,
  status TEXT,
  note TEXT
);
CREATE TABLE items (
  order_id INTEGER REFERENCES orders(id),
  sku TEXT,
  qty INTEGER,
  price REAL
);
INSERT INTO customers VALUES
  (1, 'Ada', 'Paris', 1),
  (2, 'Bruno', 'Lyon', 0),
  (3, 'Chen', 'Paris', 0),
  (4, 'Dina', 'Berlin', 1),
  (5, 'Emil', NULL, 0),
  (6, 'Fatima', 'Berlin', 0),
  (7, 'Goran', 'Paris', 1);
INSERT INTO orders VALUES
  (10, 1, 19.99, 'shipped', 'gift'),
  (11, 1, 5.01, 'shipped', NULL),
  (12, 2, 120.5, 'cancelled', 'late'),
  (13, 3, 0.1, 'shipped', NULL),
  (14, 3, 0.2, 'pending', NULL),
  (15, 4, 75.0, 'shipped', 'fragile'),
  (16, 6, 33.333333, 'cancelled', NULL),
  (17, 7, 250.0, 'shipped', NULL),
  (18, 7, 12.75, 'pending', 'gift');
INSERT INTO items VALUES
  (10, 'pen', 2, 1.5),
  (10, 'pen', 2, 1.5),
  (10, 'book', 1, 16.99),
  (11, 'pen', 1, 1.5),
  (12, 'lamp', 1, 120.5),
  (13, 'clip', 10, 0.01),
  (15, 'book', 3, 25.0),
  (16, 'lamp', 1, 33.333333),
  (17, 'desk', 1, 250.0),
  (18, 'pen', 5, 2.55);
)sql");
}

void BuildLargeDb(const std::filesystem::path& db, int rows) {
  std::ostringstream script;
  script << "CREATE TABLE items (id INTEGER PRIMARY KEY, grp INTEGER, price REAL, label TEXT);\n"
         << "BEGIN;\n";
  for (int i = 0; i < rows; ++i) {
    script << "INSERT INTO items VALUES (" << i << ", " << (i % 100) << ", " << (i % 997) * 0.25
           << ", 'item-" << i << "');\n";
  }
  script << "COMMIT;\nCREATE INDEX items_grp ON items(grp);\n";
  RunScript(db, script.str());
}

std::filesystem::path WriteDataset(const std::filesystem::path& dir,
                                   const std::vector<FixtureTask>& tasks) {
  std::filesystem::create_directories(dir);
  std::set<std::string> dbs;
  std::string lines;
  for (const FixtureTask& t : tasks) {
    nlohmann::json line = {{"task_id", t.task_id},
                           {"db_id", t.db_id},
                           {"question", t.question},
                           {"gold_sql", t.gold_sql}};
    if (!t.evidence.empty()) line["evidence"] = t.evidence;
    if (!t.difficulty.empty()) line["difficulty"] = t.difficulty;
    lines += line.dump() + "\n";
    dbs.insert(t.db_id);
  }
  for (const std::string& db : dbs) {
    std::filesystem::path file = dir / "databases" / db / (db + ".sqlite");
    if (std::filesystem::exists(file)) continue;
    std::filesystem::create_directories(file.parent_path());
    if (db == "schools") {
      BuildSchoolsDb(file);
    } else if (db == "shop") {
      BuildShopDb(file);
    } else {
      throw std::runtime_error("no fixture database named " + db);
    }
  }
  std::filesystem::path manifest = dir / "dev.jsonl";
  WriteText(manifest, lines);
  return manifest;
}

std::vector<FixtureTask> TwentyTasks() {
  return {
      {"s01", "schools",
       "What is the FRPM count for students aged 5-17 at the school with the highest average "
       "SAT reading score?",
       "FRPM count for ages 5-17 is `FRPM Count (Ages 5-17)`",
       "SELECT T2.`FRPM Count (Ages 5-17)` FROM satscores AS T1 INNER JOIN frpm AS T2 ON "
       "T1.cds = T2.CDSCode ORDER BY T1.AvgScrRead DESC LIMIT 1",
       "moderate"},
      {"s02", "schools", "How many schools are in Alameda county?", "",
       "SELECT COUNT(*) FROM frpm WHERE County = 'Alameda'", "simple"},
      {"s03", "schools", "List the names of charter schools.",
       "charter schools have `Charter School (Y/N)` = 1",
       "SELECT `School Name` FROM frpm WHERE `Charter School (Y/N)` = 1", "simple"},
      {"s04", "schools", "What is the average SAT math score across schools?", "",
       "SELECT AVG(AvgScrMath) FROM satscores", "simple"},
      {"s05", "schools", "Which schools had at least 500 SAT test takers?", "",
       "SELECT sname FROM satscores WHERE NumTstTakr >= 500", "simple"},
      {"s06", "schools", "How many schools does each county have?", "",
       "SELECT County, COUNT(*) FROM frpm GROUP BY County", "moderate"},
      {"s07", "schools", "What is the K-12 enrollment of the school with the lowest math score?",
       "", "SELECT f.`Enrollment (K-12)` FROM frpm f JOIN satscores s ON s.cds = f.CDSCode "
           "ORDER BY s.AvgScrMath ASC LIMIT 1",
       "moderate"},
      {"s08", "schools", "Which schools have no average reading score?", "",
       "SELECT sname FROM satscores WHERE AvgScrRead IS NULL", "simple"},
      {"s09", "schools", "What is the highest ratio of FRPM count to enrollment?",
       "ratio = `FRPM Count (Ages 5-17)` / `Enrollment (K-12)`",
       "SELECT MAX(`FRPM Count (Ages 5-17)` / `Enrollment (K-12)`) FROM frpm", "challenging"},
      {"s10", "schools", "How many SAT test takers are there in Fresno county in total?", "",
       "SELECT SUM(s.NumTstTakr) FROM satscores s JOIN frpm f ON f.CDSCode = s.cds WHERE "
       "f.County = 'Fresno'",
       "challenging"},
      {"p01", "shop", "How many customers live in Paris?", "",
       "SELECT COUNT(*) FROM customers WHERE city = 'Paris'", "simple"},
      {"p02", "shop", "What is the total amount of shipped orders?", "shipped means status = 'shipped'",
       "SELECT SUM(amount) FROM orders WHERE status = 'shipped'", "simple"},
      {"p03", "shop", "List the names of VIP customers.", "VIP customers have vip = 1",
       "SELECT name FROM customers WHERE vip = 1", "simple"},
      {"p04", "shop", "What is the average order amount for each customer id?", "",
       "SELECT customer_id, AVG(amount) FROM orders GROUP BY customer_id", "moderate"},
      {"p05", "shop", "Which orders have no note?", "", "SELECT id FROM orders WHERE note IS NULL",
       "simple"},
      {"p06", "shop", "Which distinct SKUs have been ordered?", "",
       "SELECT DISTINCT sku FROM items", "simple"},
      {"p07", "shop", "Which customer placed the largest single order?", "",
       "SELECT c.name FROM customers c JOIN orders o ON o.customer_id = c.id ORDER BY o.amount "
       "DESC LIMIT 1",
       "moderate"},
      {"p08", "shop", "What is the total quantity ordered for each SKU?", "",
       "SELECT sku, SUM(qty) FROM items GROUP BY sku", "moderate"},
      {"p09", "shop", "Which cities have more than one customer?", "",
       "SELECT city FROM customers WHERE city IS NOT NULL GROUP BY city HAVING COUNT(*) > 1",
       "challenging"},
      {"p10", "shop", "How many orders were cancelled?", "cancelled means status = 'cancelled'",
       "SELECT COUNT(*) FROM orders WHERE status = 'cancelled'", "simple"},
  };
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string FileSha256(const std::filesystem::path& path) {
  std::string data = ReadText(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace testing_support
