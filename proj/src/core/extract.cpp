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

#include "core/extract.hpp"

#include <cctype>
#include <vector>

#include "core/util.hpp"

namespace sqlpref {
namespace {

constexpr std::string_view kFence = "```";

enum class BlockKind { kSql, kBare, kOther };

struct Block {
  std::size_t open = 0;  // offset of the opening fence
  BlockKind kind = BlockKind::kBare;
  std::string_view body;
};

bool IsTagChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '+' ||
         c == '#' || c == '.';
}

Block Classify(std::size_t open, std::string_view raw) {
  std::size_t n = 0;
  while (n < raw.size() && IsTagChar(raw[n])) ++n;
  std::string_view word = raw.substr(0, n);
  Block block{open, BlockKind::kBare, raw};
  if (word.empty()) return block;
  bool sql = ToLower(word) == "sql";
  if (n == raw.size() || raw[n] == '\n' || raw[n] == '\r') {
    // Markdown info string on the fence line.
    block.kind = sql ? BlockKind::kSql : BlockKind::kOther;
    block.body = raw.substr(n);
  } else if (sql && std::isspace(static_cast<unsigned char>(raw[n]))) {
    // Inline form: ```sql SELECT 1```
    block.kind = BlockKind::kSql;
    block.body = raw.substr(n);
  }
  return block;
}

}  // namespace

std::string ExtractionStatusName(ExtractionStatus status) {
  switch (status) {
    case ExtractionStatus::kOk: return "ok";
    case ExtractionStatus::kNoCodeBlock: return "no_code_block";
    case ExtractionStatus::kEmptyBlock: return "empty_block";
  }
  return "no_code_block";
}

ExtractionStatus ParseExtractionStatus(const std::string& name) {
  if (name == "ok") return ExtractionStatus::kOk;
  if (name == "empty_block") return ExtractionStatus::kEmptyBlock;
  return ExtractionStatus::kNoCodeBlock;
}

std::size_t WhitespaceTokenCounter::Count(std::string_view text) const {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

const TokenCounter& DefaultTokenCounter() {
  static const WhitespaceTokenCounter counter;
  return counter;
}

std::size_t CountCotTokens(std::string_view text, const TokenCounter& counter) {
  return counter.Count(text);
}

ExtractionResult ExtractFinalSql(std::string_view text, const ExtractOptions& options,
                                 const TokenCounter& counter) {
  std::vector<std::size_t> fences;
  for (std::size_t pos = text.find(kFence); pos != std::string_view::npos;
       pos = text.find(kFence, pos + kFence.size())) {
    fences.push_back(pos);
  }

  ExtractionResult result;
  auto no_block = [&] {
    result.status = ExtractionStatus::kNoCodeBlock;
    result.cot_text = std::string(text);
    result.cot_token_count = counter.Count(result.cot_text);
    return result;
  };

  if (fences.empty() && options.bare_sql_fallback) {
    std::string sql = Trim(text);
    if (sql.empty()) return no_block();
    result.status = ExtractionStatus::kOk;
    result.final_sql = std::move(sql);
    return result;
  }
  // An odd fence count means the last block never closed: a truncated
  // generation, discarded as a whole.
  if (fences.empty() || fences.size() % 2 != 0) return no_block();

  const Block* chosen = nullptr;
  const Block* last_bare = nullptr;
  std::vector<Block> blocks;
  blocks.reserve(fences.size() / 2);
  for (std::size_t i = 0; i + 1 < fences.size(); i += 2) {
    std::size_t body_begin = fences[i] + kFence.size();
    blocks.push_back(Classify(fences[i], text.substr(body_begin, fences[i + 1] - body_begin)));
  }
  for (const Block& block : blocks) {
    if (block.kind == BlockKind::kSql) chosen = &block;
    if (block.kind == BlockKind::kBare) last_bare = &block;
  }
  if (!chosen) chosen = last_bare;
  if (!chosen) return no_block();

  result.cot_text = std::string(text.substr(0, chosen->open));
  result.cot_token_count = counter.Count(result.cot_text);
  std::string sql = Trim(chosen->body);
  if (sql.empty()) {
    result.status = ExtractionStatus::kEmptyBlock;
    return result;
  }
  result.status = ExtractionStatus::kOk;
  result.final_sql = std::move(sql);
  return result;
}

}  // namespace sqlpref
