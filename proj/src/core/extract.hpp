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

// Final-SQL extraction from model completions. The final query is the last
// fenced code block; everything before its opening fence is the reasoning.

#ifndef SQLPREF_CORE_EXTRACT_HPP_
#define SQLPREF_CORE_EXTRACT_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace sqlpref {

enum class ExtractionStatus { kOk, kNoCodeBlock, kEmptyBlock };

std::string ExtractionStatusName(ExtractionStatus status);
ExtractionStatus ParseExtractionStatus(const std::string& name);

class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::size_t Count(std::string_view text) const = 0;
  virtual std::string Name() const = 0;
};

// Whitespace-delimited word count.
class WhitespaceTokenCounter final : public TokenCounter {
 public:
  std::size_t Count(std::string_view text) const override;
  std::string Name() const override { return "whitespace"; }
};

const TokenCounter& DefaultTokenCounter();

struct ExtractionResult {
  std::optional<std::string> final_sql;
  std::string cot_text;
  std::size_t cot_token_count = 0;
  ExtractionStatus status = ExtractionStatus::kNoCodeBlock;
};

struct ExtractOptions {
  // Treat a completion without any fence as bare SQL. Only honored when the
  // caller sets it, which the orchestrator does for no_cot runs on request.
  bool bare_sql_fallback = false;
};

ExtractionResult ExtractFinalSql(std::string_view text, const ExtractOptions& options = {},
                                 const TokenCounter& counter = DefaultTokenCounter());

std::size_t CountCotTokens(std::string_view text,
                           const TokenCounter& counter = DefaultTokenCounter());

}  // namespace sqlpref

#endif  // SQLPREF_CORE_EXTRACT_HPP_
