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

#ifndef SQLPREF_CORE_PAIRS_HPP_
#define SQLPREF_CORE_PAIRS_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/executor.hpp"
#include "core/extract.hpp"

namespace sqlpref {

// One labeled sample of one task in one round.
struct Candidate {
  std::string task_id;
  std::string round_id;
  std::int64_t sample_index = 0;
  std::string text;  // full completion
  std::optional<std::string> final_sql;
  ExtractionStatus extraction = ExtractionStatus::kNoCodeBlock;
  std::size_t cot_token_count = 0;
  CandidateLabel label = CandidateLabel::kExtractionFailed;
  bool valid = false;
  std::string exec_status;  // empty when never executed

  Json ToJson() const;
  static Candidate FromJson(const Json& json);
};

struct CandidatePools {
  std::string task_id;
  std::vector<Candidate> wins;    // label correct, sorted by sample_index
  std::vector<Candidate> losses;  // incorrect or invalid_sql
};

struct PoolOptions {
  bool invalid_as_rejected = true;
};

// Dedup key: whitespace-collapsed final SQL.
std::string DedupKey(const Candidate& candidate);

CandidatePools BuildPools(std::vector<Candidate> candidates, const PoolOptions& options = {});

// Character-level Levenshtein distance between the whitespace-collapsed forms
// of `a` and `b`. Characters are UTF-8 code points; invalid bytes count as
// single characters.
std::size_t EditDistance(std::string_view a, std::string_view b);

enum class PairStrategy { kFurthest, kNearest, kRandom };
std::string PairStrategyName(PairStrategy strategy);
PairStrategy ParsePairStrategy(const std::string& name);

struct PreferencePair {
  std::string task_id;
  std::string round_id;
  Candidate chosen;
  Candidate rejected;
  std::size_t distance = 0;
  PairStrategy strategy = PairStrategy::kFurthest;

  Json ToJson() const;
  static PreferencePair FromJson(const Json& json);
};

// Picks k pairs from wins x losses. Furthest takes the largest distances,
// nearest the smallest, random a seeded uniform draw; ties and output order
// follow (chosen.sample_index, rejected.sample_index) ascending.
std::vector<PreferencePair> SelectPairs(const CandidatePools& pools, PairStrategy strategy,
                                        std::size_t k_per_task, std::uint64_t seed = 0);

enum class RoundKind { kSynthesis, kOffPolicy, kOnPolicy };
std::string RoundKindName(RoundKind kind);
RoundKind ParseRoundKind(const std::string& name);
PairStrategy DefaultStrategy(RoundKind kind);

struct PairTally {
  std::size_t tasks_total = 0;
  std::size_t tasks_with_pairs = 0;
  std::size_t pairs_emitted = 0;
  std::map<std::string, std::size_t> per_task;
};

struct PairRoundResult {
  PairStrategy strategy = PairStrategy::kFurthest;
  std::vector<PreferencePair> pairs;  // task_id order
  PairTally tally;
};

struct PairRoundOptions {
  std::optional<PairStrategy> strategy_override;
  std::size_t k_per_task = 1;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

PairRoundResult PairRound(const std::vector<CandidatePools>& pools, RoundKind kind,
                          const PairRoundOptions& options);

}  // namespace sqlpref

#endif  // SQLPREF_CORE_PAIRS_HPP_
