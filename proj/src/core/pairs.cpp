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

#include "core/pairs.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

namespace sqlpref {
namespace {

std::vector<char32_t> DecodeUtf8(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    auto byte = static_cast<unsigned char>(text[i]);
    std::size_t length = byte < 0x80 ? 1 : (byte >> 5) == 0x6 ? 2 : (byte >> 4) == 0xe ? 3
                                          : (byte >> 3) == 0x1e ? 4 : 0;
    bool valid = length > 0 && i + length <= text.size();
    for (std::size_t k = 1; valid && k < length; ++k) {
      valid = (static_cast<unsigned char>(text[i + k]) & 0xc0) == 0x80;
    }
    if (!valid) {
      // Map stray bytes outside the code point range so they never collide
      // with real characters.
      out.push_back(0x110000u + byte);
      ++i;
      continue;
    }
    char32_t cp = length == 1 ? byte : byte & (0xff >> (length + 1));
    for (std::size_t k = 1; k < length; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(text[i + k]) & 0x3f);
    }
    out.push_back(cp);
    i += length;
  }
  return out;
}

struct ScoredPair {
  std::size_t win = 0;
  std::size_t loss = 0;
  std::size_t distance = 0;
};

}  // namespace

Json Candidate::ToJson() const {
  return {{"task_id", task_id},
          {"round_id", round_id},
          {"sample_index", sample_index},
          {"text", text},
          {"final_sql", final_sql ? Json(*final_sql) : Json(nullptr)},
          {"extraction", ExtractionStatusName(extraction)},
          {"cot_token_count", cot_token_count},
          {"label", CandidateLabelName(label)},
          {"valid", valid},
          {"exec_status", exec_status}};
}

Candidate Candidate::FromJson(const Json& json) {
  Candidate c;
  c.task_id = json.at("task_id").get<std::string>();
  c.round_id = json.value("round_id", "");
  c.sample_index = json.at("sample_index").get<std::int64_t>();
  c.text = json.value("text", "");
  if (json.contains("final_sql") && json["final_sql"].is_string()) {
    c.final_sql = json["final_sql"].get<std::string>();
  }
  c.extraction = ParseExtractionStatus(json.value("extraction", "no_code_block"));
  c.cot_token_count = json.value("cot_token_count", std::size_t{0});
  c.label = ParseCandidateLabel(json.value("label", "extraction_failed"));
  c.valid = json.value("valid", false);
  c.exec_status = json.value("exec_status", "");
  return c;
}

std::string DedupKey(const Candidate& candidate) {
  return CollapseWhitespace(candidate.final_sql.value_or(""));
}

CandidatePools BuildPools(std::vector<Candidate> candidates, const PoolOptions& options) {
  CandidatePools pools;
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.sample_index < b.sample_index;
                   });
  if (!candidates.empty()) pools.task_id = candidates.front().task_id;

  std::set<std::string> win_keys;
  std::set<std::string> loss_keys;
  for (const Candidate& c : candidates) {
    if (c.label == CandidateLabel::kCorrect && win_keys.insert(DedupKey(c)).second) {
      pools.wins.push_back(c);
    }
  }
  for (const Candidate& c : candidates) {
    bool eligible = c.label == CandidateLabel::kIncorrect ||
                    (options.invalid_as_rejected && c.label == CandidateLabel::kInvalidSql);
    if (!eligible) continue;
    std::string key = DedupKey(c);
    // The same SQL can never sit on both sides of a pair.
    if (win_keys.count(key)) continue;
    if (loss_keys.insert(key).second) pools.losses.push_back(c);
  }
  return pools;
}

std::size_t EditDistance(std::string_view a, std::string_view b) {
  std::vector<char32_t> s = DecodeUtf8(CollapseWhitespace(a));
  std::vector<char32_t> t = DecodeUtf8(CollapseWhitespace(b));
  if (s.size() < t.size()) std::swap(s, t);
  std::vector<std::size_t> row(t.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= s.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      std::size_t above = row[j];
      std::size_t substitute = diagonal + (s[i - 1] == t[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitute});
      diagonal = above;
    }
  }
  return row[t.size()];
}

std::string PairStrategyName(PairStrategy strategy) {
  switch (strategy) {
    case PairStrategy::kFurthest: return "furthest";
    case PairStrategy::kNearest: return "nearest";
    case PairStrategy::kRandom: return "random";
  }
  return "furthest";
}

PairStrategy ParsePairStrategy(const std::string& name) {
  std::string lower = ToLower(name);
  if (lower == "furthest") return PairStrategy::kFurthest;
  if (lower == "nearest") return PairStrategy::kNearest;
  if (lower == "random") return PairStrategy::kRandom;
  throw Error(ErrorCode::kInvalidArgument, "unknown pair strategy '" + name + "'");
}

Json PreferencePair::ToJson() const {
  return {{"task_id", task_id},
          {"round_id", round_id},
          {"chosen", chosen.ToJson()},
          {"rejected", rejected.ToJson()},
          {"distance", distance},
          {"strategy", PairStrategyName(strategy)}};
}

PreferencePair PreferencePair::FromJson(const Json& json) {
  PreferencePair pair;
  pair.task_id = json.at("task_id").get<std::string>();
  pair.round_id = json.value("round_id", "");
  pair.chosen = Candidate::FromJson(json.at("chosen"));
  pair.rejected = Candidate::FromJson(json.at("rejected"));
  pair.distance = json.at("distance").get<std::size_t>();
  pair.strategy = ParsePairStrategy(json.at("strategy").get<std::string>());
  return pair;
}

std::vector<PreferencePair> SelectPairs(const CandidatePools& pools, PairStrategy strategy,
                                        std::size_t k_per_task, std::uint64_t seed) {
  if (k_per_task == 0) throw Error(ErrorCode::kInvalidArgument, "k_per_task must be >= 1");
  std::vector<PreferencePair> out;
  if (pools.wins.empty() || pools.losses.empty()) return out;

  // wins-major enumeration is already (chosen, rejected) index order.
  std::vector<ScoredPair> scored;
  scored.reserve(pools.wins.size() * pools.losses.size());
  for (std::size_t w = 0; w < pools.wins.size(); ++w) {
    for (std::size_t l = 0; l < pools.losses.size(); ++l) {
      scored.push_back({w, l,
                        EditDistance(pools.wins[w].final_sql.value_or(""),
                                     pools.losses[l].final_sql.value_or(""))});
    }
  }
  std::size_t k = std::min(k_per_task, scored.size());
  auto index_order = [](const ScoredPair& a, const ScoredPair& b) {
    return std::tie(a.win, a.loss) < std::tie(b.win, b.loss);
  };
  switch (strategy) {
    case PairStrategy::kFurthest:
      std::stable_sort(scored.begin(), scored.end(), [](const ScoredPair& a, const ScoredPair& b) {
        return a.distance > b.distance;
      });
      scored.resize(k);
      break;
    case PairStrategy::kNearest:
      std::stable_sort(scored.begin(), scored.end(), [](const ScoredPair& a, const ScoredPair& b) {
        return a.distance < b.distance;
      });
      scored.resize(k);
      break;
    case PairStrategy::kRandom: {
      std::mt19937_64 rng(seed);
      for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (scored.size() - i));
        std::swap(scored[i], scored[j]);
      }
      scored.resize(k);
      std::sort(scored.begin(), scored.end(), index_order);
      break;
    }
  }

  for (const ScoredPair& s : scored) {
    PreferencePair pair;
    pair.task_id = pools.task_id;
    pair.chosen = pools.wins[s.win];
    pair.rejected = pools.losses[s.loss];
    pair.round_id = pair.chosen.round_id;
    pair.distance = s.distance;
    pair.strategy = strategy;
    out.push_back(std::move(pair));
  }
  return out;
}

std::string RoundKindName(RoundKind kind) {
  switch (kind) {
    case RoundKind::kSynthesis: return "synthesis";
    case RoundKind::kOffPolicy: return "off_policy";
    case RoundKind::kOnPolicy: return "on_policy";
  }
  return "synthesis";
}

RoundKind ParseRoundKind(const std::string& name) {
  std::string lower = ToLower(name);
  if (lower == "synthesis" || lower == "sft-gen" || lower == "sft_gen") return RoundKind::kSynthesis;
  if (lower == "off_policy" || lower == "off-policy") return RoundKind::kOffPolicy;
  if (lower == "on_policy" || lower == "on-policy") return RoundKind::kOnPolicy;
  throw Error(ErrorCode::kInvalidArgument, "unknown round kind '" + name + "'");
}

PairStrategy DefaultStrategy(RoundKind kind) {
  return kind == RoundKind::kOnPolicy ? PairStrategy::kNearest : PairStrategy::kFurthest;
}

PairRoundResult PairRound(const std::vector<CandidatePools>& pools, RoundKind kind,
                          const PairRoundOptions& options) {
  PairRoundResult result;
  result.strategy = options.strategy_override.value_or(DefaultStrategy(kind));
  std::vector<const CandidatePools*> ordered;
  for (const auto& p : pools) ordered.push_back(&p);
  std::sort(ordered.begin(), ordered.end(),
            [](const CandidatePools* a, const CandidatePools* b) { return a->task_id < b->task_id; });

  std::vector<std::vector<PreferencePair>> per_task(ordered.size());
  ParallelFor(ordered.size(), options.workers, [&](std::size_t i) {
    per_task[i] = SelectPairs(*ordered[i], result.strategy, options.k_per_task,
                              DeriveSeed(options.seed, ordered[i]->task_id));
  });

  result.tally.tasks_total = ordered.size();
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    result.tally.per_task[ordered[i]->task_id] = per_task[i].size();
    if (!per_task[i].empty()) ++result.tally.tasks_with_pairs;
    result.tally.pairs_emitted += per_task[i].size();
    for (auto& pair : per_task[i]) result.pairs.push_back(std::move(pair));
  }
  return result;
}

}  // namespace sqlpref
