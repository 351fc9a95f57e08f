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

// sqlpref command-line tool.
//
// Exit codes: 0 success, 1 operational failure, 2 usage error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sqlpref/sqlpref.h"

namespace {

using Json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string plan;
  std::vector<std::string> overrides;
  bool dry_run = false;
  bool json = false;
  bool quiet = false;

  bool strict = false;
  std::size_t round = 0;
  std::vector<std::size_t> rounds;
  bool resume = false;
  std::string strategy;
  std::string kind;
  std::string predictions;
  std::string prediction_kind = "auto";
  std::string split;
  bool greedy = false;
};

int ExitCodeFor(sqlpref_status status) {
  if (status == SQLPREF_OK) return kExitOk;
  if (status == SQLPREF_ERR_INVALID_ARGUMENT || status == SQLPREF_ERR_PLAN) return kExitUsage;
  return kExitFailure;
}

int Report(sqlpref_status status) {
  std::fprintf(stderr, "sqlpref: error (%s): %s\n", sqlpref_status_name(status),
               sqlpref_last_error());
  return ExitCodeFor(status);
}

// --set key=value; the value is parsed as JSON when possible, else taken as
// a string.
bool BuildOverrides(const std::vector<std::string>& items, std::string* out) {
  Json overrides = Json::object();
  for (const std::string& item : items) {
    std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "sqlpref: --set expects key=value, got '%s'\n", item.c_str());
      return false;
    }
    std::string value = item.substr(eq + 1);
    Json parsed = Json::parse(value, nullptr, false);
    overrides[item.substr(0, eq)] = parsed.is_discarded() ? Json(value) : parsed;
  }
  *out = overrides.dump();
  return true;
}

Json TakeJson(char* text) {
  Json json = Json::parse(text);
  sqlpref_free(text);
  return json;
}

void PrintActions(const Json& description) {
  std::printf("dry run: %s\n", description.value("verb", "").c_str());
  for (const auto& action : description.at("actions")) {
    std::printf("  would %s\n", action.get<std::string>().c_str());
  }
}

int Run(const std::string& verb, const Options& opt) {
  sqlpref_set_quiet(opt.quiet ? 1 : 0);
  std::string overrides;
  if (!BuildOverrides(opt.overrides, &overrides)) return kExitUsage;

  sqlpref_run* run = nullptr;
  sqlpref_status status =
      sqlpref_run_open(opt.plan.c_str(), overrides.c_str(), opt.dry_run ? 1 : 0, &run);
  if (status != SQLPREF_OK) return Report(status);

  char* raw = nullptr;
  if (verb == "validate") {
    status = sqlpref_validate(run, &raw);
  } else if (verb == "generate") {
    status = sqlpref_generate(run, opt.round, opt.resume ? 1 : 0, &raw);
  } else if (verb == "pair") {
    status = sqlpref_pair(run, opt.round, opt.strategy.empty() ? nullptr : opt.strategy.c_str(),
                          &raw);
  } else if (verb == "export") {
    std::vector<std::size_t> rounds = opt.rounds.empty() ? std::vector<std::size_t>{opt.round}
                                                         : opt.rounds;
    status = sqlpref_export(run, rounds.data(), rounds.size(), opt.kind.c_str(), &raw);
  } else if (verb == "eval") {
    if (opt.greedy) {
      status = sqlpref_eval_greedy(run, opt.round, &raw);
    } else {
      status = sqlpref_eval_predictions(run, opt.predictions.c_str(), opt.prediction_kind.c_str(),
                                        opt.split.empty() ? nullptr : opt.split.c_str(), &raw);
    }
  } else if (verb == "report") {
    status = sqlpref_report(run, &raw);
  }
  if (status != SQLPREF_OK) {
    int code = Report(status);
    sqlpref_run_close(run);
    return code;
  }
  Json out = TakeJson(raw);
  sqlpref_run_close(run);

  if (opt.json) {
    std::printf("%s\n", out.dump(2).c_str());
    return kExitOk;
  }
  if (opt.dry_run) {
    PrintActions(out);
    return kExitOk;
  }
  if (verb == "validate") {
    std::size_t quarantined = out.at("quarantined").size();
    std::printf("gold queries: %zu ok, %zu quarantined\n", out.at("n_ok").get<std::size_t>(),
                quarantined);
    for (const auto& q : out.at("quarantined")) {
      std::printf("  %s: %s %s\n", q.at("task_id").get<std::string>().c_str(),
                  q.at("status").get<std::string>().c_str(),
                  q.at("error").get<std::string>().c_str());
    }
    std::printf("%s\n", out.at("report_path").get<std::string>().c_str());
    if (opt.strict && quarantined > 0) return kExitFailure;
  } else if (verb == "generate") {
    const Json& totals = out.at("manifest").at("totals");
    std::printf("%s: %zu candidates, %zu correct, %zu incorrect\n",
                out.at("manifest").at("round_id").get<std::string>().c_str(),
                totals.at("n_candidates").get<std::size_t>(),
                totals.at("n_correct").get<std::size_t>(),
                totals.at("n_incorrect").get<std::size_t>());
    std::printf("%s\n", out.at("manifest_path").get<std::string>().c_str());
  } else if (verb == "pair") {
    std::printf("strategy %s: %zu pairs over %zu tasks\n",
                out.at("strategy").get<std::string>().c_str(),
                out.at("pairs_emitted").get<std::size_t>(),
                out.at("tasks_with_pairs").get<std::size_t>());
    std::printf("%s\n", out.at("pair_file").get<std::string>().c_str());
  } else if (verb == "export") {
    std::printf("%zu %s records, sha256 %s\n%s\n", out.at("records").get<std::size_t>(),
                out.at("kind").get<std::string>().c_str(),
                out.at("sha256").get<std::string>().c_str(),
                out.at("file").get<std::string>().c_str());
  } else if (verb == "eval") {
    std::printf("%s", out.at("table").get<std::string>().c_str());
    std::printf("EX %.2f  Valid %.2f  (n=%zu)\n", out.at("ex_percent").get<double>(),
                out.at("valid_percent").get<double>(), out.at("n_tasks").get<std::size_t>());
  } else if (verb == "report") {
    for (const auto& row : out.at("rows")) {
      auto show = [](const Json& v) { return v.is_null() ? std::string("-") : v.dump(); };
      std::printf("%-10s %-10s pairs=%s tasks_with_pairs=%s mean_cot=%.1f\n",
                  row.at("round_id").get<std::string>().c_str(),
                  row.at("kind").get<std::string>().c_str(), show(row.at("pairs_emitted")).c_str(),
                  show(row.at("tasks_with_pairs")).c_str(),
                  row.at("mean_cot_tokens").get<double>());
    }
    for (const auto& [name, path] : out.at("files").items()) {
      std::printf("%s\n", path.get<std::string>().c_str());
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Execution-verified text-to-SQL preference data pipeline"};
  app.set_version_flag("--version", std::string(sqlpref_version()));
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--plan", opt.plan, "run plan (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", opt.overrides, "override a plan field: dotted.key=value");
    sub->add_flag("--dry-run", opt.dry_run, "print the would-be actions and change nothing");
    sub->add_flag("--json", opt.json, "print the full result document as JSON");
    sub->add_flag("-q,--quiet", opt.quiet, "suppress warnings");
  };

  CLI::App* validate = app.add_subcommand("validate", "execute every gold query");
  add_common(validate);
  validate->add_flag("--strict", opt.strict, "exit 1 if any gold query fails");

  CLI::App* generate = app.add_subcommand("generate", "sample, extract and label one round");
  add_common(generate);
  generate->add_option("--round", opt.round, "round index in the plan (0-based)")->required();
  generate->add_flag("--resume", opt.resume, "re-run an already generated round from cache");

  CLI::App* pair = app.add_subcommand("pair", "select preference pairs for a round");
  add_common(pair);
  pair->add_option("--round", opt.round, "round index in the plan (0-based)")->required();
  pair->add_option("--strategy", opt.strategy, "override the pairing strategy")
      ->check(CLI::IsMember({"furthest", "nearest", "random"}));

  CLI::App* export_cmd = app.add_subcommand("export", "write SFT or DPO JSON-lines");
  add_common(export_cmd);
  export_cmd->add_option("--kind", opt.kind, "sft or dpo")
      ->required()
      ->check(CLI::IsMember({"sft", "dpo"}));
  export_cmd->add_option("--round", opt.rounds, "round index; repeat to combine rounds")
      ->required();

  CLI::App* eval = app.add_subcommand("eval", "score predictions (EX% / Valid%)");
  add_common(eval);
  auto* predictions = eval->add_option("--predictions", opt.predictions,
                                       "JSON-lines file of {task_id, output}");
  auto* greedy = eval->add_flag("--greedy", opt.greedy,
                                "sample one temperature-0 completion per task and score it");
  predictions->excludes(greedy);
  eval->add_option("--round", opt.round, "round whose endpoint --greedy samples");
  eval->add_option("--kind", opt.prediction_kind, "prediction kind")
      ->check(CLI::IsMember({"auto", "sql", "completion"}));
  eval->add_option("--split", opt.split, "restrict to one split")
      ->check(CLI::IsMember({"train", "dev", "test"}));

  CLI::App* report = app.add_subcommand("report", "trend table and charts across rounds");
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (eval->parsed() && !opt.greedy && opt.predictions.empty()) {
    std::fprintf(stderr, "sqlpref eval: give --predictions FILE or --greedy\n");
    return kExitUsage;
  }
  CLI::App* chosen = app.get_subcommands().front();
  return Run(chosen->get_name(), opt);
}
