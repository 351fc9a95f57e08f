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

#include "core/promptgen.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace sqlpref {
namespace detail {
const std::map<std::string, std::string>& EmbeddedTemplates();
}  // namespace detail

namespace {

std::string TrimTrailing(std::string text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  return text;
}

// Template files may open with "%%" comment lines (license, notes); they are
// dropped along with the blank lines that follow them.
std::string TemplateBody(const std::string& file_text) {
  std::size_t pos = 0;
  while (file_text.compare(pos, 2, "%%") == 0) {
    std::size_t nl = file_text.find('\n', pos);
    if (nl == std::string::npos) return "";
    pos = nl + 1;
  }
  if (pos > 0) {
    while (pos < file_text.size() && file_text[pos] == '\n') ++pos;
  }
  return TrimTrailing(file_text.substr(pos));
}

void ReplaceAll(std::string& text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Substitution happens line by line so that a line whose placeholder has no
// value (an absent evidence hint) disappears entirely.
std::string Fill(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::istringstream lines(tmpl);
  std::string line;
  std::string out;
  bool first = true;
  while (std::getline(lines, line)) {
    bool drop = false;
    for (const auto& [key, value] : values) {
      std::string placeholder = "{" + key + "}";
      if (line.find(placeholder) == std::string::npos) continue;
      if (value.empty() && key == "Evidence") {
        drop = true;
        break;
      }
    }
    if (drop) continue;
    // Values may span several lines (the schema), so substitution happens
    // after the line has been accepted.
    for (const auto& [key, value] : values) ReplaceAll(line, "{" + key + "}", value);
    if (!first) out.push_back('\n');
    out += line;
    first = false;
  }
  return out;
}

}  // namespace

std::string PromptStyleName(PromptStyle style) {
  switch (style) {
    case PromptStyle::kNoCot: return "no_cot";
    case PromptStyle::kSimpleCot: return "simple_cot";
    case PromptStyle::kComplexCot: return "complex_cot";
  }
  return "complex_cot";
}

PromptStyle ParsePromptStyle(const std::string& name) {
  std::string lower = ToLower(name);
  if (lower == "no_cot") return PromptStyle::kNoCot;
  if (lower == "simple_cot") return PromptStyle::kSimpleCot;
  if (lower == "complex_cot") return PromptStyle::kComplexCot;
  throw Error(ErrorCode::kInvalidArgument, "unknown prompt style '" + name + "'");
}

Json RenderedPrompt::ToJson() const {
  Json shots = Json::array();
  for (const Exemplar& e : exemplars) {
    shots.push_back({{"user", e.user_text}, {"assistant", e.assistant_text}});
  }
  return {{"system", system_text},
          {"user", user_text},
          {"exemplars", shots},
          {"style", PromptStyleName(style)}};
}

const TemplateSet& TemplateSet::Builtin() {
  static const TemplateSet builtin = [] {
    TemplateSet set;
    for (const auto& [name, body] : detail::EmbeddedTemplates()) {
      set.texts_[name] = TemplateBody(body);
    }
    return set;
  }();
  return builtin;
}

TemplateSet TemplateSet::FromDirectory(const std::filesystem::path& dir) {
  TemplateSet set = Builtin();
  for (auto& [name, body] : set.texts_) {
    std::filesystem::path file = dir / (name + ".txt");
    if (std::filesystem::is_regular_file(file)) body = TemplateBody(ReadFile(file));
  }
  return set;
}

const std::string& TemplateSet::Get(const std::string& name) const {
  auto it = texts_.find(name);
  if (it == texts_.end()) throw Error(ErrorCode::kInternal, "missing template " + name);
  return it->second;
}

std::string TemplateSet::Hash() const {
  Json all = Json::object();
  for (const auto& [name, body] : texts_) all[name] = body;
  return Fingerprint(all);
}

RenderedPrompt RenderPrompt(const Task& task, const std::string& schema_text, PromptStyle style,
                            const std::vector<Exemplar>& exemplars, const RenderOptions& options,
                            const TemplateSet& templates) {
  if (Trim(schema_text).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "task '" + task.task_id + "': empty schema text");
  }
  if (exemplars.size() > kMaxExemplars) {
    throw Error(ErrorCode::kInvalidArgument,
                "at most " + std::to_string(kMaxExemplars) + " exemplars per prompt");
  }
  std::string name = PromptStyleName(style);
  RenderedPrompt prompt;
  prompt.style = style;
  prompt.system_text = templates.Get(name + ".system");
  if (style == PromptStyle::kComplexCot && options.skeleton_in_system) {
    prompt.system_text += "\n\n" + templates.Get(name + ".skeleton");
  }
  std::string evidence =
      options.include_evidence && task.evidence ? Trim(*task.evidence) : std::string();
  prompt.user_text = Fill(templates.Get(name + ".user"), {{"Schema", Trim(schema_text)},
                                                          {"Question", Trim(task.question)},
                                                          {"Evidence", evidence}});

  std::string gold = Trim(task.gold_sql);
  for (const Exemplar& exemplar : exemplars) {
    if (exemplar.user_text.find(gold) != std::string::npos ||
        exemplar.assistant_text.find(gold) != std::string::npos) {
      continue;
    }
    prompt.exemplars.push_back(exemplar);
  }
  return prompt;
}

std::vector<Exemplar> PickExemplars(const std::vector<Exemplar>& pool, std::size_t k,
                                    std::uint64_t seed) {
  if (k > pool.size()) {
    throw Error(ErrorCode::kInvalidArgument, "requested " + std::to_string(k) +
                                                 " exemplars from a pool of " +
                                                 std::to_string(pool.size()));
  }
  // Partial Fisher-Yates over indices; std::mt19937_64 output is fixed by
  // the standard, so a seed reproduces the draw on every platform.
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::vector<Exemplar> picked;
  picked.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (order.size() - i));
    std::swap(order[i], order[j]);
    picked.push_back(pool[order[i]]);
  }
  return picked;
}

std::vector<Exemplar> LoadExemplars(const std::filesystem::path& path) {
  std::vector<Exemplar> pool;
  for (const Json& record : ReadJsonLines(path)) {
    Exemplar e;
    e.task_id = record.value("task_id", "");
    e.style = ParsePromptStyle(record.value("style", "complex_cot"));
    e.user_text = record.at("user_text").get<std::string>();
    e.assistant_text = record.at("assistant_text").get<std::string>();
    pool.push_back(std::move(e));
  }
  return pool;
}

}  // namespace sqlpref
