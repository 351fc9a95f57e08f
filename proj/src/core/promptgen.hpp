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

#ifndef SQLPREF_CORE_PROMPTGEN_HPP_
#define SQLPREF_CORE_PROMPTGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "core/dataset.hpp"

namespace sqlpref {

enum class PromptStyle { kNoCot, kSimpleCot, kComplexCot };

std::string PromptStyleName(PromptStyle style);
PromptStyle ParsePromptStyle(const std::string& name);

struct Exemplar {
  std::string task_id;
  PromptStyle style = PromptStyle::kComplexCot;
  std::string user_text;
  std::string assistant_text;

  bool operator==(const Exemplar&) const = default;
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
  std::vector<Exemplar> exemplars;
  PromptStyle style = PromptStyle::kComplexCot;

  bool operator==(const RenderedPrompt&) const = default;

  // Fields that identify the prompt for caching.
  Json ToJson() const;
};

// The seven template texts (system/user per style plus the complex-CoT
// answer skeleton), keyed by "<style>.<part>".
class TemplateSet {
 public:
  // Templates compiled into the library.
  static const TemplateSet& Builtin();
  // Loads <dir>/<style>.<part>.txt, falling back to the builtin text for
  // files that are absent.
  static TemplateSet FromDirectory(const std::filesystem::path& dir);

  const std::string& Get(const std::string& name) const;
  // sha256 over all template names and bodies; recorded in round manifests.
  std::string Hash() const;

 private:
  std::map<std::string, std::string> texts_;
};

struct RenderOptions {
  bool include_evidence = true;
  // When false the complex-CoT answer skeleton is omitted from the system
  // text and the structure is conveyed by exemplars only.
  bool skeleton_in_system = true;
};

constexpr std::size_t kMaxExemplars = 8;

// Exemplars whose text contains the task's gold SQL are dropped so the gold
// query never reaches the model.
RenderedPrompt RenderPrompt(const Task& task, const std::string& schema_text, PromptStyle style,
                            const std::vector<Exemplar>& exemplars,
                            const RenderOptions& options = {},
                            const TemplateSet& templates = TemplateSet::Builtin());

// Seeded draw of k distinct exemplars; throws Error(kInvalidArgument) when
// k exceeds the pool.
std::vector<Exemplar> PickExemplars(const std::vector<Exemplar>& pool, std::size_t k,
                                    std::uint64_t seed);

// JSON-lines exemplar pool: {task_id, style, user_text, assistant_text}.
std::vector<Exemplar> LoadExemplars(const std::filesystem::path& path);

}  // namespace sqlpref

#endif  // SQLPREF_CORE_PROMPTGEN_HPP_
