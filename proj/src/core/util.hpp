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

#ifndef SQLPREF_CORE_UTIL_HPP_
#define SQLPREF_CORE_UTIL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sqlpref {

using Json = nlohmann::json;

// Error categories surfaced through the C API as status codes.
enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kPlan,
  kDataset,
  kIntegrity,
  kEndpoint,
  kVerification,
  kLocked,
  kPrecondition,
  kInternal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Lowercase hex SHA-256 of `data`.
std::string Sha256Hex(std::string_view data);
// SHA-256 over the full contents of a file.
std::string Sha256File(const std::filesystem::path& path);

// Canonical serialization: object keys sorted, no whitespace. Two Json values
// that compare equal always serialize to the same bytes.
std::string CanonicalDump(const Json& value);
std::string Fingerprint(const Json& causal_inputs);

std::string ReadFile(const std::filesystem::path& path);
// write-temp, fsync, rename.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view data);

std::vector<Json> ReadJsonLines(const std::filesystem::path& path);

// Collapses runs of whitespace to one space and trims both ends.
std::string CollapseWhitespace(std::string_view text);
std::string Trim(std::string_view text);
std::string ToLower(std::string_view text);

// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
// exception thrown by any call is rethrown after all workers join.
void ParallelFor(std::size_t count, std::size_t workers,
                 const std::function<void(std::size_t)>& fn);

// 64-bit seed derived from a base seed and a label (e.g. a task id).
std::uint64_t DeriveSeed(std::uint64_t base, std::string_view label);

std::string IsoTimestampNow();

void LogWarning(const std::string& message);
void LogInfo(const std::string& message);
void SetLogQuiet(bool quiet);

}  // namespace sqlpref

#endif  // SQLPREF_CORE_UTIL_HPP_
