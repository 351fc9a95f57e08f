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

// Content-addressed record store.
//
// Each namespace is an append-only log of JSON lines under the store
// directory (<ns>.log) plus an index (<ns>.idx) mapping fingerprints to log
// offsets. Log lines are self-describing envelopes
//
//   {"key": <fingerprint>, "round_id": ..., "task_id": ..., "sample_index": ...,
//    "record": {...}}
//
// so the index can always be rebuilt from the log. A torn final line (crash
// mid-append) is ignored on open. Keys are write-once: re-putting identical
// bytes is a no-op, different bytes raise an integrity error.

#ifndef SQLPREF_CORE_STORE_HPP_
#define SQLPREF_CORE_STORE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "core/util.hpp"

namespace sqlpref {

enum class Namespace { kCompletion, kOutcome, kLabel, kPair, kManifest };
constexpr std::size_t kNamespaceCount = 5;

std::string NamespaceName(Namespace ns);

struct StoreKey {
  Namespace ns = Namespace::kCompletion;
  std::string fingerprint;  // 256-bit hex
};

// Ordering and filtering attributes carried alongside a record.
struct ScanFields {
  std::string round_id;
  std::string task_id;
  std::int64_t sample_index = -1;
};

struct StoreOptions {
  bool fsync = true;
  bool read_only = false;
};

enum class PutResult { kStored, kAlreadyPresent };

class Store {
 public:
  Store(std::filesystem::path dir, StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  PutResult Put(const StoreKey& key, const Json& record, const ScanFields& fields = {});
  std::optional<Json> Get(const StoreKey& key) const;
  bool Contains(const StoreKey& key) const;

  // Records of `ns` whose round_id matches (all rounds when empty), ordered
  // by (task_id, sample_index, fingerprint).
  std::vector<Json> Scan(Namespace ns, const std::string& round_id = {}) const;
  std::size_t Count(Namespace ns) const;

  const std::filesystem::path& dir() const { return dir_; }
  bool read_only() const { return options_.read_only; }

 private:
  struct Entry {
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    std::string record_sha;
    ScanFields fields;
  };
  struct Shard {
    mutable std::shared_mutex mutex;
    std::map<std::string, Entry> index;
    int log_fd = -1;
    int idx_fd = -1;
    std::uint64_t log_size = 0;
  };

  void OpenShard(Namespace ns);
  std::filesystem::path LogPath(Namespace ns) const;
  std::filesystem::path IndexPath(Namespace ns) const;
  Json ReadEnvelope(const Shard& shard, const Entry& entry, Namespace ns) const;

  std::filesystem::path dir_;
  StoreOptions options_;
  std::array<std::unique_ptr<Shard>, kNamespaceCount> shards_;
};

}  // namespace sqlpref

#endif  // SQLPREF_CORE_STORE_HPP_
