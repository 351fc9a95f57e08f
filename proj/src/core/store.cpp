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

#include "core/store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <mutex>
#include <tuple>

namespace sqlpref {
namespace {

void WriteAll(int fd, const std::string& data, const std::filesystem::path& path) {
  std::size_t written = 0;
  while (written < data.size()) {
    ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) throw Error(ErrorCode::kIo, "write failed on " + path.string());
    written += static_cast<std::size_t>(n);
  }
}

std::string ReadRange(int fd, std::uint64_t offset, std::uint64_t length) {
  std::string buffer(length, '\0');
  std::size_t done = 0;
  while (done < length) {
    ssize_t n = ::pread(fd, buffer.data() + done, length - done,
                        static_cast<off_t>(offset + done));
    if (n <= 0) throw Error(ErrorCode::kIo, "short read from store log");
    done += static_cast<std::size_t>(n);
  }
  return buffer;
}

std::uint64_t FileSize(int fd) {
  struct stat st {};
  if (::fstat(fd, &st) != 0) return 0;
  return static_cast<std::uint64_t>(st.st_size);
}

}  // namespace

std::string NamespaceName(Namespace ns) {
  switch (ns) {
    case Namespace::kCompletion: return "completion";
    case Namespace::kOutcome: return "outcome";
    case Namespace::kLabel: return "label";
    case Namespace::kPair: return "pair";
    case Namespace::kManifest: return "manifest";
  }
  return "unknown";
}

Store::Store(std::filesystem::path dir, StoreOptions options)
    : dir_(std::move(dir)), options_(options) {
  if (!options_.read_only) std::filesystem::create_directories(dir_);
  for (std::size_t i = 0; i < kNamespaceCount; ++i) {
    shards_[i] = std::make_unique<Shard>();
    OpenShard(static_cast<Namespace>(i));
  }
}

Store::~Store() {
  for (auto& shard : shards_) {
    if (!shard) continue;
    if (shard->log_fd >= 0) ::close(shard->log_fd);
    if (shard->idx_fd >= 0) ::close(shard->idx_fd);
  }
}

std::filesystem::path Store::LogPath(Namespace ns) const {
  return dir_ / (NamespaceName(ns) + ".log");
}

std::filesystem::path Store::IndexPath(Namespace ns) const {
  return dir_ / (NamespaceName(ns) + ".idx");
}

void Store::OpenShard(Namespace ns) {
  Shard& shard = *shards_[static_cast<std::size_t>(ns)];
  std::filesystem::path log_path = LogPath(ns);
  std::filesystem::path idx_path = IndexPath(ns);
  if (options_.read_only) {
    if (!std::filesystem::exists(log_path)) return;
    shard.log_fd = ::open(log_path.c_str(), O_RDONLY | O_CLOEXEC);
  } else {
    shard.log_fd = ::open(log_path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  }
  if (shard.log_fd < 0) throw Error(ErrorCode::kIo, "cannot open " + log_path.string());
  shard.log_size = FileSize(shard.log_fd);

  // Load the index, trusting only entries that lie inside the log.
  std::uint64_t indexed_end = 0;
  if (std::filesystem::exists(idx_path)) {
    std::string text = ReadFile(idx_path);
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) break;  // torn index line
      Json line;
      try {
        line = Json::parse(text.substr(pos, nl - pos));
      } catch (const Json::exception&) {
        break;
      }
      pos = nl + 1;
      Entry entry;
      entry.offset = line.at("o").get<std::uint64_t>();
      entry.length = line.at("n").get<std::uint64_t>();
      if (entry.offset + entry.length + 1 > shard.log_size) break;
      entry.record_sha = line.at("h").get<std::string>();
      entry.fields.round_id = line.at("r").get<std::string>();
      entry.fields.task_id = line.at("t").get<std::string>();
      entry.fields.sample_index = line.at("s").get<std::int64_t>();
      shard.index[line.at("k").get<std::string>()] = entry;
      indexed_end = std::max(indexed_end, entry.offset + entry.length + 1);
    }
  }

  if (!options_.read_only) {
    shard.idx_fd = ::open(idx_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (shard.idx_fd < 0) throw Error(ErrorCode::kIo, "cannot open " + idx_path.string());
  }

  // Recover log records written after the last index entry.
  if (indexed_end < shard.log_size) {
    std::string tail = ReadRange(shard.log_fd, indexed_end, shard.log_size - indexed_end);
    std::size_t pos = 0;
    std::uint64_t good_end = indexed_end;
    while (pos < tail.size()) {
      std::size_t nl = tail.find('\n', pos);
      if (nl == std::string::npos) break;
      Json envelope;
      try {
        envelope = Json::parse(tail.substr(pos, nl - pos));
      } catch (const Json::exception&) {
        break;
      }
      Entry entry;
      entry.offset = indexed_end + pos;
      entry.length = nl - pos;
      entry.record_sha = Sha256Hex(CanonicalDump(envelope.at("record")));
      entry.fields.round_id = envelope.value("round_id", "");
      entry.fields.task_id = envelope.value("task_id", "");
      entry.fields.sample_index = envelope.value("sample_index", std::int64_t{-1});
      std::string key = envelope.at("key").get<std::string>();
      shard.index[key] = entry;
      if (shard.idx_fd >= 0) {
        Json idx_line = {{"k", key}, {"o", entry.offset}, {"n", entry.length},
                         {"h", entry.record_sha}, {"r", entry.fields.round_id},
                         {"t", entry.fields.task_id}, {"s", entry.fields.sample_index}};
        WriteAll(shard.idx_fd, CanonicalDump(idx_line) + "\n", idx_path);
      }
      pos = nl + 1;
      good_end = indexed_end + pos;
    }
    if (good_end < shard.log_size && !options_.read_only) {
      // Drop a torn final record so later appends start on a line boundary.
      if (::ftruncate(shard.log_fd, static_cast<off_t>(good_end)) == 0) shard.log_size = good_end;
    }
  }
}

PutResult Store::Put(const StoreKey& key, const Json& record, const ScanFields& fields) {
  if (options_.read_only) {
    throw Error(ErrorCode::kIo, "store opened read-only: " + dir_.string());
  }
  std::string bytes = CanonicalDump(record);
  std::string sha = Sha256Hex(bytes);
  Shard& shard = *shards_[static_cast<std::size_t>(key.ns)];
  std::unique_lock lock(shard.mutex);
  if (auto it = shard.index.find(key.fingerprint); it != shard.index.end()) {
    if (it->second.record_sha == sha) return PutResult::kAlreadyPresent;
    throw Error(ErrorCode::kIntegrity, "conflicting re-put for key " + NamespaceName(key.ns) +
                                           "/" + key.fingerprint);
  }
  Json envelope = {{"key", key.fingerprint},
                   {"round_id", fields.round_id},
                   {"task_id", fields.task_id},
                   {"sample_index", fields.sample_index}};
  std::string line = CanonicalDump(envelope);
  // Splice the record bytes in verbatim to avoid a second serialization.
  line.pop_back();
  line += ",\"record\":" + bytes + "}\n";

  Entry entry;
  entry.offset = shard.log_size;
  entry.length = line.size() - 1;
  entry.record_sha = sha;
  entry.fields = fields;
  WriteAll(shard.log_fd, line, LogPath(key.ns));
  if (options_.fsync) ::fdatasync(shard.log_fd);
  shard.log_size += line.size();

  Json idx_line = {{"k", key.fingerprint}, {"o", entry.offset}, {"n", entry.length},
                   {"h", sha}, {"r", fields.round_id}, {"t", fields.task_id},
                   {"s", fields.sample_index}};
  WriteAll(shard.idx_fd, CanonicalDump(idx_line) + "\n", IndexPath(key.ns));
  shard.index.emplace(key.fingerprint, std::move(entry));
  return PutResult::kStored;
}

Json Store::ReadEnvelope(const Shard& shard, const Entry& entry, Namespace ns) const {
  std::string line = ReadRange(shard.log_fd, entry.offset, entry.length);
  try {
    return Json::parse(line);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIntegrity,
                "corrupt record in " + LogPath(ns).string() + ": " + e.what());
  }
}

std::optional<Json> Store::Get(const StoreKey& key) const {
  const Shard& shard = *shards_[static_cast<std::size_t>(key.ns)];
  std::shared_lock lock(shard.mutex);
  auto it = shard.index.find(key.fingerprint);
  if (it == shard.index.end()) return std::nullopt;
  Json envelope = ReadEnvelope(shard, it->second, key.ns);
  return envelope.at("record");
}

bool Store::Contains(const StoreKey& key) const {
  const Shard& shard = *shards_[static_cast<std::size_t>(key.ns)];
  std::shared_lock lock(shard.mutex);
  return shard.index.count(key.fingerprint) > 0;
}

std::vector<Json> Store::Scan(Namespace ns, const std::string& round_id) const {
  const Shard& shard = *shards_[static_cast<std::size_t>(ns)];
  std::shared_lock lock(shard.mutex);
  std::vector<std::pair<const std::string*, const Entry*>> selected;
  for (const auto& [key, entry] : shard.index) {
    if (!round_id.empty() && entry.fields.round_id != round_id) continue;
    selected.emplace_back(&key, &entry);
  }
  std::sort(selected.begin(), selected.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second->fields.task_id, a.second->fields.sample_index, *a.first) <
           std::tie(b.second->fields.task_id, b.second->fields.sample_index, *b.first);
  });
  std::vector<Json> records;
  records.reserve(selected.size());
  for (const auto& [key, entry] : selected) {
    records.push_back(ReadEnvelope(shard, *entry, ns).at("record"));
  }
  return records;
}

std::size_t Store::Count(Namespace ns) const {
  const Shard& shard = *shards_[static_cast<std::size_t>(ns)];
  std::shared_lock lock(shard.mutex);
  return shard.index.size();
}

}  // namespace sqlpref
