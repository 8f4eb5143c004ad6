/*
 * Copyright (c) 2026, the recomp project authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <recomp/prov.hpp>
#include <recomp/versioned_store.hpp>

namespace recomp {

struct CostRecord {
    std::int64_t wall_time_us = 0;
    int steps_executed = 0;
    /// Open-ended cost measure; defaults to one unit per executed step.
    double abstract_units = 0.0;
};

/// One past execution: program identity, input hashes, the dependency
/// versions it ran against, its provenance, its output hash, and its cost.
struct HistoryRecord {
    std::string record_id;
    std::uint64_t execution_version = 0;
    std::string program_id;
    std::string program_version;
    /// Label of what was computed (e.g. the patient id); report plumbing.
    std::string subject;
    Granularity transparency = Granularity::white_box;
    /// Pipeline input slot → content hash.
    std::map<std::string, std::string> input_refs;
    /// Every step-boundary slot (inputs, intermediates, outputs) → content
    /// hash. Superset of input_refs; what makes partial resume resolvable.
    std::map<std::string, std::string> slot_refs;
    std::vector<VersionTag> dependency_tags;
    std::string prov_ref;
    std::string output_ref;
    CostRecord cost;

    const VersionTag* tag_for(const std::string& dataset_id) const;

    nlohmann::json to_json() const;
    static HistoryRecord from_json(const nlohmann::json& j);
};

/// Content-addressed store of canonicalized values. Entries are immutable;
/// putting identical bytes twice yields the same hash and one entry. When
/// given a root directory, blobs live at `<root>/<hash[0:2]>/<hash>`.
class ValueCache {
public:
    struct Producer {
        std::string record_id;
        int step_index = 0;
    };

    ValueCache() = default;
    explicit ValueCache(std::filesystem::path root);

    ValueCache(const ValueCache&) = delete;
    ValueCache& operator=(const ValueCache&) = delete;

    /// Stores bytes, returns their content hash.
    std::string put(std::string bytes, std::optional<Producer> producer = std::nullopt);
    /// Stores the canonical serialization of a value (sorted object keys).
    std::string put_value(const nlohmann::json& value, std::optional<Producer> producer = std::nullopt);

    /// Returns the bytes for a hash, or nullopt if unknown. I/O failures
    /// surface as StorageError, distinct from absence.
    std::optional<std::string> get(const std::string& hash) const;
    std::optional<nlohmann::json> get_value(const std::string& hash) const;
    bool contains(const std::string& hash) const;

    /// First producer of the entry, when known for this process lifetime.
    std::optional<Producer> producer(const std::string& hash) const;

    /// Records the producer of an existing entry if none is known yet; the
    /// value bytes themselves stay immutable.
    void note_producer(const std::string& hash, Producer producer);

    std::size_t size() const;

    /// Content hash of a value's canonical bytes, without storing it.
    static std::string hash_value(const nlohmann::json& value);
    static std::string canonical_bytes(const nlohmann::json& value);

private:
    struct Entry {
        std::string value;
        std::optional<Producer> producer;
    };

    std::filesystem::path blob_path(const std::string& hash) const;

    mutable std::mutex mutex_;
    std::map<std::string, Entry> entries_;
    std::optional<std::filesystem::path> root_;
};

/// Append-only store of history records plus their provenance documents.
/// Single writer, any number of concurrent readers. When given file paths,
/// the record log is one JSON object per line and each provenance document
/// is a `.prov.json` file named by record id.
class HistoryStore {
public:
    HistoryStore() = default;
    HistoryStore(std::filesystem::path log_file, std::filesystem::path prov_dir);

    HistoryStore(const HistoryStore&) = delete;
    HistoryStore& operator=(const HistoryStore&) = delete;

    /// Appends a record with its provenance document. Assigns record_id and
    /// execution_version when absent. Validates internal consistency: the
    /// document must be valid, every dep-usage entity must resolve to a
    /// listed dependency tag and every input-usage entity to a known slot
    /// hash. Throws ConsistencyError naming the violated cross-reference.
    std::string append(HistoryRecord record, ProvDocument prov);

    const HistoryRecord* find(const std::string& record_id) const;

    /// Every record, ordered by execution_version.
    std::vector<const HistoryRecord*> all() const;

    /// Records whose dependency tags include the dataset (and the exact
    /// version, when given), ordered by execution_version.
    std::vector<const HistoryRecord*> records_using(const std::string& dataset_id,
                                                    const std::optional<VersionTag>& tag = {}) const;

    /// The stored provenance document of a record.
    const ProvDocument& prov_of(const HistoryRecord& record) const;

    std::uint64_t next_execution_version() const;
    std::size_t size() const;

private:
    void load();
    void persist(const HistoryRecord& record, const ProvDocument& prov);

    mutable std::mutex mutex_;
    std::vector<std::unique_ptr<HistoryRecord>> records_;
    std::map<std::string, const HistoryRecord*> by_id_;
    mutable std::map<std::string, ProvDocument> prov_docs_;
    std::optional<std::filesystem::path> log_file_;
    std::optional<std::filesystem::path> prov_dir_;
};

/// Full-scan referential integrity check: every input_refs / output_ref
/// hash of every stored record must resolve through the cache. Returns one
/// message per violation; empty means intact.
std::vector<std::string> verify_integrity(const HistoryStore& store, const ValueCache& cache);

} // namespace recomp
