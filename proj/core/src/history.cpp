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
#include <recomp/history.hpp>

#include <fstream>
#include <sstream>

#include <recomp/sha256.hpp>

namespace recomp {

namespace fs = std::filesystem;

// -- HistoryRecord --------------------------------------------------------------

const VersionTag* HistoryRecord::tag_for(const std::string& dataset_id) const {
    for (const auto& tag : dependency_tags)
        if (tag.dataset_id == dataset_id)
            return &tag;
    return nullptr;
}

nlohmann::json HistoryRecord::to_json() const {
    nlohmann::json deps = nlohmann::json::array();
    for (const auto& tag : dependency_tags) {
        nlohmann::json t{{"dataset_id", tag.dataset_id}, {"sequence", tag.sequence}};
        if (!tag.label.empty())
            t["label"] = tag.label;
        deps.push_back(std::move(t));
    }
    return nlohmann::json{
        {"record_id", record_id},
        {"execution_version", execution_version},
        {"program_id", program_id},
        {"program_version", program_version},
        {"subject", subject},
        {"transparency", std::string(to_string(transparency))},
        {"input_refs", input_refs},
        {"slot_refs", slot_refs},
        {"dependency_tags", std::move(deps)},
        {"prov_ref", prov_ref},
        {"output_ref", output_ref},
        {"cost",
         {{"wall_time", cost.wall_time_us},
          {"steps_executed", cost.steps_executed},
          {"abstract_units", cost.abstract_units}}},
    };
}

HistoryRecord HistoryRecord::from_json(const nlohmann::json& j) {
    HistoryRecord r;
    try {
        r.record_id = j.at("record_id").get<std::string>();
        r.execution_version = j.at("execution_version").get<std::uint64_t>();
        r.program_id = j.at("program_id").get<std::string>();
        r.program_version = j.at("program_version").get<std::string>();
        r.subject = j.value("subject", std::string());
        r.transparency = granularity_from_string(j.at("transparency").get<std::string>());
        r.input_refs = j.at("input_refs").get<std::map<std::string, std::string>>();
        r.slot_refs = j.at("slot_refs").get<std::map<std::string, std::string>>();
        for (const auto& t : j.at("dependency_tags"))
            r.dependency_tags.push_back(VersionTag{t.at("dataset_id").get<std::string>(),
                                                   t.at("sequence").get<std::uint64_t>(),
                                                   t.value("label", std::string())});
        r.prov_ref = j.at("prov_ref").get<std::string>();
        r.output_ref = j.at("output_ref").get<std::string>();
        const auto& cost = j.at("cost");
        r.cost.wall_time_us = cost.at("wall_time").get<std::int64_t>();
        r.cost.steps_executed = cost.at("steps_executed").get<int>();
        r.cost.abstract_units = cost.at("abstract_units").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed history record: ") + e.what());
    }
    return r;
}

// -- ValueCache -------------------------------------------------------------------

ValueCache::ValueCache(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(*root_, ec);
    if (ec)
        throw StorageError("cannot create cache root " + root_->string() + ": " + ec.message());
}

std::string ValueCache::canonical_bytes(const nlohmann::json& value) {
    // nlohmann objects keep keys sorted, so dump() is canonical
    return value.dump();
}

std::string ValueCache::hash_value(const nlohmann::json& value) {
    return sha256_hex(canonical_bytes(value));
}

fs::path ValueCache::blob_path(const std::string& hash) const {
    return *root_ / hash.substr(0, 2) / hash;
}

std::string ValueCache::put(std::string bytes, std::optional<Producer> producer) {
    const std::string hash = sha256_hex(bytes);
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(hash);
    if (it != entries_.end())
        return hash;

    if (root_) {
        const fs::path path = blob_path(hash);
        if (!fs::exists(path)) {
            std::error_code ec;
            fs::create_directories(path.parent_path(), ec);
            if (ec)
                throw StorageError("cannot create " + path.parent_path().string() + ": " +
                                   ec.message());
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out)
                throw StorageError("cannot write blob " + path.string());
            out.write(bytes.data(), std::streamsize(bytes.size()));
            if (!out.flush())
                throw StorageError("short write to blob " + path.string());
        }
    }
    entries_.emplace(hash, Entry{std::move(bytes), std::move(producer)});
    return hash;
}

std::string ValueCache::put_value(const nlohmann::json& value, std::optional<Producer> producer) {
    return put(canonical_bytes(value), std::move(producer));
}

std::optional<std::string> ValueCache::get(const std::string& hash) const {
    {
        std::lock_guard lock(mutex_);
        const auto it = entries_.find(hash);
        if (it != entries_.end())
            return it->second.value;
    }
    if (root_) {
        const fs::path path = blob_path(hash);
        std::error_code ec;
        if (fs::exists(path, ec)) {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw StorageError("cannot read blob " + path.string());
            std::ostringstream buf;
            buf << in.rdbuf();
            return buf.str();
        }
        if (ec)
            throw StorageError("cannot stat blob " + path.string() + ": " + ec.message());
    }
    return std::nullopt;
}

std::optional<nlohmann::json> ValueCache::get_value(const std::string& hash) const {
    const auto bytes = get(hash);
    if (!bytes)
        return std::nullopt;
    return nlohmann::json::parse(*bytes);
}

bool ValueCache::contains(const std::string& hash) const {
    {
        std::lock_guard lock(mutex_);
        if (entries_.count(hash))
            return true;
    }
    if (root_) {
        std::error_code ec;
        return fs::exists(blob_path(hash), ec);
    }
    return false;
}

std::optional<ValueCache::Producer> ValueCache::producer(const std::string& hash) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(hash);
    if (it == entries_.end())
        return std::nullopt;
    return it->second.producer;
}

void ValueCache::note_producer(const std::string& hash, Producer producer) {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(hash);
    if (it != entries_.end() && !it->second.producer)
        it->second.producer = std::move(producer);
}

std::size_t ValueCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

// -- HistoryStore -------------------------------------------------------------------

HistoryStore::HistoryStore(std::filesystem::path log_file, std::filesystem::path prov_dir)
    : log_file_(std::move(log_file)), prov_dir_(std::move(prov_dir)) {
    std::error_code ec;
    fs::create_directories(*prov_dir_, ec);
    if (ec)
        throw StorageError("cannot create " + prov_dir_->string() + ": " + ec.message());
    fs::create_directories(log_file_->parent_path(), ec);
    load();
}

void HistoryStore::load() {
    if (!fs::exists(*log_file_))
        return;
    std::ifstream in(*log_file_, std::ios::binary);
    if (!in)
        throw StorageError("cannot read " + log_file_->string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(log_file_->string() + ": " + e.what(), line_no);
        }
        auto record = std::make_unique<HistoryRecord>(HistoryRecord::from_json(j));
        by_id_[record->record_id] = record.get();
        records_.push_back(std::move(record));
    }
}

namespace {

/// Cross-checks a record against its provenance document: every dep-usage
/// entity must resolve to a listed dependency tag, every input-usage entity
/// to a known slot hash.
void check_consistency(const HistoryRecord& record, const ProvDocument& prov) {
    const auto violations = prov.validate();
    if (!violations.empty())
        throw ConsistencyError("record " + record.record_id + ": provenance invalid: [" +
                               violations.front().code + "] " + violations.front().message);
    if (record.cost.wall_time_us < 0 || record.cost.steps_executed < 0 ||
        record.cost.abstract_units < 0)
        throw ConsistencyError("record " + record.record_id + ": negative cost component");

    for (const auto& usage : prov.usages()) {
        const ProvEntity* entity = prov.find_entity(usage.entity_id);
        if (usage.role == UsageRole::dep) {
            const auto version = entity->attributes.find("version");
            if (version == entity->attributes.end())
                throw ConsistencyError("record " + record.record_id + ": dep entity '" + entity->id +
                                       "' carries no version attribute");
            const VersionTag tag = VersionTag::parse(version->second);
            bool listed = false;
            for (const auto& t : record.dependency_tags)
                if (t == tag)
                    listed = true;
            if (!listed)
                throw ConsistencyError("record " + record.record_id + ": dep entity '" + entity->id +
                                       "' references " + tag.str() +
                                       " which is not in dependency_tags");
        } else {
            const auto slot_it = entity->attributes.find("slot");
            const std::string slot =
                slot_it == entity->attributes.end() ? entity->id : slot_it->second;
            if (!record.input_refs.count(slot) && !record.slot_refs.count(slot))
                throw ConsistencyError("record " + record.record_id + ": input entity '" +
                                       entity->id + "' references slot '" + slot +
                                       "' which has no recorded hash");
        }
    }
}

} // namespace

std::string HistoryStore::append(HistoryRecord record, ProvDocument prov) {
    std::lock_guard lock(mutex_);

    const std::uint64_t next =
        records_.empty() ? 1 : records_.back()->execution_version + 1;
    if (record.execution_version == 0)
        record.execution_version = next;
    else if (record.execution_version < next)
        throw ConsistencyError("execution_version " + std::to_string(record.execution_version) +
                               " is not after the latest (" + std::to_string(next - 1) + ")");

    if (record.record_id.empty()) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "r%06llu",
                      static_cast<unsigned long long>(record.execution_version));
        record.record_id = buf;
    }
    if (by_id_.count(record.record_id))
        throw ConsistencyError("duplicate record_id: " + record.record_id);
    if (record.prov_ref.empty())
        record.prov_ref = record.record_id + ".prov.json";

    check_consistency(record, prov);

    persist(record, prov);

    auto owned = std::make_unique<HistoryRecord>(std::move(record));
    const std::string id = owned->record_id;
    prov_docs_.emplace(id, std::move(prov));
    by_id_[id] = owned.get();
    records_.push_back(std::move(owned));
    return id;
}

void HistoryStore::persist(const HistoryRecord& record, const ProvDocument& prov) {
    if (!log_file_)
        return;
    const fs::path prov_path = *prov_dir_ / record.prov_ref;
    {
        std::ofstream out(prov_path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw StorageError("cannot write " + prov_path.string());
        out << prov.serialize();
        if (!out.flush())
            throw StorageError("short write to " + prov_path.string());
    }
    std::ofstream log(*log_file_, std::ios::binary | std::ios::app);
    if (!log)
        throw StorageError("cannot append to " + log_file_->string());
    log << record.to_json().dump() << '\n';
    if (!log.flush())
        throw StorageError("short write to " + log_file_->string());
}

const HistoryRecord* HistoryStore::find(const std::string& record_id) const {
    std::lock_guard lock(mutex_);
    const auto it = by_id_.find(record_id);
    return it == by_id_.end() ? nullptr : it->second;
}

std::vector<const HistoryRecord*> HistoryStore::all() const {
    std::lock_guard lock(mutex_);
    std::vector<const HistoryRecord*> out;
    out.reserve(records_.size());
    for (const auto& r : records_)
        out.push_back(r.get());
    return out;
}

std::vector<const HistoryRecord*>
HistoryStore::records_using(const std::string& dataset_id,
                            const std::optional<VersionTag>& tag) const {
    std::lock_guard lock(mutex_);
    std::vector<const HistoryRecord*> out;
    for (const auto& r : records_) {
        const VersionTag* t = r->tag_for(dataset_id);
        if (!t)
            continue;
        if (tag && !(*t == *tag))
            continue;
        out.push_back(r.get());
    }
    return out;
}

const ProvDocument& HistoryStore::prov_of(const HistoryRecord& record) const {
    std::lock_guard lock(mutex_);
    const auto it = prov_docs_.find(record.record_id);
    if (it != prov_docs_.end())
        return it->second;
    if (!prov_dir_)
        throw StorageError("no provenance stored for record " + record.record_id);
    const fs::path path = *prov_dir_ / record.prov_ref;
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw StorageError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return prov_docs_.emplace(record.record_id, ProvDocument::deserialize(buf.str())).first->second;
}

std::uint64_t HistoryStore::next_execution_version() const {
    std::lock_guard lock(mutex_);
    return records_.empty() ? 1 : records_.back()->execution_version + 1;
}

std::size_t HistoryStore::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::vector<std::string> verify_integrity(const HistoryStore& store, const ValueCache& cache) {
    std::vector<std::string> out;
    for (const HistoryRecord* r : store.all()) {
        for (const auto& [slot, hash] : r->input_refs)
            if (!cache.contains(hash))
                out.push_back("record " + r->record_id + ": input '" + slot +
                              "' does not resolve (" + hash.substr(0, 12) + ")");
        if (!r->output_ref.empty() && !cache.contains(r->output_ref))
            out.push_back("record " + r->record_id + ": output does not resolve (" +
                          r->output_ref.substr(0, 12) + ")");
    }
    return out;
}

} // namespace recomp
