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
#include <recomp/prov.hpp>

#include <algorithm>

#include <recomp/versioned_store.hpp>

namespace recomp {

std::string_view to_string(UsageRole role) {
    return role == UsageRole::input ? "input" : "dep";
}

std::string_view to_string(Granularity g) {
    return g == Granularity::white_box ? "white_box" : "black_box";
}

UsageRole usage_role_from_string(std::string_view s) {
    if (s == "input")
        return UsageRole::input;
    if (s == "dep")
        return UsageRole::dep;
    throw ParseError("invalid usage role: '" + std::string(s) + "'");
}

Granularity granularity_from_string(std::string_view s) {
    if (s == "white_box")
        return Granularity::white_box;
    if (s == "black_box")
        return Granularity::black_box;
    throw ParseError("invalid granularity: '" + std::string(s) + "'");
}

void ProvDocument::declare_entity(ProvEntity entity) {
    if (const ProvEntity* existing = find_entity(entity.id)) {
        if (*existing == entity)
            return;
        throw ConsistencyError("entity '" + entity.id + "' redeclared with different content");
    }
    entities_.push_back(std::move(entity));
}

void ProvDocument::declare_activity(ProvActivity activity) {
    if (const ProvActivity* existing = find_activity(activity.id)) {
        if (*existing == activity)
            return;
        throw ConsistencyError("activity '" + activity.id + "' redeclared with different content");
    }
    activities_.push_back(std::move(activity));
}

void ProvDocument::assert_usage(const std::string& activity_id, const std::string& entity_id,
                                UsageRole role, std::optional<KeySet> element_keys) {
    if (!find_activity(activity_id))
        throw UnknownIdError(activity_id);
    if (!find_entity(entity_id))
        throw UnknownIdError(entity_id);
    // an empty key set denotes coarse usage, same as absent
    if (element_keys && element_keys->empty())
        element_keys.reset();
    if (element_keys && granularity_ == Granularity::black_box)
        throw GranularityError("element keys on a black_box document (usage of '" + entity_id + "')");

    UsageStatement stmt{activity_id, entity_id, role, std::move(element_keys)};
    if (std::find(usages_.begin(), usages_.end(), stmt) != usages_.end())
        return;
    usages_.push_back(std::move(stmt));
}

void ProvDocument::assert_generation(const std::string& entity_id, const std::string& activity_id) {
    if (!find_activity(activity_id))
        throw UnknownIdError(activity_id);
    if (!find_entity(entity_id))
        throw UnknownIdError(entity_id);
    GenerationStatement stmt{entity_id, activity_id};
    if (std::find(generations_.begin(), generations_.end(), stmt) != generations_.end())
        return;
    generations_.push_back(std::move(stmt));
}

const ProvEntity* ProvDocument::find_entity(const std::string& id) const {
    for (const auto& e : entities_)
        if (e.id == id)
            return &e;
    return nullptr;
}

const ProvActivity* ProvDocument::find_activity(const std::string& id) const {
    for (const auto& a : activities_)
        if (a.id == id)
            return &a;
    return nullptr;
}

std::vector<Violation> ProvDocument::validate() const {
    std::vector<Violation> out;
    const auto add = [&out](std::string code, std::string subject, std::string message) {
        out.push_back(Violation{std::move(code), std::move(subject), std::move(message)});
    };

    std::set<std::string> entity_ids;
    for (const auto& e : entities_) {
        if (!entity_ids.insert(e.id).second)
            add("duplicate-entity-id", e.id, "entity id declared more than once");
        const auto version = e.attributes.find("version");
        if (version != e.attributes.end()) {
            try {
                (void)VersionTag::parse(version->second);
            } catch (const ParseError&) {
                add("invalid-version-attr", e.id,
                    "version attribute '" + version->second + "' is not a valid version tag");
            }
        }
    }

    std::set<std::string> activity_ids;
    std::set<int> step_indices;
    for (const auto& a : activities_) {
        if (!activity_ids.insert(a.id).second)
            add("duplicate-activity-id", a.id, "activity id declared more than once");
        if (a.step_index < 0)
            add("negative-step-index", a.id, "step_index must be non-negative");
        if (!step_indices.insert(a.step_index).second)
            add("duplicate-step-index", a.id,
                "step_index " + std::to_string(a.step_index) + " used by more than one activity");
    }

    // started_at ordering must agree with step_index ordering
    std::vector<const ProvActivity*> by_step;
    for (const auto& a : activities_)
        by_step.push_back(&a);
    std::sort(by_step.begin(), by_step.end(),
              [](const auto* a, const auto* b) { return a->step_index < b->step_index; });
    for (std::size_t i = 1; i < by_step.size(); ++i) {
        if (by_step[i]->started_at < by_step[i - 1]->started_at)
            add("step-order-mismatch", by_step[i]->id,
                "started_at ordering contradicts step_index ordering");
    }

    for (const auto& u : usages_) {
        if (!activity_ids.count(u.activity_id))
            add("unknown-activity", u.activity_id, "usage references undeclared activity");
        if (!entity_ids.count(u.entity_id))
            add("unknown-entity", u.entity_id, "usage references undeclared entity");
        if (u.element_keys && u.element_keys->empty())
            add("empty-element-keys", u.entity_id, "element_keys present but empty");
        if (u.element_keys && granularity_ == Granularity::black_box)
            add("black-box-element-keys", u.entity_id,
                "element-level usage on a black_box document");
    }

    for (const auto& g : generations_) {
        if (!activity_ids.count(g.activity_id))
            add("unknown-activity", g.activity_id, "generation references undeclared activity");
        if (!entity_ids.count(g.entity_id))
            add("unknown-entity", g.entity_id, "generation references undeclared entity");
    }

    if (granularity_ == Granularity::black_box && activities_.size() > 1)
        add("black-box-multi-activity", "",
            "black_box documents must contain exactly one activity, found " +
                std::to_string(activities_.size()));

    return out;
}

std::vector<std::pair<const UsageStatement*, const ProvActivity*>>
ProvDocument::query_usages(const UsageFilter& filter) const {
    std::vector<std::pair<const UsageStatement*, const ProvActivity*>> out;
    for (const auto& u : usages_) {
        if (filter.role && u.role != *filter.role)
            continue;
        if (filter.entity_id && u.entity_id != *filter.entity_id)
            continue;
        if (filter.element_keys_intersecting && u.element_keys) {
            bool intersects = false;
            for (const auto& k : *filter.element_keys_intersecting) {
                if (u.element_keys->count(k)) {
                    intersects = true;
                    break;
                }
            }
            if (!intersects)
                continue;
        }
        // coarse usages (no element_keys) match any key filter
        const ProvActivity* activity = find_activity(u.activity_id);
        out.emplace_back(&u, activity);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        const int sa = a.second ? a.second->step_index : 0;
        const int sb = b.second ? b.second->step_index : 0;
        return sa < sb;
    });
    return out;
}

namespace {

nlohmann::json keyset_to_json(const KeySet& keys) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& k : keys)
        arr.push_back(k);
    return arr;
}

template <typename T>
std::vector<T> sorted(std::vector<T> v) {
    std::sort(v.begin(), v.end(), [](const T& a, const T& b) {
        return nlohmann::json(a).dump() < nlohmann::json(b).dump();
    });
    return v;
}

} // namespace

void to_json(nlohmann::json& j, const ProvEntity& e) {
    j = nlohmann::json{{"id", e.id}, {"attributes", e.attributes}, {"is_collection", e.is_collection}};
}

void to_json(nlohmann::json& j, const ProvActivity& a) {
    j = nlohmann::json{{"id", a.id}, {"step_index", a.step_index}, {"started_at", a.started_at}};
}

void to_json(nlohmann::json& j, const UsageStatement& u) {
    j = nlohmann::json{{"activity_id", u.activity_id},
                       {"entity_id", u.entity_id},
                       {"role", std::string(to_string(u.role))}};
    if (u.element_keys)
        j["element_keys"] = keyset_to_json(*u.element_keys);
}

void to_json(nlohmann::json& j, const GenerationStatement& g) {
    j = nlohmann::json{{"entity_id", g.entity_id}, {"activity_id", g.activity_id}};
}

nlohmann::json ProvDocument::to_json() const {
    nlohmann::json j;
    j["granularity"] = std::string(to_string(granularity_));
    j["entities"] = entities_;
    j["activities"] = activities_;
    j["usages"] = usages_;
    j["generations"] = generations_;
    return j;
}

namespace {

const nlohmann::json& require_field(const nlohmann::json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end())
        throw ParseError(std::string("missing field '") + name + "' in provenance document");
    return *it;
}

std::string require_string(const nlohmann::json& j, const char* name) {
    const auto& f = require_field(j, name);
    if (!f.is_string())
        throw ParseError(std::string("field '") + name + "' must be a string");
    return f.get<std::string>();
}

} // namespace

ProvDocument ProvDocument::from_json(const nlohmann::json& j) {
    if (!j.is_object())
        throw ParseError("provenance document must be a JSON object");
    ProvDocument doc(granularity_from_string(require_string(j, "granularity")));

    for (const auto& je : require_field(j, "entities")) {
        ProvEntity e;
        e.id = require_string(je, "id");
        if (je.contains("attributes")) {
            if (!je["attributes"].is_object())
                throw ParseError("entity '" + e.id + "': attributes must be an object");
            for (const auto& [k, v] : je["attributes"].items()) {
                if (!v.is_string())
                    throw ParseError("entity '" + e.id + "': attribute '" + k + "' must be a string");
                e.attributes[k] = v.get<std::string>();
            }
        }
        e.is_collection = je.value("is_collection", false);
        doc.entities_.push_back(std::move(e));
    }
    for (const auto& ja : require_field(j, "activities")) {
        ProvActivity a;
        a.id = require_string(ja, "id");
        const auto& step = require_field(ja, "step_index");
        if (!step.is_number_integer())
            throw ParseError("activity '" + a.id + "': step_index must be an integer");
        a.step_index = step.get<int>();
        a.started_at = ja.value("started_at", 0);
        doc.activities_.push_back(std::move(a));
    }
    for (const auto& ju : require_field(j, "usages")) {
        UsageStatement u;
        u.activity_id = require_string(ju, "activity_id");
        u.entity_id = require_string(ju, "entity_id");
        u.role = usage_role_from_string(require_string(ju, "role"));
        if (ju.contains("element_keys")) {
            if (!ju["element_keys"].is_array())
                throw ParseError("usage of '" + u.entity_id + "': element_keys must be an array");
            KeySet keys;
            for (const auto& k : ju["element_keys"]) {
                if (!k.is_string())
                    throw ParseError("usage of '" + u.entity_id + "': element keys must be strings");
                keys.insert(k.get<std::string>());
            }
            u.element_keys = std::move(keys);
        }
        doc.usages_.push_back(std::move(u));
    }
    for (const auto& jg : require_field(j, "generations")) {
        GenerationStatement g;
        g.entity_id = require_string(jg, "entity_id");
        g.activity_id = require_string(jg, "activity_id");
        doc.generations_.push_back(std::move(g));
    }
    return doc;
}

std::string ProvDocument::serialize() const {
    const auto violations = validate();
    if (!violations.empty())
        throw ConsistencyError("cannot serialize invalid document: [" + violations.front().code +
                               "] " + violations.front().message);
    return to_json().dump(2) + "\n";
}

ProvDocument ProvDocument::deserialize(std::string_view bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        // translate the byte offset into a line number for the message
        std::size_t line = 1;
        const std::size_t limit = std::min<std::size_t>(e.byte, bytes.size());
        for (std::size_t i = 0; i < limit; ++i)
            if (bytes[i] == '\n')
                ++line;
        throw ParseError(std::string("malformed provenance document: ") + e.what(), line, e.byte);
    }
    return from_json(j);
}

bool ProvDocument::operator==(const ProvDocument& other) const {
    if (granularity_ != other.granularity_)
        return false;
    const auto dump = [](const auto& v) {
        std::vector<std::string> out;
        for (const auto& x : v)
            out.push_back(nlohmann::json(x).dump());
        std::sort(out.begin(), out.end());
        return out;
    };
    return dump(entities_) == dump(other.entities_) && dump(activities_) == dump(other.activities_) &&
           dump(usages_) == dump(other.usages_) && dump(generations_) == dump(other.generations_);
}

} // namespace recomp
