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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <recomp/errors.hpp>
#include <recomp/versioned_store.hpp>

namespace recomp {

using Attributes = std::map<std::string, std::string>;

enum class UsageRole { input, dep };
enum class Granularity { white_box, black_box };

std::string_view to_string(UsageRole role);
std::string_view to_string(Granularity g);
UsageRole usage_role_from_string(std::string_view s);
Granularity granularity_from_string(std::string_view s);

/// A thing used or produced by a computation. The `version` attribute, when
/// present, binds a dataset entity to a registered dataset version (in the
/// form "dataset@sequence"); the `slot` attribute binds an input entity to
/// the pipeline input slot it originated from.
struct ProvEntity {
    std::string id;
    Attributes attributes;
    bool is_collection = false;

    bool operator==(const ProvEntity&) const = default;
};

/// One pipeline step execution. step_index is the position of the step in
/// the composition order; started_at is a logical (not wall-clock) timestamp.
struct ProvActivity {
    std::string id;
    int step_index = 0;
    int started_at = 0;

    bool operator==(const ProvActivity&) const = default;
};

/// "activity used entity in role", optionally narrowed to the element keys
/// the activity actually touched. Absent element_keys means coarse usage:
/// the whole entity, matching any key filter.
struct UsageStatement {
    std::string activity_id;
    std::string entity_id;
    UsageRole role = UsageRole::input;
    std::optional<KeySet> element_keys;

    bool operator==(const UsageStatement&) const = default;
};

struct GenerationStatement {
    std::string entity_id;
    std::string activity_id;

    bool operator==(const GenerationStatement&) const = default;
};

/// One invariant violation found by validate(). Violations are data, not
/// errors: an invalid document can be inspected and reported on.
struct Violation {
    std::string code;
    std::string subject;
    std::string message;
};

struct UsageFilter {
    std::optional<UsageRole> role;
    std::optional<std::string> entity_id;
    std::optional<KeySet> element_keys_intersecting;
};

/// The provenance of one execution: entities, activities, usage and
/// generation statements, at white- or black-box granularity. Built once by
/// the pipeline harness, then treated as an immutable value.
class ProvDocument {
public:
    explicit ProvDocument(Granularity granularity = Granularity::white_box)
        : granularity_(granularity) {}

    Granularity granularity() const { return granularity_; }

    // -- construction ------------------------------------------------------

    /// Declares an entity. Re-declaring an identical entity is a no-op;
    /// re-declaring an id with different content is an error.
    void declare_entity(ProvEntity entity);
    void declare_activity(ProvActivity activity);

    /// Adds a usage statement. `element_keys` empty-or-absent means coarse
    /// usage. Idempotent for identical statements.
    ///
    /// Throws UnknownIdError if activity or entity is undeclared, and
    /// GranularityError if element keys are given on a black-box document.
    void assert_usage(const std::string& activity_id, const std::string& entity_id,
                      UsageRole role, std::optional<KeySet> element_keys = std::nullopt);

    void assert_generation(const std::string& entity_id, const std::string& activity_id);

    // -- queries -----------------------------------------------------------

    const ProvEntity* find_entity(const std::string& id) const;
    const ProvActivity* find_activity(const std::string& id) const;

    const std::vector<ProvEntity>& entities() const { return entities_; }
    const std::vector<ProvActivity>& activities() const { return activities_; }
    const std::vector<UsageStatement>& usages() const { return usages_; }
    const std::vector<GenerationStatement>& generations() const { return generations_; }

    /// Every invariant violation in this document; empty iff valid.
    std::vector<Violation> validate() const;

    /// All usages matching every supplied filter component, joined with
    /// their activity, ordered by step_index ascending. A usage without
    /// element keys conservatively matches any key filter.
    std::vector<std::pair<const UsageStatement*, const ProvActivity*>>
    query_usages(const UsageFilter& filter = {}) const;

    /// Structural equality: statement order is irrelevant.
    bool operator==(const ProvDocument& other) const;

    // -- serialization -----------------------------------------------------

    nlohmann::json to_json() const;
    static ProvDocument from_json(const nlohmann::json& j);

    /// Serializes to the on-disk `.prov.json` format. The document must be
    /// valid (throws ConsistencyError naming the first violation otherwise).
    std::string serialize() const;

    /// Parses bytes produced by serialize(). Throws ParseError with
    /// line/offset information on malformed input.
    static ProvDocument deserialize(std::string_view bytes);

private:
    Granularity granularity_;
    std::vector<ProvEntity> entities_;
    std::vector<ProvActivity> activities_;
    std::vector<UsageStatement> usages_;
    std::vector<GenerationStatement> generations_;
};

} // namespace recomp
