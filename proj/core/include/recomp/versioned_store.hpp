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
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <recomp/errors.hpp>

namespace recomp {

/// Stable, domain-defined identity of one dataset element across versions:
/// an OMIM disease term, a ClinVar variant id, an input collection member.
using ElementKey = std::string;
using KeySet = std::set<ElementKey>;

/// Opaque, equality-comparable element payload.
using ElementValue = nlohmann::json;
using ElementMap = std::map<ElementKey, ElementValue>;

/// Identifies one immutable snapshot of one dataset. Sequences start at 1
/// and strictly increase with registration order per dataset.
struct VersionTag {
    std::string dataset_id;
    std::uint64_t sequence = 0;
    std::string label; // optional, e.g. "2014"

    /// Canonical form "dataset@sequence" (label excluded).
    std::string str() const;
    /// Human form, "dataset@sequence (label)" when a label exists.
    std::string display() const;

    static VersionTag parse(std::string_view s);

    friend bool operator==(const VersionTag& a, const VersionTag& b) {
        return a.dataset_id == b.dataset_id && a.sequence == b.sequence;
    }
    friend auto operator<=>(const VersionTag& a, const VersionTag& b) {
        if (const auto c = a.dataset_id <=> b.dataset_id; c != 0)
            return c;
        return a.sequence <=> b.sequence;
    }
};

/// Immutable keyed snapshot of one external dependency at one version.
struct DatasetVersion {
    VersionTag tag;
    ElementMap elements;
};

/// Added/removed/changed element keys between two versions of one dataset.
/// The three sets are pairwise disjoint by construction.
struct DiffResult {
    std::string dataset_id;
    VersionTag from;
    VersionTag to;
    KeySet added;
    KeySet removed;
    KeySet changed;

    bool empty() const { return added.empty() && removed.empty() && changed.empty(); }
    std::size_t size() const { return added.size() + removed.size() + changed.size(); }
    /// added ∪ removed ∪ changed.
    KeySet all_keys() const;
};

// -- variant status ----------------------------------------------------------

enum class VariantStatus { unknown, benign, pathogenic };

std::string_view to_string(VariantStatus s);

/// Maps a free-text clinical significance string onto the three-valued
/// status. Case-insensitive; any uncertainty qualifier ("probably",
/// "likely", "uncertain") demotes a pathogenic reading to unknown.
VariantStatus parse_raw_status(std::string_view raw);

// -- diff functions ----------------------------------------------------------

/// Symmetric difference of the key sets plus value inequality on shared keys.
DiffResult diff_generic(const DatasetVersion& a, const DatasetVersion& b);

/// OMIM semantics: an element value is the gene set mapped to a disease
/// term; "changed" means the gene sets differ (order-insensitive).
DiffResult diff_omim(const DatasetVersion& a, const DatasetVersion& b);

/// ClinVar semantics: an element value carries (gene, raw status); "changed"
/// means the mapped three-valued status differs.
DiffResult diff_clinvar(const DatasetVersion& a, const DatasetVersion& b);

/// Dispatches on dataset id: "omim" and "clinvar" get their dedicated
/// comparisons, everything else diff_generic.
DiffResult diff_for_dataset(const DatasetVersion& a, const DatasetVersion& b);

/// Result of comparing two values of one input slot.
struct InputDiff {
    bool changed = false;
    /// Present when the input is a keyed collection.
    std::optional<DiffResult> diff;
};

/// Scalar inputs compare by structural equality; keyed collections (objects,
/// or arrays of strings read as key sets) get element-level diffs.
InputDiff diff_input(const std::string& slot_a, const ElementValue& a,
                     const std::string& slot_b, const ElementValue& b);

/// Compares two pipeline output bindings (slot → value). Keys of object
/// values are element keys; non-object slot values compare whole, keyed by
/// the slot name. With more than one slot, keys are prefixed "slot:".
DiffResult diff_output(const std::map<std::string, ElementValue>& a,
                       const std::map<std::string, ElementValue>& b);

// -- snapshot file format ------------------------------------------------------

/// Parses the tab-separated snapshot format for the given dataset:
///   omim:    term<TAB>gene1,gene2,...
///   clinvar: variant_id<TAB>gene<TAB>raw_status
///   other:   key<TAB>value
/// '#'-prefixed comment lines and blank lines are ignored. Throws ParseError
/// citing the offending line.
ElementMap parse_snapshot_tsv(const std::string& dataset_id, std::string_view text);

/// Inverse of parse_snapshot_tsv; elements emitted in key order.
std::string snapshot_to_tsv(const std::string& dataset_id, const ElementMap& elements);

// -- registry ------------------------------------------------------------------

/// Registry of immutable dataset versions. One writer at a time; readers may
/// run concurrently; returned DatasetVersion references stay valid for the
/// registry's lifetime.
class VersionRegistry {
public:
    /// In-memory registry.
    VersionRegistry() = default;

    /// Registry persisted under `root`: one file per version, named
    /// `<dataset_id>/<sequence>_<label>.tsv`. Existing files are loaded.
    explicit VersionRegistry(std::filesystem::path root);

    VersionRegistry(const VersionRegistry&) = delete;
    VersionRegistry& operator=(const VersionRegistry&) = delete;

    /// Registers a new immutable version with sequence = previous max + 1.
    /// Throws DuplicateLabelError if the label is already used.
    VersionTag register_version(const std::string& dataset_id, const std::string& label,
                                ElementMap elements);

    const DatasetVersion& get(const VersionTag& tag) const;
    const DatasetVersion* find(const VersionTag& tag) const;

    /// Resolves "ds@seq", a bare sequence number, or a label for the dataset.
    VersionTag resolve(const std::string& dataset_id, const std::string& token) const;

    std::vector<VersionTag> tags(const std::string& dataset_id) const;
    std::vector<std::string> dataset_ids() const;

    /// diff_for_dataset with memoization on the (from, to) tag pair.
    const DiffResult& diff_cached(const VersionTag& from, const VersionTag& to) const;

private:
    const DatasetVersion* find_locked(const VersionTag& tag) const;

    mutable std::mutex mutex_;
    std::map<std::string, std::vector<DatasetVersion>> datasets_;
    mutable std::map<std::pair<std::string, std::string>, DiffResult> diff_memo_;
    std::optional<std::filesystem::path> root_;
};

} // namespace recomp
