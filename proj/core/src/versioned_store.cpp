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
#include <recomp/versioned_store.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace recomp {

namespace fs = std::filesystem;

// -- VersionTag ---------------------------------------------------------------

std::string VersionTag::str() const {
    return dataset_id + "@" + std::to_string(sequence);
}

std::string VersionTag::display() const {
    return label.empty() ? str() : str() + " (" + label + ")";
}

VersionTag VersionTag::parse(std::string_view s) {
    const auto at = s.rfind('@');
    if (at == std::string_view::npos || at == 0 || at + 1 >= s.size())
        throw ParseError("invalid version tag '" + std::string(s) + "', expected dataset@sequence");
    std::uint64_t seq = 0;
    const auto* first = s.data() + at + 1;
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, seq);
    if (ec != std::errc{} || ptr != last || seq == 0)
        throw ParseError("invalid sequence in version tag '" + std::string(s) + "'");
    return VersionTag{std::string(s.substr(0, at)), seq, ""};
}

KeySet DiffResult::all_keys() const {
    KeySet out = added;
    out.insert(removed.begin(), removed.end());
    out.insert(changed.begin(), changed.end());
    return out;
}

// -- variant status -----------------------------------------------------------

std::string_view to_string(VariantStatus s) {
    switch (s) {
    case VariantStatus::benign:
        return "benign";
    case VariantStatus::pathogenic:
        return "pathogenic";
    default:
        return "unknown";
    }
}

VariantStatus parse_raw_status(std::string_view raw) {
    std::string lower(raw);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    const auto has = [&lower](std::string_view needle) {
        return lower.find(needle) != std::string::npos;
    };
    if (has("benign") && !has("pathogenic"))
        return VariantStatus::benign;
    if (has("pathogenic") && !has("probably") && !has("likely") && !has("uncertain"))
        return VariantStatus::pathogenic;
    return VariantStatus::unknown;
}

// -- diff functions -----------------------------------------------------------

namespace {

void require_same_dataset(const DatasetVersion& a, const DatasetVersion& b) {
    if (a.tag.dataset_id != b.tag.dataset_id)
        throw DatasetMismatchError("cannot diff versions of different datasets: '" +
                                   a.tag.dataset_id + "' vs '" + b.tag.dataset_id + "'");
}

/// Shared scaffold: added/removed by key presence, changed per `same_value`.
template <typename SameValue>
DiffResult diff_keyed(const DatasetVersion& a, const DatasetVersion& b, SameValue same_value) {
    require_same_dataset(a, b);
    DiffResult d;
    d.dataset_id = a.tag.dataset_id;
    d.from = a.tag;
    d.to = b.tag;
    for (const auto& [key, value] : b.elements) {
        const auto it = a.elements.find(key);
        if (it == a.elements.end())
            d.added.insert(key);
        else if (!same_value(it->second, value))
            d.changed.insert(key);
    }
    for (const auto& [key, value] : a.elements) {
        if (!b.elements.count(key))
            d.removed.insert(key);
    }
    return d;
}

KeySet gene_set(const ElementValue& v) {
    KeySet genes;
    if (v.is_array()) {
        for (const auto& g : v)
            genes.insert(g.is_string() ? g.get<std::string>() : g.dump());
    } else if (v.is_string()) {
        genes.insert(v.get<std::string>());
    }
    return genes;
}

VariantStatus element_status(const ElementValue& v) {
    if (v.is_object() && v.contains("raw") && v["raw"].is_string())
        return parse_raw_status(v["raw"].get<std::string>());
    if (v.is_string())
        return parse_raw_status(v.get<std::string>());
    return VariantStatus::unknown;
}

} // namespace

DiffResult diff_generic(const DatasetVersion& a, const DatasetVersion& b) {
    return diff_keyed(a, b, [](const ElementValue& x, const ElementValue& y) { return x == y; });
}

DiffResult diff_omim(const DatasetVersion& a, const DatasetVersion& b) {
    return diff_keyed(a, b, [](const ElementValue& x, const ElementValue& y) {
        return gene_set(x) == gene_set(y);
    });
}

DiffResult diff_clinvar(const DatasetVersion& a, const DatasetVersion& b) {
    return diff_keyed(a, b, [](const ElementValue& x, const ElementValue& y) {
        return element_status(x) == element_status(y);
    });
}

DiffResult diff_for_dataset(const DatasetVersion& a, const DatasetVersion& b) {
    if (a.tag.dataset_id == "omim")
        return diff_omim(a, b);
    if (a.tag.dataset_id == "clinvar")
        return diff_clinvar(a, b);
    return diff_generic(a, b);
}

InputDiff diff_input(const std::string& slot_a, const ElementValue& a,
                     const std::string& slot_b, const ElementValue& b) {
    if (slot_a != slot_b)
        throw SlotMismatchError("cannot diff input slots '" + slot_a + "' and '" + slot_b + "'");

    const auto as_element_map = [](const ElementValue& v) -> std::optional<ElementMap> {
        if (v.is_object()) {
            ElementMap m;
            for (const auto& [k, val] : v.items())
                m[k] = val;
            return m;
        }
        if (v.is_array()) {
            ElementMap m;
            for (const auto& item : v) {
                if (!item.is_string())
                    return std::nullopt;
                m[item.get<std::string>()] = nullptr;
            }
            return m;
        }
        return std::nullopt;
    };

    const auto ma = as_element_map(a);
    const auto mb = as_element_map(b);
    if (ma && mb) {
        DatasetVersion va{VersionTag{slot_a, 1, ""}, *ma};
        DatasetVersion vb{VersionTag{slot_a, 2, ""}, *mb};
        DiffResult d = diff_generic(va, vb);
        return InputDiff{!d.empty(), std::move(d)};
    }
    return InputDiff{a != b, std::nullopt};
}

DiffResult diff_output(const std::map<std::string, ElementValue>& a,
                       const std::map<std::string, ElementValue>& b) {
    std::set<std::string> slots;
    for (const auto& [slot, _] : a)
        slots.insert(slot);
    for (const auto& [slot, _] : b)
        slots.insert(slot);

    const bool prefix = slots.size() > 1;
    DiffResult out;
    out.dataset_id = "output";

    for (const auto& slot : slots) {
        const auto ita = a.find(slot);
        const auto itb = b.find(slot);
        const auto qualify = [&](const ElementKey& k) { return prefix ? slot + ":" + k : k; };

        const bool obj_a = ita != a.end() && ita->second.is_object();
        const bool obj_b = itb != b.end() && itb->second.is_object();
        if ((ita == a.end() || obj_a) && (itb == b.end() || obj_b)) {
            ElementMap ea, eb;
            if (ita != a.end())
                for (const auto& [k, v] : ita->second.items())
                    ea[k] = v;
            if (itb != b.end())
                for (const auto& [k, v] : itb->second.items())
                    eb[k] = v;
            DatasetVersion va{VersionTag{slot, 1, ""}, std::move(ea)};
            DatasetVersion vb{VersionTag{slot, 2, ""}, std::move(eb)};
            const DiffResult d = diff_generic(va, vb);
            for (const auto& k : d.added)
                out.added.insert(qualify(k));
            for (const auto& k : d.removed)
                out.removed.insert(qualify(k));
            for (const auto& k : d.changed)
                out.changed.insert(qualify(k));
            continue;
        }
        // scalar (or mixed-shape) slot: compare whole, keyed by the slot name
        if (ita == a.end())
            out.added.insert(slot);
        else if (itb == b.end())
            out.removed.insert(slot);
        else if (ita->second != itb->second)
            out.changed.insert(slot);
    }
    return out;
}

// -- snapshot file format -------------------------------------------------------

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace

ElementMap parse_snapshot_tsv(const std::string& dataset_id, std::string_view text) {
    ElementMap elements;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line = text.substr(
            start, end == std::string_view::npos ? std::string_view::npos : end - start);
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty() || line.front() == '#')
            continue;

        const auto fields = split(line, '\t');
        if (fields[0].empty())
            throw ParseError("empty element key", line_no);
        if (elements.count(fields[0]))
            throw ParseError("duplicate element key '" + fields[0] + "'", line_no);

        if (dataset_id == "omim") {
            if (fields.size() != 2)
                throw ParseError("expected term<TAB>genes", line_no);
            nlohmann::json genes = nlohmann::json::array();
            KeySet unique;
            for (const auto& g : split(fields[1], ','))
                if (!g.empty())
                    unique.insert(g);
            if (unique.empty())
                throw ParseError("term '" + fields[0] + "' maps to no genes", line_no);
            for (const auto& g : unique)
                genes.push_back(g);
            elements[fields[0]] = std::move(genes);
        } else if (dataset_id == "clinvar") {
            if (fields.size() != 3)
                throw ParseError("expected variant_id<TAB>gene<TAB>status", line_no);
            if (fields[1].empty())
                throw ParseError("variant '" + fields[0] + "' has no gene", line_no);
            elements[fields[0]] = nlohmann::json{{"gene", fields[1]}, {"raw", fields[2]}};
        } else {
            if (fields.size() != 2)
                throw ParseError("expected key<TAB>value", line_no);
            elements[fields[0]] = fields[1];
        }
    }
    return elements;
}

std::string snapshot_to_tsv(const std::string& dataset_id, const ElementMap& elements) {
    std::ostringstream out;
    for (const auto& [key, value] : elements) {
        if (dataset_id == "omim") {
            const KeySet genes = gene_set(value);
            out << key << '\t';
            bool first = true;
            for (const auto& g : genes) {
                if (!first)
                    out << ',';
                out << g;
                first = false;
            }
            out << '\n';
        } else if (dataset_id == "clinvar") {
            out << key << '\t' << value.value("gene", std::string()) << '\t'
                << value.value("raw", std::string()) << '\n';
        } else {
            out << key << '\t' << (value.is_string() ? value.get<std::string>() : value.dump())
                << '\n';
        }
    }
    return out.str();
}

// -- registry --------------------------------------------------------------------

VersionRegistry::VersionRegistry(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(*root_, ec);
    if (ec)
        throw StorageError("cannot create registry root " + root_->string() + ": " + ec.message());

    for (const auto& dataset_dir : fs::directory_iterator(*root_)) {
        if (!dataset_dir.is_directory())
            continue;
        const std::string dataset_id = dataset_dir.path().filename().string();

        // filenames are <sequence>_<label>.tsv or <sequence>.tsv
        std::vector<std::pair<std::uint64_t, fs::path>> files;
        for (const auto& f : fs::directory_iterator(dataset_dir.path())) {
            if (!f.is_regular_file() || f.path().extension() != ".tsv")
                continue;
            const std::string stem = f.path().stem().string();
            const auto us = stem.find('_');
            const std::string seq_str = us == std::string::npos ? stem : stem.substr(0, us);
            std::uint64_t seq = 0;
            const auto [ptr, errc] =
                std::from_chars(seq_str.data(), seq_str.data() + seq_str.size(), seq);
            if (errc != std::errc{} || ptr != seq_str.data() + seq_str.size() || seq == 0)
                throw StorageError("unexpected snapshot filename: " + f.path().string());
            files.emplace_back(seq, f.path());
        }
        std::sort(files.begin(), files.end());

        auto& versions = datasets_[dataset_id];
        for (const auto& [seq, path] : files) {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw StorageError("cannot read " + path.string());
            std::ostringstream buf;
            buf << in.rdbuf();
            const std::string stem = path.stem().string();
            const auto us = stem.find('_');
            VersionTag tag{dataset_id, seq, us == std::string::npos ? "" : stem.substr(us + 1)};
            try {
                versions.push_back(DatasetVersion{tag, parse_snapshot_tsv(dataset_id, buf.str())});
            } catch (const ParseError& e) {
                throw ParseError(path.string() + ": " + e.what(), e.line(), e.offset());
            }
        }
    }
}

VersionTag VersionRegistry::register_version(const std::string& dataset_id,
                                             const std::string& label, ElementMap elements) {
    std::lock_guard lock(mutex_);
    auto& versions = datasets_[dataset_id];
    if (!label.empty()) {
        for (const auto& v : versions)
            if (v.tag.label == label)
                throw DuplicateLabelError("label '" + label + "' already registered for dataset '" +
                                          dataset_id + "'");
    }
    const std::uint64_t seq = versions.empty() ? 1 : versions.back().tag.sequence + 1;
    VersionTag tag{dataset_id, seq, label};

    if (root_) {
        const fs::path dir = *root_ / dataset_id;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            throw StorageError("cannot create " + dir.string() + ": " + ec.message());
        const fs::path file =
            dir / (std::to_string(seq) + (label.empty() ? "" : "_" + label) + ".tsv");
        std::ofstream out(file, std::ios::binary | std::ios::trunc);
        if (!out)
            throw StorageError("cannot write " + file.string());
        out << snapshot_to_tsv(dataset_id, elements);
        if (!out.flush())
            throw StorageError("short write to " + file.string());
    }

    versions.push_back(DatasetVersion{tag, std::move(elements)});
    return tag;
}

const DatasetVersion* VersionRegistry::find_locked(const VersionTag& tag) const {
    const auto it = datasets_.find(tag.dataset_id);
    if (it == datasets_.end())
        return nullptr;
    for (const auto& v : it->second)
        if (v.tag.sequence == tag.sequence)
            return &v;
    return nullptr;
}

const DatasetVersion* VersionRegistry::find(const VersionTag& tag) const {
    std::lock_guard lock(mutex_);
    return find_locked(tag);
}

const DatasetVersion& VersionRegistry::get(const VersionTag& tag) const {
    if (const DatasetVersion* v = find(tag))
        return *v;
    throw UnknownTagError("unknown version: " + tag.str());
}

VersionTag VersionRegistry::resolve(const std::string& dataset_id, const std::string& token) const {
    std::lock_guard lock(mutex_);
    const auto it = datasets_.find(dataset_id);
    if (it == datasets_.end())
        throw UnknownTagError("unknown dataset: " + dataset_id);

    std::string want = token;
    const auto at = token.rfind('@');
    if (at != std::string::npos) {
        if (token.substr(0, at) != dataset_id)
            throw UnknownTagError("tag '" + token + "' does not name dataset '" + dataset_id + "'");
        want = token.substr(at + 1);
    }
    std::uint64_t seq = 0;
    const auto [ptr, ec] = std::from_chars(want.data(), want.data() + want.size(), seq);
    const bool numeric = ec == std::errc{} && ptr == want.data() + want.size();
    for (const auto& v : it->second) {
        if ((numeric && v.tag.sequence == seq) || (!v.tag.label.empty() && v.tag.label == want))
            return v.tag;
    }
    throw UnknownTagError("no version '" + token + "' of dataset '" + dataset_id + "'");
}

std::vector<VersionTag> VersionRegistry::tags(const std::string& dataset_id) const {
    std::lock_guard lock(mutex_);
    std::vector<VersionTag> out;
    const auto it = datasets_.find(dataset_id);
    if (it != datasets_.end())
        for (const auto& v : it->second)
            out.push_back(v.tag);
    return out;
}

std::vector<std::string> VersionRegistry::dataset_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : datasets_)
        out.push_back(id);
    return out;
}

const DiffResult& VersionRegistry::diff_cached(const VersionTag& from, const VersionTag& to) const {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(from.str(), to.str());
    const auto it = diff_memo_.find(key);
    if (it != diff_memo_.end())
        return it->second;
    const DatasetVersion* a = find_locked(from);
    const DatasetVersion* b = find_locked(to);
    if (!a)
        throw UnknownTagError("unknown version: " + from.str());
    if (!b)
        throw UnknownTagError("unknown version: " + to.str());
    return diff_memo_.emplace(key, diff_for_dataset(*a, *b)).first->second;
}

} // namespace recomp
