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
#include <recomp/engine.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace recomp {

std::string_view to_string(RecompMode m) {
    return m == RecompMode::partial ? "partial" : "total";
}

ChangeEvent ChangeEvent::dependency(const VersionRegistry& registry, const std::string& dataset_id,
                                    const VersionTag& to, const std::optional<VersionTag>& from) {
    ChangeEvent e;
    e.kind = ChangeKind::dependency_change;
    e.slot_or_dataset = dataset_id;
    e.to_tag = registry.resolve(dataset_id, to.str()); // normalizes label
    std::optional<VersionTag> base = from;
    if (!base && e.to_tag->sequence > 1) {
        for (const auto& tag : registry.tags(dataset_id))
            if (tag.sequence == e.to_tag->sequence - 1)
                base = tag;
    }
    if (base)
        e.diff = registry.diff_cached(*base, *e.to_tag);
    return e;
}

ChangeEvent ChangeEvent::input(std::string slot, DiffResult diff) {
    ChangeEvent e;
    e.kind = ChangeKind::input_change;
    e.slot_or_dataset = std::move(slot);
    e.diff = std::move(diff);
    return e;
}

RecompEngine::RecompEngine(const VersionRegistry& registry, HistoryStore& history,
                           ValueCache& cache, ExecutorConfig exec_config)
    : registry_(registry), history_(history), cache_(cache), exec_config_(exec_config) {}

namespace {

/// Intersection of a usage's keys with the diff keys; the whole diff key set
/// for coarse usages. Empty result means no match.
KeySet match_keys(const std::optional<KeySet>& usage_keys, const KeySet& diff_keys) {
    if (!usage_keys)
        return diff_keys;
    KeySet out;
    std::set_intersection(usage_keys->begin(), usage_keys->end(), diff_keys.begin(),
                          diff_keys.end(), std::inserter(out, out.begin()));
    return out;
}

std::optional<VersionTag> entity_version(const ProvEntity& entity) {
    const auto it = entity.attributes.find("version");
    if (it == entity.attributes.end())
        return std::nullopt;
    try {
        return VersionTag::parse(it->second);
    } catch (const ParseError&) {
        return std::nullopt;
    }
}

std::string entity_slot(const ProvEntity& entity) {
    const auto it = entity.attributes.find("slot");
    return it == entity.attributes.end() ? entity.id : it->second;
}

void add_match(ScopeEntry& entry, const UsageStatement& usage, int step_index, KeySet keys) {
    for (const auto& m : entry.matched_usages)
        if (m.usage == usage)
            return;
    entry.matched_usages.push_back(MatchedUsage{usage, step_index});
    entry.matched_keys.insert(keys.begin(), keys.end());
}

} // namespace

std::vector<ScopeEntry> RecompEngine::scope_for_input_change(const ChangeEvent& event) const {
    if (event.kind != ChangeKind::input_change)
        throw Error("scope_for_input_change given a non-input event");
    std::vector<ScopeEntry> out;
    if (!event.diff || event.diff->empty())
        return out;
    const KeySet diff_keys = event.diff->all_keys();

    for (const HistoryRecord* record : history_.all()) {
        const ProvDocument& prov = history_.prov_of(*record);
        ScopeEntry entry;
        entry.record = record;
        for (const auto& usage : prov.usages()) {
            if (usage.role != UsageRole::input)
                continue;
            const ProvEntity* entity = prov.find_entity(usage.entity_id);
            if (!entity || entity_slot(*entity) != event.slot_or_dataset)
                continue;
            const KeySet keys = match_keys(usage.element_keys, diff_keys);
            if (keys.empty())
                continue;
            const ProvActivity* activity = prov.find_activity(usage.activity_id);
            add_match(entry, usage, activity ? activity->step_index : 0, keys);
        }
        if (!entry.matched_usages.empty())
            out.push_back(std::move(entry));
    }
    return out;
}

std::vector<ScopeEntry> RecompEngine::scope_for_dependency_change(const ChangeEvent& event) const {
    if (event.kind != ChangeKind::dependency_change)
        throw Error("scope_for_dependency_change given a non-dependency event");
    if (!event.to_tag)
        throw Error("dependency-change event carries no target version");
    const std::string& dataset = event.slot_or_dataset;

    std::vector<ScopeEntry> out;
    for (const HistoryRecord* record : history_.records_using(dataset)) {
        const VersionTag* used = record->tag_for(dataset);
        // the record's own baseline: what it used vs what is now current
        const DiffResult& diff = registry_.diff_cached(*used, *event.to_tag);
        if (diff.empty())
            continue;
        const KeySet diff_keys = diff.all_keys();

        const ProvDocument& prov = history_.prov_of(*record);
        ScopeEntry entry;
        entry.record = record;

        // dep usages of this dataset, and the activities they sit on
        std::set<std::string> dep_activities;
        for (const auto& usage : prov.usages()) {
            if (usage.role != UsageRole::dep)
                continue;
            const ProvEntity* entity = prov.find_entity(usage.entity_id);
            if (!entity)
                continue;
            const auto version = entity_version(*entity);
            if (!version || version->dataset_id != dataset)
                continue;
            dep_activities.insert(usage.activity_id);
            const KeySet keys = match_keys(usage.element_keys, diff_keys);
            if (keys.empty())
                continue;
            const ProvActivity* activity = prov.find_activity(usage.activity_id);
            add_match(entry, usage, activity ? activity->step_index : 0, keys);
        }
        // the elements a step consulted are also named by what feeds it:
        // match the input usages of the activities that used the dataset
        for (const auto& usage : prov.usages()) {
            if (usage.role != UsageRole::input || !dep_activities.count(usage.activity_id))
                continue;
            const KeySet keys = match_keys(usage.element_keys, diff_keys);
            if (keys.empty())
                continue;
            const ProvActivity* activity = prov.find_activity(usage.activity_id);
            add_match(entry, usage, activity ? activity->step_index : 0, keys);
        }

        if (!entry.matched_usages.empty())
            out.push_back(std::move(entry));
    }
    return out;
}

std::vector<ScopeEntry> RecompEngine::scope(const std::vector<ChangeEvent>& events) const {
    std::map<std::string, ScopeEntry> merged;
    std::vector<std::string> order;
    for (const auto& event : events) {
        const auto entries = event.kind == ChangeKind::input_change
                                 ? scope_for_input_change(event)
                                 : scope_for_dependency_change(event);
        for (const auto& entry : entries) {
            auto [it, inserted] = merged.emplace(entry.record->record_id, entry);
            if (inserted) {
                order.push_back(entry.record->record_id);
            } else {
                for (const auto& m : entry.matched_usages)
                    add_match(it->second, m.usage, m.step_index, {});
                it->second.matched_keys.insert(entry.matched_keys.begin(),
                                               entry.matched_keys.end());
            }
        }
    }
    std::vector<ScopeEntry> out;
    out.reserve(order.size());
    for (const auto& id : order)
        out.push_back(std::move(merged.at(id)));
    std::sort(out.begin(), out.end(), [](const ScopeEntry& a, const ScopeEntry& b) {
        return a.record->execution_version < b.record->execution_version;
    });
    return out;
}

int RecompEngine::find_starting_component(const ScopeEntry& entry) {
    if (entry.record && entry.record->transparency == Granularity::black_box)
        throw BlackBoxError("record " + entry.record->record_id +
                            " is black-box: no step structure to start from");
    if (entry.matched_usages.empty())
        throw Error("scope entry has no matched usages");
    int start = entry.matched_usages.front().step_index;
    for (const auto& m : entry.matched_usages)
        start = std::min(start, m.step_index);
    return start;
}

RecompPlan RecompEngine::plan_total(ScopeEntry entry, const PipelineSpec& pipeline,
                                    std::vector<VersionTag> target_versions,
                                    std::vector<BlockingInput> partial_blockers) const {
    RecompPlan p;
    p.entry = std::move(entry);
    p.mode = RecompMode::total;
    p.target_versions = std::move(target_versions);
    p.blocking_inputs = std::move(partial_blockers);
    p.feasible = true;
    for (const auto& slot : pipeline.input_slots()) {
        const auto ref = p.entry.record->input_refs.find(slot);
        if (ref == p.entry.record->input_refs.end()) {
            p.feasible = false;
            p.blocking_inputs.push_back(BlockingInput{slot, "<unrecorded>"});
        } else if (!cache_.contains(ref->second)) {
            p.feasible = false;
            p.blocking_inputs.push_back(BlockingInput{slot, ref->second});
        }
    }
    return p;
}

RecompPlan RecompEngine::plan(const ScopeEntry& entry, const PipelineSpec& pipeline,
                              const std::vector<VersionTag>& target_versions) const {
    if (entry.record->transparency == Granularity::black_box)
        return plan_total(entry, pipeline, target_versions, {});

    int start = find_starting_component(entry);
    // A substituted dataset must not feed a skipped step: its cached outputs
    // would embed the superseded version. Lower the start until every
    // substitution consumed downstream is recomputed from its first use.
    // Datasets consumed only upstream keep the version the cache embeds
    // (their diff did not match this record, so the values stand).
    for (bool lowered = true; lowered;) {
        lowered = false;
        for (const auto& tag : target_versions) {
            int earliest = -1;
            bool downstream = false;
            for (const auto& step : pipeline.steps) {
                if (std::find(step.dep_slots.begin(), step.dep_slots.end(), tag.dataset_id) ==
                    step.dep_slots.end())
                    continue;
                if (earliest < 0)
                    earliest = step.step_index;
                downstream = downstream || step.step_index >= start;
            }
            if (downstream && earliest >= 0 && earliest < start) {
                start = earliest;
                lowered = true;
            }
        }
    }

    RecompPlan p;
    p.entry = entry;
    p.mode = RecompMode::partial;
    p.start_step = start;
    p.target_versions = target_versions;
    p.feasible = true;
    for (const auto& slot : pipeline.resume_inputs(*p.start_step)) {
        const auto ref = entry.record->slot_refs.find(slot);
        if (ref == entry.record->slot_refs.end()) {
            p.feasible = false;
            p.blocking_inputs.push_back(BlockingInput{slot, "<unrecorded>"});
        } else if (!cache_.contains(ref->second)) {
            p.feasible = false;
            p.blocking_inputs.push_back(BlockingInput{slot, ref->second});
        }
    }
    return p;
}

RecompPlan RecompEngine::degrade_to_total(const RecompPlan& plan,
                                          const PipelineSpec& pipeline) const {
    if (plan.feasible || plan.mode == RecompMode::total)
        return plan;
    RecompPlan total =
        plan_total(plan.entry, pipeline, plan.target_versions, plan.blocking_inputs);
    return total.feasible ? total : plan;
}

std::pair<HistoryRecord, DiffResult> RecompEngine::execute_plan(const RecompPlan& plan,
                                                                const PipelineSpec& pipeline) {
    if (!plan.feasible) {
        std::string what = "plan for record " + plan.entry.record->record_id + " is infeasible:";
        for (const auto& b : plan.blocking_inputs)
            what += " " + b.slot;
        throw InfeasiblePlanError(what);
    }
    const HistoryRecord& original = *plan.entry.record;

    std::map<std::string, VersionTag> overrides;
    for (const auto& tag : plan.target_versions)
        overrides.insert_or_assign(tag.dataset_id, tag);

    ExecutorConfig config = exec_config_;
    config.transparency = original.transparency;
    PipelineExecutor executor(registry_, history_, cache_, config);

    RunResult result;
    if (plan.mode == RecompMode::partial) {
        // substitute only what the executed suffix consumes; upstream-only
        // dependencies stay at the version the cached values embed
        std::set<std::string> downstream;
        for (const auto& step : pipeline.steps)
            if (step.step_index >= *plan.start_step)
                downstream.insert(step.dep_slots.begin(), step.dep_slots.end());
        std::erase_if(overrides,
                      [&downstream](const auto& kv) { return !downstream.count(kv.first); });
        result = executor.resume(pipeline, original, *plan.start_step, overrides);
    } else {
        ValueMap inputs;
        for (const auto& [slot, hash] : original.input_refs) {
            const auto bytes = cache_.get(hash);
            if (!bytes)
                throw InfeasiblePlanError("original input '" + slot + "' of record " +
                                          original.record_id + " is not cached");
            inputs[slot] = nlohmann::json::parse(*bytes);
        }
        std::map<std::string, VersionTag> dep_tags;
        for (const auto& tag : original.dependency_tags)
            dep_tags.emplace(tag.dataset_id, tag);
        for (const auto& [ds, tag] : overrides)
            dep_tags.insert_or_assign(ds, tag);
        result = executor.run(pipeline, inputs, dep_tags, original.subject);
    }

    // output diff against the original execution
    const auto old_bytes = cache_.get(original.output_ref);
    std::map<std::string, ElementValue> old_outputs;
    if (old_bytes) {
        const nlohmann::json parsed = nlohmann::json::parse(*old_bytes);
        for (const auto& [slot, value] : parsed.items())
            old_outputs[slot] = value;
    }
    std::map<std::string, ElementValue> new_outputs(result.outputs.begin(), result.outputs.end());
    return {result.record, diff_output(old_outputs, new_outputs)};
}

ReactReport RecompEngine::react(const std::vector<ChangeEvent>& events,
                                const PipelineSpec& pipeline, const ReactOptions& options) {
    std::vector<VersionTag> targets;
    for (const auto& event : events)
        if (event.kind == ChangeKind::dependency_change && event.to_tag)
            targets.push_back(*event.to_tag);

    ReactReport report;
    for (const ScopeEntry& entry : scope(events)) {
        ReactRow row;
        row.record_id = entry.record->record_id;
        row.subject = entry.record->subject;
        try {
            RecompPlan p = plan(entry, pipeline, targets);
            if (!p.feasible)
                p = degrade_to_total(p, pipeline);
            row.mode = p.mode;
            row.start_step = p.start_step;
            row.feasible = p.feasible;
            if (!options.dry_run && p.feasible) {
                const auto [record, diff] = execute_plan(p, pipeline);
                row.executed = true;
                row.n_output_changes = diff.size();
            }
        } catch (const Error& e) {
            row.error = e.what();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

bool ReactReport::all_ok() const {
    for (const auto& row : rows)
        if (!row.error.empty())
            return false;
    return true;
}

std::string ReactReport::to_tsv() const {
    std::ostringstream out;
    for (const auto& row : rows) {
        out << row.record_id << '\t' << (row.in_scope ? "true" : "false") << '\t'
            << to_string(row.mode) << '\t'
            << (row.start_step ? std::to_string(*row.start_step) : "-") << '\t'
            << (row.feasible ? "true" : "false") << '\t' << (row.executed ? "true" : "false")
            << '\t' << row.n_output_changes << '\n';
    }
    return out.str();
}

} // namespace recomp
