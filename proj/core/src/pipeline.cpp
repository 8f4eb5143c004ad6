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
#include <recomp/pipeline.hpp>

#include <algorithm>
#include <chrono>
#include <set>

#include <recomp/sha256.hpp>

namespace recomp {

std::string_view to_string(CacheMode m) {
    return m == CacheMode::full ? "full" : "outputs-only";
}

CacheMode cache_mode_from_string(std::string_view s) {
    if (s == "full")
        return CacheMode::full;
    if (s == "outputs-only" || s == "outputs_only")
        return CacheMode::outputs_only;
    throw ConfigError("invalid cache mode: '" + std::string(s) + "'");
}

const Value& StepContext::in(const std::string& slot) const {
    const auto it = values.find(slot);
    if (it == values.end())
        throw UnboundSlotError(slot);
    return it->second;
}

const DatasetVersion& StepContext::dep(const std::string& dataset_id) const {
    const auto it = deps.find(dataset_id);
    if (it == deps.end())
        throw UnboundSlotError("dep:" + dataset_id);
    return *it->second;
}

// -- PipelineSpec ---------------------------------------------------------------

void PipelineSpec::validate() const {
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i].step_index != static_cast<int>(i))
            throw Error("pipeline '" + program_id + "': step_index values must form 0.." +
                        std::to_string(steps.size() ? steps.size() - 1 : 0) +
                        " in composition order");
        if (!steps[i].apply)
            throw Error("pipeline '" + program_id + "': step '" + steps[i].name +
                        "' has no apply function");
    }

    std::map<std::string, int> produced_at;
    for (const auto& step : steps) {
        for (const auto& slot : step.output_slots) {
            if (!produced_at.emplace(slot, step.step_index).second)
                throw Error("pipeline '" + program_id + "': slot '" + slot +
                            "' produced by more than one step");
        }
    }
    for (const auto& step : steps) {
        for (const auto& slot : step.input_slots) {
            const auto it = produced_at.find(slot);
            if (it != produced_at.end() && it->second >= step.step_index)
                throw Error("pipeline '" + program_id + "': slot '" + slot +
                            "' consumed at step " + std::to_string(step.step_index) +
                            " before it is produced");
        }
    }
    const auto inputs = input_slots();
    for (const auto& slot : final_outputs) {
        if (!produced_at.count(slot) &&
            std::find(inputs.begin(), inputs.end(), slot) == inputs.end())
            throw Error("pipeline '" + program_id + "': final output '" + slot +
                        "' is produced by no step");
    }
}

std::vector<std::string> PipelineSpec::input_slots() const {
    std::set<std::string> produced, consumed;
    for (const auto& step : steps) {
        produced.insert(step.output_slots.begin(), step.output_slots.end());
        consumed.insert(step.input_slots.begin(), step.input_slots.end());
    }
    // zero-step passthrough: the final outputs are themselves inputs
    if (steps.empty())
        consumed.insert(final_outputs.begin(), final_outputs.end());
    std::vector<std::string> out;
    for (const auto& slot : consumed)
        if (!produced.count(slot))
            out.push_back(slot);
    return out;
}

std::vector<std::string> PipelineSpec::dataset_ids() const {
    std::set<std::string> ids;
    for (const auto& step : steps)
        ids.insert(step.dep_slots.begin(), step.dep_slots.end());
    return {ids.begin(), ids.end()};
}

std::vector<std::string> PipelineSpec::resume_inputs(int start) const {
    std::set<std::string> produced, consumed;
    for (const auto& step : steps) {
        if (step.step_index < start)
            continue;
        produced.insert(step.output_slots.begin(), step.output_slots.end());
        consumed.insert(step.input_slots.begin(), step.input_slots.end());
    }
    std::vector<std::string> out;
    for (const auto& slot : consumed)
        if (!produced.count(slot))
            out.push_back(slot);
    return out;
}

// -- PipelineExecutor -------------------------------------------------------------

PipelineExecutor::PipelineExecutor(const VersionRegistry& registry, HistoryStore& history,
                                   ValueCache& cache, ExecutorConfig config)
    : registry_(registry), history_(history), cache_(cache), config_(config) {}

namespace {

struct EmittedUsage {
    std::string activity_id;
    ProvEntity entity;
    UsageRole role;
    std::optional<KeySet> keys;
};

/// Declares `entity`, renaming it when the id is taken by a different
/// entity; returns the id actually used.
std::string declare_disambiguated(ProvDocument& doc, ProvEntity entity, const std::string& suffix) {
    if (const ProvEntity* existing = doc.find_entity(entity.id)) {
        if (*existing == entity)
            return entity.id;
        entity.id += "." + suffix;
    }
    doc.declare_entity(entity);
    return entity.id;
}

std::string producing_activity(const PipelineSpec& pipeline, const std::string& slot, int start) {
    for (const auto& step : pipeline.steps)
        if (step.step_index >= start &&
            std::find(step.output_slots.begin(), step.output_slots.end(), slot) !=
                step.output_slots.end())
            return step.name;
    return {};
}

} // namespace

RunResult PipelineExecutor::run(const PipelineSpec& pipeline, const ValueMap& inputs,
                                const std::map<std::string, VersionTag>& deps,
                                const std::string& subject) {
    pipeline.validate();
    for (const auto& slot : pipeline.input_slots())
        if (!inputs.count(slot))
            throw UnboundSlotError(slot);
    return execute(pipeline, inputs, deps, 0, nullptr, subject);
}

RunResult PipelineExecutor::resume(const PipelineSpec& pipeline, const HistoryRecord& original,
                                   int start, const std::map<std::string, VersionTag>& dep_overrides) {
    pipeline.validate();
    const int r = static_cast<int>(pipeline.steps.size());
    if (start < 0 || start >= r)
        throw InvalidStartError("start step " + std::to_string(start) + " outside 0.." +
                                std::to_string(r - 1));
    if (original.transparency != Granularity::white_box)
        throw InvalidStartError("record " + original.record_id +
                                " is black-box; partial re-execution has no step structure");
    // a substituted dataset must not feed any skipped step, whose cached
    // outputs would silently embed the old version
    for (const auto& [ds, tag] : dep_overrides) {
        for (const auto& step : pipeline.steps) {
            if (step.step_index >= start)
                break;
            if (std::find(step.dep_slots.begin(), step.dep_slots.end(), ds) !=
                step.dep_slots.end())
                throw InvalidStartError("start step " + std::to_string(start) + " skips step '" +
                                        step.name + "' which consumed substituted dataset '" + ds +
                                        "'");
        }
    }

    // resolve the boundary values the suffix needs
    ValueMap env;
    std::vector<std::pair<std::string, std::string>> missing;
    for (const auto& slot : pipeline.resume_inputs(start)) {
        const auto ref = original.slot_refs.find(slot);
        if (ref == original.slot_refs.end()) {
            missing.emplace_back(slot, "<unrecorded>");
            continue;
        }
        const auto bytes = cache_.get(ref->second);
        if (!bytes) {
            missing.emplace_back(slot, ref->second);
            continue;
        }
        env[slot] = nlohmann::json::parse(*bytes);
    }
    if (!missing.empty())
        throw MissingCacheError(std::move(missing));

    std::map<std::string, VersionTag> dep_tags;
    for (const auto& tag : original.dependency_tags)
        dep_tags.emplace(tag.dataset_id, tag);
    for (const auto& [ds, tag] : dep_overrides)
        dep_tags.insert_or_assign(ds, tag);

    return execute(pipeline, std::move(env), dep_tags, start, &original, original.subject);
}

RunResult PipelineExecutor::execute(const PipelineSpec& pipeline, ValueMap env,
                                    const std::map<std::string, VersionTag>& dep_tags, int start,
                                    const HistoryRecord* original, const std::string& subject) {
    const TransparencyLevel transparency =
        original ? original->transparency : config_.transparency;

    // bind dataset versions
    std::map<std::string, const DatasetVersion*> dep_versions;
    for (const auto& ds : pipeline.dataset_ids()) {
        const auto it = dep_tags.find(ds);
        if (it == dep_tags.end())
            throw UnboundSlotError("dep:" + ds);
        dep_versions.emplace(ds, &registry_.get(it->second));
    }

    const auto t0 = std::chrono::steady_clock::now();

    // execute the suffix, collecting usage reports per executed step
    std::vector<std::pair<const StepSpec*, std::vector<UsageReport>>> executed;
    for (const auto& step : pipeline.steps) {
        if (step.step_index < start)
            continue;
        StepResult result;
        try {
            result = step.apply(StepContext{env, dep_versions});
        } catch (const std::exception& e) {
            throw StepFailureError(step.name, step.step_index, e.what());
        }
        for (const auto& slot : step.output_slots)
            if (!result.outputs.count(slot))
                throw StepFailureError(step.name, step.step_index,
                                       "declared output slot '" + slot + "' not produced");
        for (auto& [slot, value] : result.outputs) {
            if (std::find(step.output_slots.begin(), step.output_slots.end(), slot) ==
                step.output_slots.end())
                throw StepFailureError(step.name, step.step_index,
                                       "produced undeclared slot '" + slot + "'");
            env[slot] = std::move(value);
        }

        std::vector<UsageReport> reports = std::move(result.usages);
        if (reports.empty()) {
            // steps that report nothing fall back to coarse usage of every
            // declared slot
            for (const auto& ds : step.dep_slots)
                reports.push_back(UsageReport{ds, UsageRole::dep, ds, std::nullopt, ""});
            for (const auto& slot : step.input_slots)
                reports.push_back(UsageReport{slot, UsageRole::input, slot, std::nullopt, ""});
        }
        executed.emplace_back(&step, std::move(reports));
    }

    const auto wall_time =
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);

    // -- provenance emission -----------------------------------------------

    const auto dep_prov_type = [&pipeline](const std::string& ds) {
        const auto it = pipeline.dataset_prov_types.find(ds);
        return it == pipeline.dataset_prov_types.end() ? ds : it->second;
    };

    ProvDocument emitted(transparency);
    if (transparency == Granularity::white_box) {
        for (const auto& [step, reports] : executed)
            emitted.declare_activity(ProvActivity{step->name, step->step_index, step->step_index});
        for (const auto& [step, reports] : executed) {
            for (const auto& report : reports) {
                if (report.keys && report.keys->empty())
                    continue; // touched nothing: no statement
                ProvEntity entity;
                entity.id = report.entity_id.empty() ? report.slot : report.entity_id;
                if (report.role == UsageRole::dep) {
                    const auto tag_it = dep_tags.find(report.slot);
                    if (tag_it == dep_tags.end())
                        throw StepFailureError(step->name, step->step_index,
                                               "usage report names unbound dataset '" +
                                                   report.slot + "'");
                    entity.attributes["prov:type"] =
                        report.prov_type.empty() ? dep_prov_type(report.slot) : report.prov_type;
                    entity.attributes["version"] = tag_it->second.str();
                    entity.is_collection = true;
                } else {
                    if (!report.prov_type.empty())
                        entity.attributes["prov:type"] = report.prov_type;
                    else if (report.keys)
                        entity.attributes["prov:type"] = "prov:collection";
                    entity.attributes["slot"] = report.slot;
                    entity.is_collection = report.keys.has_value();
                }
                const std::string id =
                    declare_disambiguated(emitted, std::move(entity), std::to_string(step->step_index));
                emitted.assert_usage(step->name, id, report.role, report.keys);
            }
        }
        // tie final outputs to their producing activities
        for (const auto& slot : pipeline.final_outputs) {
            const std::string producer = producing_activity(pipeline, slot, start);
            if (producer.empty())
                continue;
            ProvEntity entity;
            entity.id = slot;
            entity.attributes["slot"] = slot;
            if (env.count(slot) && env.at(slot).is_object()) {
                entity.attributes["prov:type"] = "prov:collection";
                entity.is_collection = true;
            }
            const std::string id = declare_disambiguated(emitted, std::move(entity), "out");
            emitted.assert_generation(id, producer);
        }
    } else {
        emitted.declare_activity(ProvActivity{pipeline.program_id, 0, 0});
        for (const auto& ds : pipeline.dataset_ids()) {
            ProvEntity entity;
            entity.id = ds;
            entity.attributes["prov:type"] = dep_prov_type(ds);
            entity.attributes["version"] = dep_tags.at(ds).str();
            entity.is_collection = true;
            emitted.declare_entity(entity);
            emitted.assert_usage(pipeline.program_id, ds, UsageRole::dep);
        }
        for (const auto& slot : pipeline.input_slots()) {
            ProvEntity entity;
            entity.id = slot;
            entity.attributes["slot"] = slot;
            emitted.declare_entity(entity);
            emitted.assert_usage(pipeline.program_id, slot, UsageRole::input);
        }
        for (const auto& slot : pipeline.final_outputs) {
            ProvEntity entity;
            entity.id = slot;
            entity.attributes["slot"] = slot;
            const std::string id = declare_disambiguated(emitted, std::move(entity), "out");
            emitted.assert_generation(id, pipeline.program_id);
        }
    }

    // -- merged document for partial re-execution ---------------------------

    ProvDocument stored = emitted;
    if (original && start > 0) {
        const ProvDocument& orig = history_.prov_of(*original);
        ProvDocument merged(Granularity::white_box);

        // fresh statements first; retained entities yield on id collision
        for (const auto& a : emitted.activities())
            merged.declare_activity(a);
        for (const auto& e : emitted.entities())
            merged.declare_entity(e);

        std::set<std::string> retained_activities;
        for (const auto& a : orig.activities()) {
            if (a.step_index < start) {
                merged.declare_activity(a);
                retained_activities.insert(a.id);
            }
        }
        std::map<std::string, std::string> renamed; // original id -> merged id
        const auto carry_entity = [&](const std::string& id) {
            if (renamed.count(id))
                return;
            const ProvEntity* e = orig.find_entity(id);
            if (!e)
                return;
            ProvEntity copy = *e;
            renamed[id] = declare_disambiguated(merged, std::move(copy), "orig");
        };
        for (const auto& u : orig.usages()) {
            if (!retained_activities.count(u.activity_id))
                continue;
            carry_entity(u.entity_id);
            merged.assert_usage(u.activity_id, renamed.at(u.entity_id), u.role, u.element_keys);
        }
        for (const auto& g : orig.generations()) {
            if (!retained_activities.count(g.activity_id))
                continue;
            carry_entity(g.entity_id);
            merged.assert_generation(renamed.at(g.entity_id), g.activity_id);
        }
        for (const auto& u : emitted.usages())
            merged.assert_usage(u.activity_id, u.entity_id, u.role, u.element_keys);
        for (const auto& g : emitted.generations())
            merged.assert_generation(g.entity_id, g.activity_id);
        stored = std::move(merged);
    }

    // -- hashing and caching -------------------------------------------------

    const auto pipeline_inputs = pipeline.input_slots();
    const std::set<std::string> input_set(pipeline_inputs.begin(), pipeline_inputs.end());
    const std::set<std::string> final_set(pipeline.final_outputs.begin(),
                                          pipeline.final_outputs.end());

    HistoryRecord record;
    record.program_id = pipeline.program_id;
    record.program_version = pipeline.program_version;
    record.subject = subject;
    record.transparency = transparency;
    if (original)
        record.slot_refs = original->slot_refs; // upstream boundaries carry over

    for (const auto& [slot, value] : env) {
        const std::string bytes = ValueCache::canonical_bytes(value);
        const bool persist = config_.cache_mode == CacheMode::full || input_set.count(slot) ||
                             final_set.count(slot);
        const std::string hash = persist ? cache_.put(bytes) : sha256_hex(bytes);
        record.slot_refs[slot] = hash;
    }
    if (original) {
        record.input_refs = original->input_refs;
    } else {
        for (const auto& slot : pipeline_inputs)
            record.input_refs[slot] = record.slot_refs.at(slot);
    }

    ValueMap outputs;
    nlohmann::json outputs_json = nlohmann::json::object();
    for (const auto& slot : pipeline.final_outputs) {
        outputs[slot] = env.at(slot);
        outputs_json[slot] = env.at(slot);
    }
    record.output_ref = cache_.put(ValueCache::canonical_bytes(outputs_json));

    for (const auto& [ds, tag] : dep_tags)
        record.dependency_tags.push_back(tag);

    record.cost.wall_time_us = wall_time.count();
    record.cost.steps_executed = static_cast<int>(executed.size());
    record.cost.abstract_units = static_cast<double>(executed.size());

    const std::string id = history_.append(std::move(record), stored);
    const HistoryRecord* appended = history_.find(id);

    for (const auto& [step, reports] : executed)
        for (const auto& slot : step->output_slots)
            cache_.note_producer(appended->slot_refs.at(slot),
                                 ValueCache::Producer{id, step->step_index});
    cache_.note_producer(appended->output_ref,
                         ValueCache::Producer{id, executed.empty()
                                                      ? 0
                                                      : executed.back().first->step_index});

    RunResult result;
    result.outputs = std::move(outputs);
    result.record = *appended;
    result.emitted_prov = std::move(emitted);
    result.stored_prov = std::move(stored);
    return result;
}

} // namespace recomp
