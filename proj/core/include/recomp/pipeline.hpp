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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <recomp/history.hpp>
#include <recomp/prov.hpp>
#include <recomp/versioned_store.hpp>

namespace recomp {

using Value = nlohmann::json;
using ValueMap = std::map<std::string, Value>;

using TransparencyLevel = Granularity;

enum class CacheMode { full, outputs_only };

std::string_view to_string(CacheMode m);
CacheMode cache_mode_from_string(std::string_view s);

/// What a step tells the harness about one entity it used. `keys` semantics:
/// a set of element keys means element-granular usage of exactly those keys
/// (an empty set means the step touched nothing — no statement is emitted);
/// nullopt means the step cannot report keys and the usage is coarse.
struct UsageReport {
    std::string entity_id;
    UsageRole role = UsageRole::input;
    /// role=input: originating pipeline input slot. role=dep: dataset id.
    std::string slot;
    std::optional<KeySet> keys;
    /// Value for the prov:type attribute; defaulted when empty.
    std::string prov_type;
};

struct StepContext {
    const ValueMap& values;
    const std::map<std::string, const DatasetVersion*>& deps;

    const Value& in(const std::string& slot) const;
    const DatasetVersion& dep(const std::string& dataset_id) const;
};

struct StepResult {
    ValueMap outputs;
    /// When empty, the harness emits one coarse usage per declared slot.
    std::vector<UsageReport> usages;
};

using StepFn = std::function<StepResult(const StepContext&)>;

/// One component P_j of the composition. Slots are produced before they are
/// consumed; step_index values form 0..r-1 with no gaps.
struct StepSpec {
    std::string name;
    int step_index = 0;
    std::vector<std::string> input_slots;
    std::vector<std::string> dep_slots;
    std::vector<std::string> output_slots;
    StepFn apply;
};

struct PipelineSpec {
    std::string program_id;
    std::string program_version = "1";
    std::vector<StepSpec> steps;
    std::vector<std::string> final_outputs;
    /// prov:type attribute per dataset id (e.g. omim → "OMIM").
    std::map<std::string, std::string> dataset_prov_types;

    /// Structural checks; throws Error on an ill-formed pipeline.
    void validate() const;

    /// Slots consumed by some step but produced by none: the inputs of P.
    std::vector<std::string> input_slots() const;

    /// All dataset ids declared by any step.
    std::vector<std::string> dataset_ids() const;

    /// Input slots a resumption starting at `start` must resolve from the
    /// cache or the original inputs: consumed at step >= start, produced
    /// before it.
    std::vector<std::string> resume_inputs(int start) const;
};

struct RunResult {
    ValueMap outputs;
    HistoryRecord record;
    /// Statements from this execution only: activities are exactly the steps
    /// whose apply ran.
    ProvDocument emitted_prov;
    /// What the record references. Equal to emitted_prov for run(); for
    /// resume() it carries the skipped steps' statements forward from the
    /// original document.
    ProvDocument stored_prov;
};

struct ExecutorConfig {
    TransparencyLevel transparency = Granularity::white_box;
    CacheMode cache_mode = CacheMode::full;
};

/// Executes pipelines against a version registry, appending a history
/// record per execution and caching step-boundary values.
class PipelineExecutor {
public:
    PipelineExecutor(const VersionRegistry& registry, HistoryStore& history, ValueCache& cache,
                     ExecutorConfig config = {});

    /// One full execution. All pipeline input slots and dataset slots must
    /// be bound; steps run in step_index order; provenance is emitted at the
    /// configured transparency; boundary values are cached per cache mode;
    /// the history record is appended.
    RunResult run(const PipelineSpec& pipeline, const ValueMap& inputs,
                  const std::map<std::string, VersionTag>& deps, const std::string& subject = "");

    /// Re-executes steps start..r-1 of a recorded execution, resolving
    /// upstream values from the cache and substituting the given dataset
    /// versions. Outputs equal a full run at the same versions; the cost
    /// counts only the executed steps.
    RunResult resume(const PipelineSpec& pipeline, const HistoryRecord& original, int start,
                     const std::map<std::string, VersionTag>& dep_overrides);

    const ExecutorConfig& config() const { return config_; }
    void set_config(ExecutorConfig config) { config_ = config; }

private:
    RunResult execute(const PipelineSpec& pipeline, ValueMap env,
                      const std::map<std::string, VersionTag>& dep_tags, int start,
                      const HistoryRecord* original, const std::string& subject);

    const VersionRegistry& registry_;
    HistoryStore& history_;
    ValueCache& cache_;
    ExecutorConfig config_;
};

} // namespace recomp
