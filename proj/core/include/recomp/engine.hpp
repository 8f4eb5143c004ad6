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

#include <optional>
#include <string>
#include <vector>

#include <recomp/history.hpp>
#include <recomp/pipeline.hpp>
#include <recomp/prov.hpp>
#include <recomp/versioned_store.hpp>

namespace recomp {

enum class ChangeKind { input_change, dependency_change };

/// One detected change. For dependency changes the engine re-computes the
/// diff per record (records may have run against different historical
/// versions); `diff` here is the headline diff carried for reporting. For
/// input changes `diff` is authoritative.
struct ChangeEvent {
    ChangeKind kind = ChangeKind::dependency_change;
    std::string slot_or_dataset;
    std::optional<VersionTag> to_tag; // dependency changes only
    std::optional<DiffResult> diff;

    /// Dependency-change event targeting `to`. The headline diff is taken
    /// from `from` when given, else from the version preceding `to`.
    static ChangeEvent dependency(const VersionRegistry& registry, const std::string& dataset_id,
                                  const VersionTag& to,
                                  const std::optional<VersionTag>& from = std::nullopt);

    static ChangeEvent input(std::string slot, DiffResult diff);
};

struct MatchedUsage {
    UsageStatement usage;
    int step_index = 0;
};

/// One record selected into the re-comp scope, with the usage statements
/// that matched and the element keys that triggered the match.
struct ScopeEntry {
    const HistoryRecord* record = nullptr;
    std::vector<MatchedUsage> matched_usages;
    KeySet matched_keys;
};

enum class RecompMode { partial, total };

std::string_view to_string(RecompMode m);

struct BlockingInput {
    std::string slot;
    std::string hash;
};

/// The actionable decision for one in-scope record: re-execute partially
/// from start_step, or totally; feasible iff the values the chosen mode
/// needs resolve in the cache.
struct RecompPlan {
    ScopeEntry entry;
    RecompMode mode = RecompMode::total;
    std::optional<int> start_step; // present iff partial
    bool feasible = false;
    std::vector<BlockingInput> blocking_inputs; // non-empty iff the partial path is blocked
    std::vector<VersionTag> target_versions;
};

struct ReactRow {
    std::string record_id;
    std::string subject;
    bool in_scope = true;
    RecompMode mode = RecompMode::total;
    std::optional<int> start_step;
    bool feasible = false;
    bool executed = false;
    std::size_t n_output_changes = 0;
    std::string error;
};

struct ReactReport {
    std::vector<ReactRow> rows;

    bool all_ok() const;
    /// Tab-separated rows: record_id, in_scope, mode, start_step, feasible,
    /// executed, n_output_changes.
    std::string to_tsv() const;
};

struct ReactOptions {
    bool dry_run = false;
};

/// Scope selection, starting-component search, feasibility checking, and
/// partial/total re-execution over a history store.
class RecompEngine {
public:
    RecompEngine(const VersionRegistry& registry, HistoryStore& history, ValueCache& cache,
                 ExecutorConfig exec_config = {});

    /// Records whose provenance used the named input slot with element keys
    /// intersecting the diff (coarse usages match unconditionally).
    std::vector<ScopeEntry> scope_for_input_change(const ChangeEvent& event) const;

    /// Records whose provenance used the changed dataset, matched at element
    /// granularity against a per-record diff (the record's own version → the
    /// event's target version). A dep usage matches on its own keys; input
    /// usages of the activities that used the dataset are matched as well,
    /// since the elements a step consults are named by what feeds it. Coarse
    /// usages match unconditionally.
    std::vector<ScopeEntry> scope_for_dependency_change(const ChangeEvent& event) const;

    /// Union scope over several events; matches are merged per record.
    std::vector<ScopeEntry> scope(const std::vector<ChangeEvent>& events) const;

    /// Minimum step_index over the matched usages. Throws BlackBoxError for
    /// records without step structure.
    static int find_starting_component(const ScopeEntry& entry);

    /// Decides partial vs total for one in-scope record and checks
    /// feasibility against the cache. White-box records plan partial from
    /// the starting component (infeasibility is reported, not raised);
    /// black-box records plan total.
    RecompPlan plan(const ScopeEntry& entry, const PipelineSpec& pipeline,
                    const std::vector<VersionTag>& target_versions) const;

    /// Re-plans an infeasible partial as total when the original inputs are
    /// cached; returns the plan unchanged otherwise.
    RecompPlan degrade_to_total(const RecompPlan& plan, const PipelineSpec& pipeline) const;

    /// Executes a feasible plan: resumes from the starting component
    /// (partial) or re-runs from the original inputs (total), appending a
    /// new history record. Returns the new record and the output diff
    /// against the original execution.
    std::pair<HistoryRecord, DiffResult> execute_plan(const RecompPlan& plan,
                                                      const PipelineSpec& pipeline);

    /// End-to-end reaction to a batch of events: union scope, plan each
    /// record (degrading blocked partials to total), execute unless dry-run.
    /// Per-record failures are reported in their row, not propagated.
    ReactReport react(const std::vector<ChangeEvent>& events, const PipelineSpec& pipeline,
                      const ReactOptions& options = {});

private:
    RecompPlan plan_total(ScopeEntry entry, const PipelineSpec& pipeline,
                          std::vector<VersionTag> target_versions,
                          std::vector<BlockingInput> partial_blockers) const;

    const VersionRegistry& registry_;
    HistoryStore& history_;
    ValueCache& cache_;
    ExecutorConfig exec_config_;
};

} // namespace recomp
