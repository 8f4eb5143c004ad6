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
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <recomp/engine.hpp>
#include <recomp/svi.hpp>
#include <recomp/workspace.hpp>

namespace {

using namespace recomp;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw StorageError("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Rows rendered as TSV by default, aligned columns with --human.
class Table {
public:
    explicit Table(bool human) : human_(human) {}

    void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

    void print(std::ostream& out) const {
        if (!human_) {
            for (const auto& row : rows_) {
                for (std::size_t i = 0; i < row.size(); ++i)
                    out << row[i] << (i + 1 < row.size() ? "\t" : "");
                out << '\n';
            }
            return;
        }
        std::vector<std::size_t> widths;
        for (const auto& row : rows_) {
            widths.resize(std::max(widths.size(), row.size()), 0);
            for (std::size_t i = 0; i < row.size(); ++i)
                widths[i] = std::max(widths[i], row[i].size());
        }
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << row[i];
                if (i + 1 < row.size())
                    out << std::string(widths[i] - row[i].size() + 2, ' ');
            }
            out << '\n';
        }
    }

private:
    bool human_;
    std::vector<std::vector<std::string>> rows_;
};

std::string join_keys(const KeySet& keys) {
    std::string out;
    for (const auto& k : keys) {
        if (!out.empty())
            out += ",";
        out += k;
    }
    return out.empty() ? "-" : out;
}

struct GlobalOptions {
    std::string workspace = "./recomp-ws";
    std::string transparency;
    std::string cache_mode;
    bool human = false;

    WorkspaceOverrides overrides() const {
        WorkspaceOverrides o;
        if (transparency == "white")
            o.transparency = Granularity::white_box;
        else if (transparency == "black")
            o.transparency = Granularity::black_box;
        else if (!transparency.empty())
            throw ConfigError("invalid --transparency: '" + transparency + "'");
        if (!cache_mode.empty())
            o.cache_mode = cache_mode_from_string(cache_mode);
        return o;
    }
};

int cmd_register(const GlobalOptions& opts, const std::string& dataset_id,
                 const std::string& label, const std::string& file) {
    Workspace ws = Workspace::open(opts.workspace, opts.overrides());
    const auto lock = ws.lock();
    const ElementMap elements = parse_snapshot_tsv(dataset_id, read_file(file));
    const VersionTag tag = ws.registry().register_version(dataset_id, label, elements);
    std::cout << tag.display() << '\n';
    return 0;
}

int cmd_run(const GlobalOptions& opts, const std::string& cohort_file, const std::string& omim_tag,
            const std::string& clinvar_tag) {
    Workspace ws = Workspace::open(opts.workspace, opts.overrides());
    const auto lock = ws.lock();
    const auto cohort = svi::parse_cohort_tsv(read_file(cohort_file));

    const std::map<std::string, VersionTag> deps{
        {"omim", ws.registry().resolve("omim", omim_tag)},
        {"clinvar", ws.registry().resolve("clinvar", clinvar_tag)},
    };
    PipelineExecutor executor(ws.registry(), ws.history(), ws.cache(), ws.executor_config());
    const PipelineSpec pipeline = svi::svi_pipeline();

    Table table(opts.human);
    table.row({"# record_id", "patient", "red", "amber", "green"});
    for (const auto& patient : cohort) {
        const RunResult result = executor.run(pipeline, patient.inputs(), deps, patient.id);
        int red = 0, amber = 0, green = 0;
        for (const auto& [id, cls] : result.outputs.at("classified").items()) {
            const auto c = svi::classification_from_string(cls.get<std::string>());
            red += c == svi::Classification::red;
            amber += c == svi::Classification::amber;
            green += c == svi::Classification::green;
        }
        table.row({result.record.record_id, patient.id, std::to_string(red),
                   std::to_string(amber), std::to_string(green)});
    }
    table.print(std::cout);
    return 0;
}

int cmd_diff(const GlobalOptions& opts, const std::string& dataset_id, const std::string& tag_a,
             const std::string& tag_b) {
    Workspace ws = Workspace::open(opts.workspace, opts.overrides());
    const auto lock = ws.lock();
    const VersionTag a = ws.registry().resolve(dataset_id, tag_a);
    const VersionTag b = ws.registry().resolve(dataset_id, tag_b);
    const DiffResult d = diff_for_dataset(ws.registry().get(a), ws.registry().get(b));

    std::cout << "# diff " << dataset_id << " " << a.str() << " -> " << b.str()
              << " added=" << d.added.size() << " removed=" << d.removed.size()
              << " changed=" << d.changed.size() << '\n';
    Table table(opts.human);
    for (const auto& k : d.added)
        table.row({"added", k});
    for (const auto& k : d.removed)
        table.row({"removed", k});
    for (const auto& k : d.changed)
        table.row({"changed", k});
    table.print(std::cout);
    return 0;
}

int cmd_scope(const GlobalOptions& opts, const std::string& dataset_id, const std::string& tag,
              bool with_plan) {
    Workspace ws = Workspace::open(opts.workspace, opts.overrides());
    const auto lock = ws.lock();
    const VersionTag to = ws.registry().resolve(dataset_id, tag);
    RecompEngine engine(ws.registry(), ws.history(), ws.cache(), ws.executor_config());
    const auto events = std::vector<ChangeEvent>{ChangeEvent::dependency(ws.registry(), dataset_id, to)};
    const auto entries = engine.scope(events);

    Table table(opts.human);
    if (with_plan) {
        table.row({"# record_id", "subject", "mode", "start_step", "feasible", "blocking",
                   "matched_keys"});
        const PipelineSpec pipeline = svi::svi_pipeline();
        for (const auto& entry : entries) {
            const RecompPlan p = engine.plan(entry, pipeline, {to});
            std::string blocking;
            for (const auto& b : p.blocking_inputs) {
                if (!blocking.empty())
                    blocking += ",";
                blocking += b.slot;
            }
            table.row({entry.record->record_id, entry.record->subject,
                       std::string(to_string(p.mode)),
                       p.start_step ? std::to_string(*p.start_step) : "-",
                       p.feasible ? "true" : "false", blocking.empty() ? "-" : blocking,
                       join_keys(entry.matched_keys)});
        }
    } else {
        table.row({"# record_id", "subject", "matched_keys"});
        for (const auto& entry : entries)
            table.row({entry.record->record_id, entry.record->subject,
                       join_keys(entry.matched_keys)});
    }
    table.print(std::cout);
    return 0;
}

int cmd_rerun(const GlobalOptions& opts, const std::string& dataset_id, const std::string& tag,
              bool dry_run) {
    Workspace ws = Workspace::open(opts.workspace, opts.overrides());
    const auto lock = ws.lock();
    const VersionTag to = ws.registry().resolve(dataset_id, tag);
    RecompEngine engine(ws.registry(), ws.history(), ws.cache(), ws.executor_config());
    const auto events = std::vector<ChangeEvent>{ChangeEvent::dependency(ws.registry(), dataset_id, to)};
    const ReactReport report =
        engine.react(events, svi::svi_pipeline(), ReactOptions{dry_run});

    Table table(opts.human);
    table.row({"# record_id", "in_scope", "mode", "start_step", "feasible", "executed",
               "n_output_changes"});
    for (const auto& row : report.rows)
        table.row({row.record_id, row.in_scope ? "true" : "false", std::string(to_string(row.mode)),
                   row.start_step ? std::to_string(*row.start_step) : "-",
                   row.feasible ? "true" : "false", row.executed ? "true" : "false",
                   std::to_string(row.n_output_changes)});
    table.print(std::cout);

    bool failed = false;
    for (const auto& row : report.rows) {
        if (!row.error.empty()) {
            std::cerr << "recomp: record " << row.record_id << ": " << row.error << '\n';
            failed = true;
        }
    }
    return failed ? 1 : 0;
}

int cmd_report(const std::string& cohort_file, int epochs, std::uint64_t seed,
               double flip_rate) {
    const auto cohort = svi::parse_cohort_tsv(read_file(cohort_file));
    const auto universe = svi::SynthUniverse::from_cohort(cohort);
    // ramp coverage into the cohort's own universe so the trend has a shape
    svi::GrowthSpec growth;
    growth.initial_terms = std::max<int>(1, int(universe.terms.size()) / 3);
    growth.terms_per_epoch = std::max<int>(1, int(universe.terms.size()) / 5);
    growth.initial_variants = std::max<int>(1, int(universe.variants.size()) / 3);
    growth.variants_per_epoch = std::max<int>(1, int(universe.variants.size()) / 5);
    growth.status_flip_prob = flip_rate;
    const auto evolution = svi::synth_evolution(seed, epochs, growth, universe);
    std::cout << svi::trend_to_tsv(svi::trend_report(cohort, evolution));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"provenance-driven selective re-computation over versioned reference data"};
    app.require_subcommand(1);

    GlobalOptions opts;
    app.add_option("--workspace", opts.workspace, "workspace directory")
        ->capture_default_str();
    app.add_option("--transparency", opts.transparency, "white|black");
    app.add_option("--cache-mode", opts.cache_mode, "full|outputs-only");
    app.add_flag("--human", opts.human, "aligned tables instead of TSV");

    std::string dataset_id, label, file, tag_a, tag_b, cohort_file, omim_tag, clinvar_tag;
    bool dry_run = false;
    int epochs = 5;
    std::uint64_t seed = 1;
    double flip_rate = 0.0;

    auto* reg = app.add_subcommand("register", "register a dataset snapshot as a new version");
    reg->add_option("dataset", dataset_id)->required();
    reg->add_option("label", label)->required();
    reg->add_option("file", file)->required()->check(CLI::ExistingFile);

    auto* run = app.add_subcommand("run", "execute the pipeline for every patient in a cohort");
    run->add_option("cohort", cohort_file)->required()->check(CLI::ExistingFile);
    run->add_option("--omim", omim_tag, "OMIM version tag")->required();
    run->add_option("--clinvar", clinvar_tag, "ClinVar version tag")->required();

    auto* diff = app.add_subcommand("diff", "compare two versions of a dataset");
    diff->add_option("dataset", dataset_id)->required();
    diff->add_option("from", tag_a)->required();
    diff->add_option("to", tag_b)->required();

    auto* scope = app.add_subcommand("scope", "past executions invalidated by a new version");
    scope->add_option("dataset", dataset_id)->required();
    scope->add_option("to", tag_b)->required();

    auto* plan = app.add_subcommand("plan", "re-computation plans for the invalidated executions");
    plan->add_option("dataset", dataset_id)->required();
    plan->add_option("to", tag_b)->required();

    auto* rerun = app.add_subcommand("rerun", "re-execute the invalidated computations");
    rerun->add_option("dataset", dataset_id)->required();
    rerun->add_option("to", tag_b)->required();
    rerun->add_flag("--dry-run", dry_run, "plan only, do not execute");

    auto* report = app.add_subcommand("report", "trend counts over a synthetic snapshot evolution");
    report->add_option("cohort", cohort_file)->required()->check(CLI::ExistingFile);
    report->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
    report->add_option("--seed", seed);
    report->add_option("--flip-rate", flip_rate, "status flip probability per epoch");

    CLI11_PARSE(app, argc, argv);

    try {
        if (reg->parsed())
            return cmd_register(opts, dataset_id, label, file);
        if (run->parsed())
            return cmd_run(opts, cohort_file, omim_tag, clinvar_tag);
        if (diff->parsed())
            return cmd_diff(opts, dataset_id, tag_a, tag_b);
        if (scope->parsed())
            return cmd_scope(opts, dataset_id, tag_b, false);
        if (plan->parsed())
            return cmd_scope(opts, dataset_id, tag_b, true);
        if (rerun->parsed())
            return cmd_rerun(opts, dataset_id, tag_b, dry_run);
        if (report->parsed())
            return cmd_report(cohort_file, epochs, seed, flip_rate);
    } catch (const recomp::Error& e) {
        std::cerr << "recomp: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "recomp: internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
