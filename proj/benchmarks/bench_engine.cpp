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
#include <benchmark/benchmark.h>

#include <memory>

#include <recomp/engine.hpp>
#include <recomp/svi.hpp>

using namespace recomp;

namespace {

/// History of n executions over a synthetic cohort, plus a next ClinVar
/// version to react to.
struct ScopedHistory {
    VersionRegistry registry;
    HistoryStore history;
    ValueCache cache;
    VersionTag om1, cv1, cv2;
    PipelineSpec pipeline = svi::svi_pipeline();

    explicit ScopedHistory(int n_records) {
        const auto universe = svi::SynthUniverse::synthetic(3, 20, 40, 200);
        svi::GrowthSpec growth;
        growth.initial_terms = 16;
        growth.initial_variants = 150;
        growth.status_flip_prob = 0.1;
        const auto epochs = svi::synth_evolution(5, 2, growth, universe);
        om1 = registry.register_version("omim", "e1", epochs[0].omim);
        cv1 = registry.register_version("clinvar", "e1", epochs[0].clinvar);
        registry.register_version("omim", "e2", epochs[1].omim);
        cv2 = registry.register_version("clinvar", "e2", epochs[1].clinvar);

        const auto cohort = svi::gen_cohort(8, n_records, universe, 3, 10);
        PipelineExecutor executor(registry, history, cache);
        for (const auto& patient : cohort)
            executor.run(pipeline, patient.inputs(), {{"omim", om1}, {"clinvar", cv1}},
                         patient.id);
    }
};

void BM_ScopeDependencyChange(benchmark::State& state) {
    ScopedHistory h(static_cast<int>(state.range(0)));
    RecompEngine engine(h.registry, h.history, h.cache);
    const ChangeEvent event = ChangeEvent::dependency(h.registry, "clinvar", h.cv2);
    for (auto _ : state) {
        const auto entries = engine.scope_for_dependency_change(event);
        benchmark::DoNotOptimize(entries);
    }
    state.SetComplexityN(state.range(0));
}

void BM_RunFull(benchmark::State& state) {
    ScopedHistory h(1);
    PipelineExecutor executor(h.registry, h.history, h.cache);
    const auto patient = svi::gen_cohort(9, 1, svi::SynthUniverse::synthetic(3, 20, 40, 200), 3, 10)
                             .front();
    for (auto _ : state) {
        const RunResult r = executor.run(h.pipeline, patient.inputs(),
                                         {{"omim", h.om1}, {"clinvar", h.cv1}}, patient.id);
        benchmark::DoNotOptimize(r);
    }
}

void BM_ResumeFromClassifier(benchmark::State& state) {
    ScopedHistory h(1);
    PipelineExecutor executor(h.registry, h.history, h.cache);
    const HistoryRecord original = *h.history.all().front();
    for (auto _ : state) {
        const RunResult r = executor.resume(h.pipeline, original, 1, {{"clinvar", h.cv2}});
        benchmark::DoNotOptimize(r);
    }
}

} // namespace

BENCHMARK(BM_ScopeDependencyChange)->RangeMultiplier(4)->Range(16, 1024)->Complexity();
BENCHMARK(BM_RunFull);
BENCHMARK(BM_ResumeFromClassifier);
