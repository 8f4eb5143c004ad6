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

#include <random>

#include <recomp/sha256.hpp>
#include <recomp/versioned_store.hpp>

using namespace recomp;

namespace {

/// Two ClinVar-shaped snapshots of n variants, 1% added and 1% flipped.
std::pair<DatasetVersion, DatasetVersion> clinvar_pair(std::int64_t n) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    ElementMap a, b;
    for (std::int64_t i = 0; i < n; ++i) {
        const std::string id = std::to_string(100000000 + i);
        const char* raw = coin(rng) < 0.5 ? "uncertain significance" : "benign";
        a[id] = nlohmann::json{{"gene", "G" + std::to_string(i % 500)}, {"raw", raw}};
        b[id] = coin(rng) < 0.01
                    ? nlohmann::json{{"gene", "G" + std::to_string(i % 500)}, {"raw", "pathogenic"}}
                    : a[id];
    }
    for (std::int64_t i = 0; i < n / 100; ++i) {
        const std::string id = std::to_string(900000000 + i);
        b[id] = nlohmann::json{{"gene", "G1"}, {"raw", "benign"}};
    }
    return {DatasetVersion{{"clinvar", 1, ""}, std::move(a)},
            DatasetVersion{{"clinvar", 2, ""}, std::move(b)}};
}

void BM_DiffClinVar(benchmark::State& state) {
    const auto [a, b] = clinvar_pair(state.range(0));
    for (auto _ : state) {
        const DiffResult d = diff_clinvar(a, b);
        benchmark::DoNotOptimize(d);
    }
    state.SetComplexityN(state.range(0));
}

void BM_DiffGeneric(benchmark::State& state) {
    std::mt19937_64 rng(11);
    ElementMap a, b;
    for (std::int64_t i = 0; i < state.range(0); ++i) {
        const std::string key = "k" + std::to_string(i);
        a[key] = "v" + std::to_string(i);
        b[key] = i % 97 == 0 ? "w" : a[key].get<std::string>();
    }
    const DatasetVersion va{{"refdb", 1, ""}, std::move(a)};
    const DatasetVersion vb{{"refdb", 2, ""}, std::move(b)};
    for (auto _ : state) {
        const DiffResult d = diff_generic(va, vb);
        benchmark::DoNotOptimize(d);
    }
    state.SetComplexityN(state.range(0));
}

void BM_SnapshotParse(benchmark::State& state) {
    const auto [a, _] = clinvar_pair(state.range(0));
    const std::string tsv = snapshot_to_tsv("clinvar", a.elements);
    for (auto _s : state) {
        const ElementMap m = parse_snapshot_tsv("clinvar", tsv);
        benchmark::DoNotOptimize(m);
    }
    state.SetBytesProcessed(std::int64_t(state.iterations()) * std::int64_t(tsv.size()));
}

void BM_Sha256(benchmark::State& state) {
    const std::string payload(state.range(0), 'x');
    for (auto _ : state)
        benchmark::DoNotOptimize(sha256_hex(payload));
    state.SetBytesProcessed(std::int64_t(state.iterations()) * state.range(0));
}

} // namespace

BENCHMARK(BM_DiffClinVar)->RangeMultiplier(10)->Range(1000, 100000)->Complexity();
BENCHMARK(BM_DiffGeneric)->RangeMultiplier(10)->Range(1000, 100000)->Complexity();
BENCHMARK(BM_SnapshotParse)->Arg(10000);
BENCHMARK(BM_Sha256)->RangeMultiplier(64)->Range(64, 262144);
