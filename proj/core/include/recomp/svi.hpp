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
#include <map>
#include <set>
#include <string>
#include <vector>

#include <recomp/pipeline.hpp>
#include <recomp/versioned_store.hpp>

namespace recomp::svi {

/// A single-nucleotide variant, identified by position, located on a gene.
struct Variant {
    std::string id;
    std::string gene;

    friend auto operator<=>(const Variant&, const Variant&) = default;
};

/// The patient's disease hypothesis: a set of disease terms.
struct Phenotype {
    std::set<std::string> terms;
};

/// Disease term → set of gene symbols known to be involved.
struct OmimSnapshot {
    std::map<std::string, std::set<std::string>> mapping;

    static OmimSnapshot from_version(const DatasetVersion& version);
};

using VariantStatus = recomp::VariantStatus;
using recomp::parse_raw_status;

struct ClinVarEntry {
    std::string gene;
    std::string raw_status;
    VariantStatus status = VariantStatus::unknown;
};

/// Variant id → catalogued clinical knowledge.
struct ClinVarSnapshot {
    std::map<std::string, ClinVarEntry> mapping;

    static ClinVarSnapshot from_version(const DatasetVersion& version);
};

/// Traffic-light deleteriousness class.
enum class Classification { red, amber, green };

std::string_view to_string(Classification c);
Classification classification_from_string(std::string_view s);

/// The PtG step: union of the genes mapped to each phenotype term. Terms
/// absent from the snapshot contribute nothing.
std::set<std::string> target_genes(const Phenotype& ph, const OmimSnapshot& omim);

/// The filtering rule: variants located on the target genes.
std::vector<Variant> select_variants(const std::vector<Variant>& varset,
                                     const std::set<std::string>& targets);

/// The vClass step: pathogenic → red, benign → green, unknown or
/// uncatalogued → amber. Every selected variant is classified exactly once.
std::map<std::string, Classification> classify(const std::vector<Variant>& selected,
                                               const ClinVarSnapshot& cv);

/// The two-step pipeline: PtG (inputs: ph; deps: omim) then vClass (inputs:
/// varset and the targets; deps: clinvar), with variant selection folded
/// into vClass's input preparation. Final output slot: "classified".
PipelineSpec svi_pipeline();

// -- value conversions (pipeline slot values <-> domain types) ---------------

Value phenotype_to_value(const Phenotype& ph);
Phenotype phenotype_from_value(const Value& v);
Value varset_to_value(const std::vector<Variant>& varset);
std::vector<Variant> varset_from_value(const Value& v);

// -- cohort file --------------------------------------------------------------

struct PatientCase {
    std::string id;
    Phenotype ph;
    std::vector<Variant> varset;

    ValueMap inputs() const;
};

/// Parses `patient_id<TAB>term1;term2<TAB>id1:gene1,id2:gene2,...` lines;
/// '#' comments and blank lines ignored. Throws ParseError citing the line.
std::vector<PatientCase> parse_cohort_tsv(std::string_view text);

// -- synthetic evolution --------------------------------------------------------

/// Per-epoch growth of the synthetic OMIM/ClinVar stand-ins. All rates must
/// be non-negative; the defaults are additive-only.
struct GrowthSpec {
    int initial_terms = 8;
    int initial_variants = 30;
    int terms_per_epoch = 2;
    int variants_per_epoch = 8;
    double gene_add_prob = 0.25;    // chance an existing term gains a gene, per epoch
    double status_flip_prob = 0.0;  // chance a catalogued variant's status changes, per epoch
    double removal_prob = 0.0;      // chance an element disappears, per epoch

    void validate() const; // throws InvalidRateError on any negative rate
};

/// The element pool evolution draws from. Harvested from a cohort so the
/// generated snapshots exercise its phenotypes and variants, padded with
/// synthetic elements when the pool runs dry.
struct SynthUniverse {
    std::vector<std::string> terms;
    std::vector<std::string> genes;
    std::vector<Variant> variants;

    static SynthUniverse from_cohort(const std::vector<PatientCase>& cohort);
    static SynthUniverse synthetic(std::uint64_t seed, int n_terms, int n_genes, int n_variants);
};

struct EpochSnapshots {
    ElementMap omim;
    ElementMap clinvar;
};

/// Deterministic under seed: one (OMIM, ClinVar) snapshot pair per epoch.
std::vector<EpochSnapshots> synth_evolution(std::uint64_t seed, int epochs,
                                            const GrowthSpec& growth,
                                            const SynthUniverse& universe);

/// Random cohort over the universe, deterministic under seed.
std::vector<PatientCase> gen_cohort(std::uint64_t seed, int n_patients,
                                    const SynthUniverse& universe, int terms_per_patient,
                                    int variants_per_patient);

// -- trend report ------------------------------------------------------------------

struct TrendRow {
    int epoch = 0;
    std::size_t relevant_gene_count = 0;
    std::size_t relevant_variant_count = 0;
    std::size_t n_conclusive = 0;
};

/// Per-epoch cohort-wide counts: distinct target genes, distinct selected
/// variants, and patients with at least one red variant.
std::vector<TrendRow> trend_report(const std::vector<PatientCase>& cohort,
                                   const std::vector<EpochSnapshots>& evolution);

/// Tab-separated rows with a header line.
std::string trend_to_tsv(const std::vector<TrendRow>& rows);

} // namespace recomp::svi
