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
#include <recomp/svi.hpp>

#include <algorithm>
#include <random>
#include <sstream>

namespace recomp::svi {

OmimSnapshot OmimSnapshot::from_version(const DatasetVersion& version) {
    OmimSnapshot s;
    for (const auto& [term, value] : version.elements) {
        std::set<std::string> genes;
        if (value.is_array())
            for (const auto& g : value)
                genes.insert(g.get<std::string>());
        s.mapping.emplace(term, std::move(genes));
    }
    return s;
}

ClinVarSnapshot ClinVarSnapshot::from_version(const DatasetVersion& version) {
    ClinVarSnapshot s;
    for (const auto& [id, value] : version.elements) {
        ClinVarEntry entry;
        entry.gene = value.value("gene", std::string());
        entry.raw_status = value.value("raw", std::string());
        entry.status = parse_raw_status(entry.raw_status);
        s.mapping.emplace(id, std::move(entry));
    }
    return s;
}

std::string_view to_string(Classification c) {
    switch (c) {
    case Classification::red:
        return "red";
    case Classification::green:
        return "green";
    default:
        return "amber";
    }
}

Classification classification_from_string(std::string_view s) {
    if (s == "red")
        return Classification::red;
    if (s == "green")
        return Classification::green;
    if (s == "amber")
        return Classification::amber;
    throw ParseError("invalid classification: '" + std::string(s) + "'");
}

std::set<std::string> target_genes(const Phenotype& ph, const OmimSnapshot& omim) {
    std::set<std::string> out;
    for (const auto& term : ph.terms) {
        const auto it = omim.mapping.find(term);
        if (it == omim.mapping.end())
            continue;
        out.insert(it->second.begin(), it->second.end());
    }
    return out;
}

std::vector<Variant> select_variants(const std::vector<Variant>& varset,
                                     const std::set<std::string>& targets) {
    std::vector<Variant> out;
    for (const auto& v : varset)
        if (targets.count(v.gene))
            out.push_back(v);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::map<std::string, Classification> classify(const std::vector<Variant>& selected,
                                               const ClinVarSnapshot& cv) {
    std::map<std::string, Classification> out;
    for (const auto& v : selected) {
        const auto it = cv.mapping.find(v.id);
        const VariantStatus status =
            it == cv.mapping.end() ? VariantStatus::unknown : it->second.status;
        Classification c = Classification::amber;
        if (status == VariantStatus::pathogenic)
            c = Classification::red;
        else if (status == VariantStatus::benign)
            c = Classification::green;
        out[v.id] = c;
    }
    return out;
}

Value phenotype_to_value(const Phenotype& ph) {
    Value v = Value::array();
    for (const auto& term : ph.terms)
        v.push_back(term);
    return v;
}

Phenotype phenotype_from_value(const Value& v) {
    Phenotype ph;
    for (const auto& term : v)
        ph.terms.insert(term.get<std::string>());
    return ph;
}

Value varset_to_value(const std::vector<Variant>& varset) {
    Value v = Value::object();
    for (const auto& variant : varset)
        v[variant.id] = variant.gene;
    return v;
}

std::vector<Variant> varset_from_value(const Value& v) {
    std::vector<Variant> out;
    for (const auto& [id, gene] : v.items())
        out.push_back(Variant{id, gene.get<std::string>()});
    std::sort(out.begin(), out.end());
    return out;
}

PipelineSpec svi_pipeline() {
    PipelineSpec p;
    p.program_id = "svi";
    p.program_version = "1";
    p.dataset_prov_types = {{"omim", "OMIM"}, {"clinvar", "CV"}};
    p.final_outputs = {"classified"};

    StepSpec ptg;
    ptg.name = "PtG";
    ptg.step_index = 0;
    ptg.input_slots = {"ph"};
    ptg.dep_slots = {"omim"};
    ptg.output_slots = {"targets"};
    ptg.apply = [](const StepContext& ctx) {
        const Phenotype ph = phenotype_from_value(ctx.in("ph"));
        const OmimSnapshot omim = OmimSnapshot::from_version(ctx.dep("omim"));
        const std::set<std::string> targets = target_genes(ph, omim);

        StepResult r;
        Value targets_value = Value::array();
        for (const auto& g : targets)
            targets_value.push_back(g);
        r.outputs["targets"] = std::move(targets_value);
        // keys are what the step looked up, whether or not the snapshot
        // answered: a term mapped tomorrow must still trip tomorrow's diff
        r.usages = {
            UsageReport{"om", UsageRole::dep, "omim", KeySet(ph.terms), ""},
            UsageReport{"ph", UsageRole::input, "ph", KeySet(ph.terms), ""},
        };
        return r;
    };

    StepSpec vclass;
    vclass.name = "vClass";
    vclass.step_index = 1;
    vclass.input_slots = {"varset", "targets"};
    vclass.dep_slots = {"clinvar"};
    vclass.output_slots = {"classified"};
    vclass.apply = [](const StepContext& ctx) {
        const std::vector<Variant> varset = varset_from_value(ctx.in("varset"));
        std::set<std::string> targets;
        for (const auto& g : ctx.in("targets"))
            targets.insert(g.get<std::string>());
        const std::vector<Variant> selected = select_variants(varset, targets);
        const ClinVarSnapshot cv = ClinVarSnapshot::from_version(ctx.dep("clinvar"));
        const auto classes = classify(selected, cv);

        StepResult r;
        Value classified = Value::object();
        for (const auto& [id, c] : classes)
            classified[id] = std::string(to_string(c));
        r.outputs["classified"] = std::move(classified);

        KeySet selected_ids;
        for (const auto& v : selected)
            selected_ids.insert(v.id);
        r.usages = {
            UsageReport{"cv", UsageRole::dep, "clinvar", selected_ids, ""},
            UsageReport{"vars", UsageRole::input, "varset", selected_ids, ""},
        };
        return r;
    };

    p.steps = {std::move(ptg), std::move(vclass)};
    return p;
}

ValueMap PatientCase::inputs() const {
    return ValueMap{{"ph", phenotype_to_value(ph)}, {"varset", varset_to_value(varset)}};
}

std::vector<PatientCase> parse_cohort_tsv(std::string_view text) {
    std::vector<PatientCase> out;
    std::set<std::string> seen;
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

        PatientCase c;
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
        if (tab1 == std::string_view::npos || tab2 == std::string_view::npos)
            throw ParseError("expected patient_id<TAB>terms<TAB>variants", line_no);
        c.id = std::string(line.substr(0, tab1));
        if (c.id.empty())
            throw ParseError("empty patient id", line_no);
        if (!seen.insert(c.id).second)
            throw ParseError("duplicate patient id '" + c.id + "'", line_no);

        std::istringstream terms(std::string(line.substr(tab1 + 1, tab2 - tab1 - 1)));
        std::string term;
        while (std::getline(terms, term, ';'))
            if (!term.empty())
                c.ph.terms.insert(term);
        if (c.ph.terms.empty())
            throw ParseError("patient '" + c.id + "' has no phenotype terms", line_no);

        std::istringstream vars(std::string(line.substr(tab2 + 1)));
        std::string spec;
        while (std::getline(vars, spec, ',')) {
            if (spec.empty())
                continue;
            const auto colon = spec.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 >= spec.size())
                throw ParseError("expected variant_id:gene, got '" + spec + "'", line_no);
            c.varset.push_back(Variant{spec.substr(0, colon), spec.substr(colon + 1)});
        }
        std::sort(c.varset.begin(), c.varset.end());
        out.push_back(std::move(c));
    }
    return out;
}

// -- synthetic evolution -----------------------------------------------------

void GrowthSpec::validate() const {
    if (initial_terms < 0 || initial_variants < 0 || terms_per_epoch < 0 ||
        variants_per_epoch < 0 || gene_add_prob < 0 || status_flip_prob < 0 || removal_prob < 0)
        throw InvalidRateError("growth rates must be non-negative");
}

SynthUniverse SynthUniverse::from_cohort(const std::vector<PatientCase>& cohort) {
    std::set<std::string> terms;
    std::set<std::string> genes;
    std::set<Variant> variants;
    for (const auto& c : cohort) {
        terms.insert(c.ph.terms.begin(), c.ph.terms.end());
        for (const auto& v : c.varset) {
            genes.insert(v.gene);
            variants.insert(v);
        }
    }
    SynthUniverse u;
    u.terms.assign(terms.begin(), terms.end());
    u.genes.assign(genes.begin(), genes.end());
    u.variants.assign(variants.begin(), variants.end());
    return u;
}

SynthUniverse SynthUniverse::synthetic(std::uint64_t seed, int n_terms, int n_genes,
                                       int n_variants) {
    std::mt19937_64 rng(seed);
    SynthUniverse u;
    for (int i = 0; i < n_terms; ++i)
        u.terms.push_back("disease" + std::to_string(i));
    for (int i = 0; i < n_genes; ++i)
        u.genes.push_back("GENE" + std::to_string(i));
    std::uniform_int_distribution<int> pick_gene(0, std::max(0, n_genes - 1));
    for (int i = 0; i < n_variants; ++i) {
        const std::string gene = u.genes.empty() ? "GENE0" : u.genes[pick_gene(rng)];
        u.variants.push_back(Variant{std::to_string(100000000 + i * 137), gene});
    }
    return u;
}

namespace {

const char* kRawStatuses[] = {
    "benign",
    "Benign/Likely benign",
    "pathogenic",
    "Pathogenic",
    "uncertain significance",
    "probably pathogenic, uncertain significance",
    "risk factor",
};

std::string pick_raw_status(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> d(0, std::size(kRawStatuses) - 1);
    return kRawStatuses[d(rng)];
}

std::string pick_raw_status_differing(std::mt19937_64& rng, const std::string& current) {
    const VariantStatus now = parse_raw_status(current);
    for (int attempt = 0; attempt < 16; ++attempt) {
        std::string candidate = pick_raw_status(rng);
        if (parse_raw_status(candidate) != now)
            return candidate;
    }
    return now == VariantStatus::benign ? "pathogenic" : "benign";
}

} // namespace

std::vector<EpochSnapshots> synth_evolution(std::uint64_t seed, int epochs,
                                            const GrowthSpec& growth,
                                            const SynthUniverse& universe) {
    growth.validate();
    if (epochs < 1)
        throw InvalidRateError("epochs must be >= 1");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    // universe elements are introduced in a seed-dependent order, with
    // synthetic padding once a pool runs dry
    std::vector<std::string> term_pool = universe.terms;
    std::vector<Variant> variant_pool = universe.variants;
    std::vector<std::string> gene_pool = universe.genes;
    std::shuffle(term_pool.begin(), term_pool.end(), rng);
    std::shuffle(variant_pool.begin(), variant_pool.end(), rng);
    if (gene_pool.empty())
        gene_pool.push_back("GENE0");
    std::size_t next_synth_term = 0;
    std::size_t next_synth_variant = 0;

    const auto draw_term = [&](std::size_t& cursor) -> std::string {
        if (cursor < term_pool.size())
            return term_pool[cursor++];
        return "disease.x" + std::to_string(next_synth_term++);
    };
    const auto draw_variant = [&](std::size_t& cursor) -> Variant {
        if (cursor < variant_pool.size())
            return variant_pool[cursor++];
        std::uniform_int_distribution<std::size_t> pick(0, gene_pool.size() - 1);
        return Variant{"9" + std::to_string(900000000 + 91 * next_synth_variant++),
                       gene_pool[pick(rng)]};
    };
    const auto pick_genes = [&](int n) {
        std::set<std::string> out;
        std::uniform_int_distribution<std::size_t> pick(0, gene_pool.size() - 1);
        for (int i = 0; i < n; ++i)
            out.insert(gene_pool[pick(rng)]);
        return out;
    };

    std::size_t term_cursor = 0;
    std::size_t variant_cursor = 0;
    std::map<std::string, std::set<std::string>> omim;
    std::map<std::string, std::pair<std::string, std::string>> clinvar; // id -> (gene, raw)

    std::uniform_int_distribution<int> genes_per_term(1, 3);
    for (int i = 0; i < growth.initial_terms; ++i)
        omim.emplace(draw_term(term_cursor), pick_genes(genes_per_term(rng)));
    for (int i = 0; i < growth.initial_variants; ++i) {
        const Variant v = draw_variant(variant_cursor);
        clinvar.emplace(v.id, std::make_pair(v.gene, pick_raw_status(rng)));
    }

    std::vector<EpochSnapshots> out;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        if (epoch > 0) {
            // grow
            for (int i = 0; i < growth.terms_per_epoch; ++i)
                omim.emplace(draw_term(term_cursor), pick_genes(genes_per_term(rng)));
            for (auto& [term, genes] : omim) {
                if (coin(rng) < growth.gene_add_prob) {
                    const std::set<std::string> extra = pick_genes(1);
                    genes.insert(extra.begin(), extra.end());
                }
            }
            for (int i = 0; i < growth.variants_per_epoch; ++i) {
                const Variant v = draw_variant(variant_cursor);
                clinvar.emplace(v.id, std::make_pair(v.gene, pick_raw_status(rng)));
            }
            // flip statuses
            if (growth.status_flip_prob > 0)
                for (auto& [id, entry] : clinvar)
                    if (coin(rng) < growth.status_flip_prob)
                        entry.second = pick_raw_status_differing(rng, entry.second);
            // removals (off by default: additive-only)
            if (growth.removal_prob > 0) {
                std::erase_if(omim, [&](const auto&) { return coin(rng) < growth.removal_prob; });
                std::erase_if(clinvar,
                              [&](const auto&) { return coin(rng) < growth.removal_prob; });
            }
        }

        EpochSnapshots snap;
        for (const auto& [term, genes] : omim) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& g : genes)
                arr.push_back(g);
            snap.omim.emplace(term, std::move(arr));
        }
        for (const auto& [id, entry] : clinvar)
            snap.clinvar.emplace(
                id, nlohmann::json{{"gene", entry.first}, {"raw", entry.second}});
        out.push_back(std::move(snap));
    }
    return out;
}

std::vector<PatientCase> gen_cohort(std::uint64_t seed, int n_patients,
                                    const SynthUniverse& universe, int terms_per_patient,
                                    int variants_per_patient) {
    std::mt19937_64 rng(seed);
    std::vector<PatientCase> out;
    if (universe.terms.empty() || universe.variants.empty())
        throw Error("cohort generation needs a non-empty universe");
    std::uniform_int_distribution<std::size_t> pick_term(0, universe.terms.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_variant(0, universe.variants.size() - 1);

    for (int i = 0; i < n_patients; ++i) {
        PatientCase c;
        c.id = "patient" + std::to_string(i + 1);
        while (c.ph.terms.size() < std::size_t(terms_per_patient))
            c.ph.terms.insert(universe.terms[pick_term(rng)]);
        std::set<Variant> vars;
        while (vars.size() < std::size_t(variants_per_patient))
            vars.insert(universe.variants[pick_variant(rng)]);
        c.varset.assign(vars.begin(), vars.end());
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<TrendRow> trend_report(const std::vector<PatientCase>& cohort,
                                   const std::vector<EpochSnapshots>& evolution) {
    if (cohort.empty())
        throw Error("trend report needs a non-empty cohort");
    std::vector<TrendRow> out;
    int epoch = 0;
    for (const auto& snap : evolution) {
        ++epoch;
        const OmimSnapshot omim =
            OmimSnapshot::from_version(DatasetVersion{VersionTag{"omim", 1, ""}, snap.omim});
        const ClinVarSnapshot cv = ClinVarSnapshot::from_version(
            DatasetVersion{VersionTag{"clinvar", 1, ""}, snap.clinvar});

        std::set<std::string> genes;
        std::set<std::string> variant_ids;
        std::size_t conclusive = 0;
        for (const auto& c : cohort) {
            const auto targets = target_genes(c.ph, omim);
            genes.insert(targets.begin(), targets.end());
            const auto selected = select_variants(c.varset, targets);
            bool red = false;
            for (const auto& [id, cls] : classify(selected, cv)) {
                variant_ids.insert(id);
                red = red || cls == Classification::red;
            }
            if (red)
                ++conclusive;
        }
        out.push_back(TrendRow{epoch, genes.size(), variant_ids.size(), conclusive});
    }
    return out;
}

std::string trend_to_tsv(const std::vector<TrendRow>& rows) {
    std::ostringstream out;
    out << "epoch\trelevant_gene_count\trelevant_variant_count\tn_conclusive\n";
    for (const auto& r : rows)
        out << r.epoch << '\t' << r.relevant_gene_count << '\t' << r.relevant_variant_count
            << '\t' << r.n_conclusive << '\n';
    return out.str();
}

} // namespace recomp::svi
