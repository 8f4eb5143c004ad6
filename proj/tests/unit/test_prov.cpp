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
#include <doctest.h>

#include <random>

#include <recomp/prov.hpp>

#include "support/generators.hpp"

using namespace recomp;

namespace {

/// The provenance document of one white-box SVI run, statement for
/// statement: four entities, two activities, four role-tagged usages.
ProvDocument svi_reference_doc() {
    ProvDocument doc(Granularity::white_box);
    doc.declare_entity({"om", {{"prov:type", "OMIM"}, {"version", "omim@1"}}, true});
    doc.declare_entity({"ph", {{"prov:type", "prov:collection"}, {"slot", "ph"}}, true});
    doc.declare_entity({"cv", {{"prov:type", "CV"}, {"version", "clinvar@1"}}, true});
    doc.declare_entity({"vars", {{"prov:type", "prov:collection"}, {"slot", "varset"}}, true});
    doc.declare_activity({"PtG", 0, 0});
    doc.declare_activity({"vClass", 1, 1});
    doc.assert_usage("PtG", "om", UsageRole::dep, KeySet{"Alzheimer's"});
    doc.assert_usage("PtG", "ph", UsageRole::input, KeySet{"Alzheimer's"});
    doc.assert_usage("vClass", "cv", UsageRole::dep, KeySet{"227083249"});
    doc.assert_usage("vClass", "vars", UsageRole::input, KeySet{"227083249"});
    return doc;
}

} // namespace

TEST_SUITE("prov") {

TEST_CASE("reference document validates cleanly") {
    const ProvDocument doc = svi_reference_doc();
    CHECK(doc.validate().empty());
    CHECK(doc.entities().size() == 4);
    CHECK(doc.activities().size() == 2);
    CHECK(doc.usages().size() == 4);
}

TEST_CASE("empty document validates cleanly") {
    CHECK(ProvDocument{}.validate().empty());
    CHECK(ProvDocument{Granularity::black_box}.validate().empty());
}

TEST_CASE("assert_usage requires declared ids") {
    ProvDocument doc;
    doc.declare_activity({"PtG", 0, 0});
    CHECK_THROWS_AS(doc.assert_usage("PtG", "om", UsageRole::dep), UnknownIdError);
    CHECK_THROWS_AS(doc.assert_usage("nope", "om", UsageRole::dep), UnknownIdError);
}

TEST_CASE("assert_usage is idempotent for identical statements") {
    ProvDocument doc = svi_reference_doc();
    const auto before = doc.usages().size();
    doc.assert_usage("PtG", "om", UsageRole::dep, KeySet{"Alzheimer's"});
    CHECK(doc.usages().size() == before);
}

TEST_CASE("element keys on a black-box document are a granularity error") {
    ProvDocument doc(Granularity::black_box);
    doc.declare_entity({"cv", {}, true});
    doc.declare_activity({"svi", 0, 0});
    CHECK_THROWS_AS(doc.assert_usage("svi", "cv", UsageRole::dep, KeySet{"227083249"}),
                    GranularityError);
    // coarse usage is fine
    doc.assert_usage("svi", "cv", UsageRole::dep);
    CHECK(doc.validate().empty());
}

TEST_CASE("empty key set normalizes to coarse usage") {
    ProvDocument doc(Granularity::black_box);
    doc.declare_entity({"cv", {}, true});
    doc.declare_activity({"svi", 0, 0});
    doc.assert_usage("svi", "cv", UsageRole::dep, KeySet{});
    REQUIRE(doc.usages().size() == 1);
    CHECK_FALSE(doc.usages().front().element_keys.has_value());
}

TEST_CASE("validate reports undeclared references on parsed documents") {
    nlohmann::json j = svi_reference_doc().to_json();
    j["usages"].push_back({{"activity_id", "vClass"}, {"entity_id", "ghost"}, {"role", "dep"}});
    const ProvDocument doc = ProvDocument::from_json(j);
    const auto violations = doc.validate();
    REQUIRE(violations.size() == 1);
    CHECK(violations.front().code == "unknown-entity");
    CHECK(violations.front().subject == "ghost");
}

TEST_CASE("validate reports structural defects") {
    nlohmann::json j = svi_reference_doc().to_json();

    SUBCASE("duplicate entity id") {
        j["entities"].push_back({{"id", "om"}, {"attributes", {{"version", "omim@2"}}}});
        const auto violations = ProvDocument::from_json(j).validate();
        REQUIRE_FALSE(violations.empty());
        CHECK(violations.front().code == "duplicate-entity-id");
    }
    SUBCASE("duplicate step index") {
        j["activities"].push_back({{"id", "vClass2"}, {"step_index", 1}, {"started_at", 2}});
        const auto violations = ProvDocument::from_json(j).validate();
        REQUIRE_FALSE(violations.empty());
        CHECK(violations.front().code == "duplicate-step-index");
    }
    SUBCASE("started_at contradicting step order") {
        j["activities"][0]["started_at"] = 9;
        const auto violations = ProvDocument::from_json(j).validate();
        REQUIRE(violations.size() == 1);
        CHECK(violations.front().code == "step-order-mismatch");
    }
    SUBCASE("black-box with several activities") {
        j["granularity"] = "black_box";
        for (auto& usage : j["usages"])
            usage.erase("element_keys");
        const auto violations = ProvDocument::from_json(j).validate();
        REQUIRE_FALSE(violations.empty());
        CHECK(violations.front().code == "black-box-multi-activity");
    }
    SUBCASE("element keys present but empty") {
        j["usages"][0]["element_keys"] = nlohmann::json::array();
        const auto violations = ProvDocument::from_json(j).validate();
        REQUIRE(violations.size() == 1);
        CHECK(violations.front().code == "empty-element-keys");
    }
    SUBCASE("unparseable version attribute") {
        j["entities"][0]["attributes"]["version"] = "not-a-tag";
        const auto violations = ProvDocument::from_json(j).validate();
        REQUIRE(violations.size() == 1);
        CHECK(violations.front().code == "invalid-version-attr");
    }
}

TEST_CASE("query_usages filters and joins with activities") {
    const ProvDocument doc = svi_reference_doc();

    SUBCASE("role + entity filter finds the cv usage") {
        const auto hits = doc.query_usages({UsageRole::dep, "cv", std::nullopt});
        REQUIRE(hits.size() == 1);
        CHECK(hits.front().first->activity_id == "vClass");
        CHECK(hits.front().second->step_index == 1);
    }
    SUBCASE("filter matching nothing yields an empty list") {
        CHECK(doc.query_usages({UsageRole::dep, "ghost", std::nullopt}).empty());
        CHECK(doc.query_usages({std::nullopt, std::nullopt, KeySet{"zzz"}}).empty());
    }
    SUBCASE("key intersection filter") {
        const auto hits = doc.query_usages({std::nullopt, std::nullopt, KeySet{"227083249"}});
        CHECK(hits.size() == 2); // cv dep + vars input
    }
    SUBCASE("results ordered by step_index even when declared out of order") {
        ProvDocument d;
        d.declare_entity({"x", {}, false});
        d.declare_activity({"late", 1, 1});
        d.declare_activity({"early", 0, 0});
        d.assert_usage("late", "x", UsageRole::input);
        d.assert_usage("early", "x", UsageRole::input);
        const auto hits = d.query_usages({});
        REQUIRE(hits.size() == 2);
        CHECK(hits[0].second->step_index == 0);
        CHECK(hits[1].second->step_index == 1);
    }
    SUBCASE("coarse usages match any key filter") {
        ProvDocument d(Granularity::black_box);
        d.declare_entity({"cv", {}, true});
        d.declare_activity({"svi", 0, 0});
        d.assert_usage("svi", "cv", UsageRole::dep);
        CHECK(d.query_usages({std::nullopt, std::nullopt, KeySet{"anything"}}).size() == 1);
    }
}

TEST_CASE("query_usages with an empty filter returns every usage exactly once") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const ProvDocument doc = recomp_test::random_prov_doc(rng);
        CHECK(doc.query_usages({}).size() == doc.usages().size());
    }
}

TEST_CASE("serialize/deserialize round-trips structurally") {
    SUBCASE("reference document") {
        const ProvDocument doc = svi_reference_doc();
        CHECK(ProvDocument::deserialize(doc.serialize()) == doc);
    }
    SUBCASE("empty document") {
        const ProvDocument doc;
        CHECK(ProvDocument::deserialize(doc.serialize()) == doc);
    }
    SUBCASE("random documents") {
        std::mt19937_64 rng(11);
        for (int i = 0; i < 200; ++i) {
            const ProvDocument doc = recomp_test::random_prov_doc(rng);
            CHECK(ProvDocument::deserialize(doc.serialize()) == doc);
        }
    }
}

TEST_CASE("truncated byte streams raise parse errors") {
    const std::string bytes = svi_reference_doc().serialize();
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> cut(1, bytes.size() - 2);
    for (int i = 0; i < 50; ++i)
        CHECK_THROWS_AS(ProvDocument::deserialize(bytes.substr(0, cut(rng))), ParseError);
    CHECK_THROWS_AS(ProvDocument::deserialize("{\"granularity\": 3}"), ParseError);
    CHECK_THROWS_AS(ProvDocument::deserialize("{}"), ParseError);
}

TEST_CASE("serializing an invalid document is refused") {
    nlohmann::json j = svi_reference_doc().to_json();
    j["usages"].push_back({{"activity_id", "vClass"}, {"entity_id", "ghost"}, {"role", "dep"}});
    CHECK_THROWS_AS(ProvDocument::from_json(j).serialize(), ConsistencyError);
}

TEST_CASE("structural equality ignores statement order") {
    ProvDocument a;
    a.declare_entity({"x", {}, false});
    a.declare_entity({"y", {}, false});
    a.declare_activity({"s", 0, 0});
    a.assert_usage("s", "x", UsageRole::input);
    a.assert_usage("s", "y", UsageRole::dep);

    ProvDocument b;
    b.declare_entity({"y", {}, false});
    b.declare_entity({"x", {}, false});
    b.declare_activity({"s", 0, 0});
    b.assert_usage("s", "y", UsageRole::dep);
    b.assert_usage("s", "x", UsageRole::input);

    CHECK(a == b);
    b.assert_usage("s", "x", UsageRole::dep);
    CHECK_FALSE(a == b);
}

} // TEST_SUITE
