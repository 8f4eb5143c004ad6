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

#include <recomp/history.hpp>
#include <recomp/sha256.hpp>

#include "support/temp_dir.hpp"

using namespace recomp;

namespace {

ProvDocument minimal_prov(const std::string& dep_version, const std::string& input_slot) {
    ProvDocument doc;
    doc.declare_entity({"d", {{"version", dep_version}}, true});
    doc.declare_entity({"x", {{"slot", input_slot}}, true});
    doc.declare_activity({"step", 0, 0});
    doc.assert_usage("step", "d", UsageRole::dep, KeySet{"k1"});
    doc.assert_usage("step", "x", UsageRole::input, KeySet{"k1"});
    return doc;
}

HistoryRecord minimal_record() {
    HistoryRecord r;
    r.program_id = "p";
    r.program_version = "1";
    r.subject = "case1";
    r.input_refs = {{"x", "hash-x"}};
    r.slot_refs = {{"x", "hash-x"}, {"y", "hash-y"}};
    r.dependency_tags = {VersionTag{"refdb", 1, ""}};
    r.output_ref = "hash-y";
    r.cost = CostRecord{10, 1, 1.0};
    return r;
}

} // namespace

TEST_SUITE("history") {

TEST_CASE("sha256 matches the reference vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    // block-boundary lengths
    CHECK(sha256_hex(std::string(64, 'a')) ==
          "ffe054fe7ae0cb6dc65c3af9b61d5209f439851db43d0ba5997337df154668eb");
}

TEST_CASE("cache round-trips bytes and deduplicates identical content") {
    ValueCache cache;
    const std::string h1 = cache.put("payload");
    CHECK(cache.get(h1) == "payload");
    CHECK(cache.contains(h1));
    CHECK_FALSE(cache.get("0000000000000000000000000000000000000000000000000000000000000000"));

    const std::string h2 = cache.put("payload", ValueCache::Producer{"r1", 0});
    CHECK(h1 == h2);
    CHECK(cache.size() == 1);
}

TEST_CASE("canonical value bytes sort object keys") {
    const nlohmann::json a{{"b", 1}, {"a", 2}};
    CHECK(ValueCache::canonical_bytes(a) == "{\"a\":2,\"b\":1}");
    CHECK(ValueCache::hash_value(a) == sha256_hex("{\"a\":2,\"b\":1}"));
}

TEST_CASE("cache persists blobs under two-character fan-out") {
    recomp_test::TempDir dir;
    std::string hash;
    {
        ValueCache cache(dir.path());
        hash = cache.put("blob-bytes");
        CHECK(std::filesystem::exists(dir.path() / hash.substr(0, 2) / hash));
    }
    ValueCache reopened(dir.path());
    CHECK(reopened.contains(hash));
    CHECK(reopened.get(hash) == "blob-bytes");
}

TEST_CASE("producer metadata is tracked in memory") {
    ValueCache cache;
    const std::string h = cache.put("v");
    CHECK_FALSE(cache.producer(h).has_value());
    cache.note_producer(h, ValueCache::Producer{"r42", 1});
    REQUIRE(cache.producer(h).has_value());
    CHECK(cache.producer(h)->record_id == "r42");
    // first producer wins
    cache.note_producer(h, ValueCache::Producer{"r43", 0});
    CHECK(cache.producer(h)->record_id == "r42");
}

TEST_CASE("append assigns ids and strictly increasing versions") {
    HistoryStore store;
    const std::string id1 = store.append(minimal_record(), minimal_prov("refdb@1", "x"));
    const std::string id2 = store.append(minimal_record(), minimal_prov("refdb@1", "x"));
    CHECK(id1 == "r000001");
    CHECK(id2 == "r000002");
    CHECK(store.size() == 2);
    CHECK(store.find(id1)->execution_version == 1);
    CHECK(store.find(id2)->execution_version == 2);

    HistoryRecord stale = minimal_record();
    stale.execution_version = 1;
    CHECK_THROWS_AS(store.append(stale, minimal_prov("refdb@1", "x")), ConsistencyError);
}

TEST_CASE("append rejects cross-reference violations") {
    HistoryStore store;
    SUBCASE("dep entity referencing an unlisted tag") {
        try {
            store.append(minimal_record(), minimal_prov("refdb@7", "x"));
            FAIL("expected a consistency error");
        } catch (const ConsistencyError& e) {
            CHECK(std::string(e.what()).find("refdb@7") != std::string::npos);
        }
    }
    SUBCASE("input entity referencing an unknown slot") {
        CHECK_THROWS_AS(store.append(minimal_record(), minimal_prov("refdb@1", "ghost-slot")),
                        ConsistencyError);
    }
    SUBCASE("invalid provenance document") {
        nlohmann::json j = minimal_prov("refdb@1", "x").to_json();
        j["usages"].push_back({{"activity_id", "ghost"}, {"entity_id", "d"}, {"role", "dep"}});
        CHECK_THROWS_AS(store.append(minimal_record(), ProvDocument::from_json(j)),
                        ConsistencyError);
    }
    SUBCASE("negative cost") {
        HistoryRecord r = minimal_record();
        r.cost.steps_executed = -1;
        CHECK_THROWS_AS(store.append(r, minimal_prov("refdb@1", "x")), ConsistencyError);
    }
    CHECK(store.size() == 0);
}

TEST_CASE("records_using filters by dataset and version") {
    HistoryStore store;
    store.append(minimal_record(), minimal_prov("refdb@1", "x"));
    HistoryRecord other = minimal_record();
    other.dependency_tags = {VersionTag{"refdb", 2, ""}};
    store.append(other, minimal_prov("refdb@2", "x"));

    CHECK(store.records_using("refdb").size() == 2);
    CHECK(store.records_using("refdb", VersionTag{"refdb", 2, ""}).size() == 1);
    CHECK(store.records_using("nothing").empty());

    const auto all = store.all();
    REQUIRE(all.size() == 2);
    CHECK(all[0]->execution_version < all[1]->execution_version);
}

TEST_CASE("store persists the log and provenance files") {
    recomp_test::TempDir dir;
    const auto log = dir / "history.jsonl";
    const auto prov = dir / "prov";
    std::string id;
    {
        HistoryStore store(log, prov);
        id = store.append(minimal_record(), minimal_prov("refdb@1", "x"));
        CHECK(std::filesystem::exists(prov / (id + ".prov.json")));
    }
    HistoryStore reopened(log, prov);
    REQUIRE(reopened.size() == 1);
    const HistoryRecord* r = reopened.find(id);
    REQUIRE(r);
    CHECK(r->subject == "case1");
    CHECK(r->cost.steps_executed == 1);
    CHECK(reopened.prov_of(*r) == minimal_prov("refdb@1", "x"));
    // appends continue the version sequence
    CHECK(reopened.append(minimal_record(), minimal_prov("refdb@1", "x")) == "r000002");
}

TEST_CASE("record JSON round-trips") {
    const HistoryRecord r = minimal_record();
    const HistoryRecord back = HistoryRecord::from_json(r.to_json());
    CHECK(back.to_json() == r.to_json());
    CHECK_THROWS_AS(HistoryRecord::from_json(nlohmann::json{{"record_id", "x"}}), ParseError);
}

TEST_CASE("verify_integrity reports unresolvable hashes") {
    HistoryStore store;
    ValueCache cache;
    HistoryRecord r = minimal_record();
    r.input_refs = {{"x", cache.put("input-bytes")}};
    r.slot_refs = r.input_refs;
    r.slot_refs["y"] = r.output_ref = cache.put("output-bytes");
    store.append(r, minimal_prov("refdb@1", "x"));
    CHECK(verify_integrity(store, cache).empty());

    HistoryRecord broken = minimal_record(); // refs never written to the cache
    store.append(broken, minimal_prov("refdb@1", "x"));
    const auto violations = verify_integrity(store, cache);
    CHECK(violations.size() == 2); // input + output
}

} // TEST_SUITE
