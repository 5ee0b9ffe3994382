// Copyright 2026-present the provtrace authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "provtrace/canon.h"
#include "provtrace/collection.h"
#include "provtrace/error.h"
#include "provtrace/synth.h"
#include "support.h"

using namespace provtrace;

namespace {

std::vector<CorpusRecord>
random_records(std::size_t n, std::uint64_t seed, std::size_t min_len = 60, std::size_t max_len = 400) {
    rng::Engine e(seed);
    std::vector<CorpusRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = test::record(fmt::format("r{:04}", i), test::plain_code(e, min_len + rng::uniform_index(e, max_len - min_len)));
        r.author = fmt::format("author-{}", i % 7);
        if (i % 3 != 0) {
            r.license = i % 2 ? "MIT" : "Apache-2.0";
        }
        r.origin = fmt::format("https://example.org/{}/é.c", i);
        out.push_back(std::move(r));
    }
    return out;
}

CollectionConfig
small_config(std::uint32_t dim = 256) {
    CollectionConfig cfg;
    cfg.embedder.dim = dim;
    return cfg;
}

std::vector<std::string>
ids_of(const RankedResult& r) {
    std::vector<std::string> ids;
    for (const auto& e : r.entries) {
        ids.push_back(e.doc_id);
    }
    return ids;
}

bool
check_ok(const IntegrityReport& rep, std::string_view name) {
    for (const auto& c : rep.checks) {
        if (c.name == name) {
            return c.ok;
        }
    }
    FAIL("missing check " << name);
    return false;
}

}  // namespace

TEST_CASE("empty and tiny collections") {
    auto empty = Collection::ingest({}, CollectionConfig{});
    CHECK(empty.size() == 0);
    CHECK(empty.moss().doc_count() == 0);
    CHECK(empty.ann().size() == 0);
    CHECK(empty.trace("int x = 1;").entries.empty());
    CHECK(empty.check_invariants().empty());

    auto three = Collection::ingest({test::record("c", "int gamma = compute(3);"),
                                     test::record("a", "int alpha = compute(1);"),
                                     test::record("b", "int beta = compute(2);")},
                                    CollectionConfig{});
    CHECK(three.moss().doc_count() == 3);
    CHECK(three.ann().size() == 3);
    CHECK(three.records().front().id == "a");
    CHECK(three.check_invariants().empty());
}

TEST_CASE("bad records are rejected and the build continues") {
    IngestReport rep;
    auto c = Collection::ingest({test::record("a", "int alpha = 1;"),
                                 test::record("", "int nameless;"),
                                 test::record("bad", std::string("int \xff\xfe;")),
                                 test::record("blank", ""),
                                 test::record("a", "int second = 2;"),
                                 test::record("tiny", "ab")},
                                CollectionConfig{}, &rep);
    CHECK(rep.submitted == 6);
    CHECK(rep.indexed == 2);
    REQUIRE(rep.rejects.size() == 4);
    CHECK(rep.rejects[0].reason == "empty id");
    CHECK(rep.rejects[1].id == "bad");
    CHECK(rep.rejects[2].id == "blank");
    CHECK(rep.rejects[3].reason == "duplicate id");
    CHECK(c.find_record("a")->content == "int alpha = 1;");
    CHECK(rep.zero_embedding_ids == std::vector<std::string>{"tiny"});
    CHECK(c.manifest()["counts"]["rejected"] == 4);
    CHECK(c.manifest()["zero_embedding_ids"] == nlohmann::json::array({"tiny"}));
    CHECK(c.ann().size() == 1);
    CHECK(c.moss().doc_count() == 2);
}

TEST_CASE("a verbatim window ranks its source first") {
    auto records = random_records(100, 701);
    auto c = Collection::ingest(records, small_config());
    rng::Engine e(702);
    for (int t = 0; t < 50; ++t) {
        const auto& src = records[rng::uniform_index(e, records.size())];
        auto ts = tokenize(src.content);
        auto len = std::min<std::size_t>(ts.size(), 30);
        auto frag = extract_window(ts, rng::uniform_index(e, ts.size() - len + 1), len);
        auto res = c.trace(frag);
        REQUIRE_FALSE(res.entries.empty());
        CHECK(res.entries[0].doc_id == src.id);
    }
    auto whole = c.trace(records[5].content);
    CHECK(whole.entries[0].doc_id == records[5].id);
    CHECK(whole.entries[0].jaccard == 1.0);
}

TEST_CASE("with every document as a candidate, trace equals the exhaustive hybrid order") {
    auto records = random_records(200, 703, 20, 200);
    auto cfg = small_config();
    auto c = Collection::ingest(records, cfg);
    REQUIRE(c.zero_embedding_ids().empty());
    rng::Engine e(704);
    for (int t = 0; t < 30; ++t) {
        auto frag = test::plain_code(e, 40);
        auto fp = fingerprint(frag, cfg.wcfg);
        auto q = c.embed_query(fp);
        if (q.zero) {
            continue;
        }
        struct Row {
            double jac;
            double cos;
            std::string id;
        };
        std::vector<Row> oracle;
        for (const auto& r : c.records()) {
            auto v = embed(r.content, c.config().embedder);
            oracle.push_back({jaccard(fp, fingerprint(r.content, cfg.wcfg)),
                              static_cast<double>(dot(q.values.data(), v.values.data(), q.dim())), r.id});
        }
        std::sort(oracle.begin(), oracle.end(), [](const Row& a, const Row& b) {
            if (a.jac != b.jac) {
                return a.jac > b.jac;
            }
            if (a.cos != b.cos) {
                return a.cos > b.cos;
            }
            return a.id < b.id;
        });
        auto res = c.trace(frag, 200, 200);
        REQUIRE(res.entries.size() == 200);
        for (std::size_t i = 0; i < 200; ++i) {
            CHECK(res.entries[i].doc_id == oracle[i].id);
            CHECK(res.entries[i].jaccard == oracle[i].jac);
        }
        auto ex = c.exhaustive_rank_ids(frag, 1);
        CHECK(c.find_record(ex[0]) != nullptr);
        CHECK(jaccard(fp, fingerprint(c.find_record(ex[0])->content, cfg.wcfg)) == res.entries[0].jaccard);
    }
}

TEST_CASE("property: hybrid consistency and candidate containment") {
    for (std::uint64_t seed : {705, 706, 707}) {
        auto c = Collection::ingest(random_records(150, seed), small_config(128));
        rng::Engine e(seed * 10);
        for (int t = 0; t < 40; ++t) {
            const auto& src = c.records()[rng::uniform_index(e, c.size())].content;
            auto start = rng::uniform_index(e, src.size() / 2);
            auto frag = src.substr(start, 20 + rng::uniform_index(e, 40));
            auto stage1 = c.vector_rank(frag, 20);
            auto res = c.trace(frag, 20, 20);
            for (const auto& entry : res.entries) {
                CHECK(std::find(stage1.begin(), stage1.end(), entry.doc_id) != stage1.end());
            }
            auto best = c.exhaustive_rank_ids(frag, 2);
            auto fp = fingerprint(frag, c.config().wcfg);
            auto score = [&](const std::string& id) { return jaccard(fp, c.moss().fingerprints(*c.moss().find(id))); };
            if (std::find(stage1.begin(), stage1.end(), best[0]) != stage1.end()) {
                REQUIRE_FALSE(res.entries.empty());
                CHECK(res.entries[0].jaccard == score(best[0]));
                if (score(best[1]) < score(best[0])) {
                    CHECK(res.entries[0].doc_id == best[0]);
                }
            }
        }
    }
}

TEST_CASE("zero-embedding fragments fall back to the fingerprint engine") {
    auto c = Collection::ingest(random_records(30, 708), small_config());
    auto res = c.trace("a b");
    CHECK(res.query.fallback);
    CHECK(res.entries.empty());

    // Five documents: the default frequency filter would drop every hash.
    auto external_cfg = small_config(4);
    external_cfg.embedder.kind = EmbedderKind::external;
    external_cfg.moss.freq_threshold = 1.0;
    std::map<std::string, Embedding> vecs{{"r0000", Embedding{{1, 0, 0, 0}, false}}};
    auto records = random_records(5, 709);
    auto ext = Collection::ingest(records, external_cfg, nullptr, &vecs);
    auto fb = ext.trace(records[2].content);
    CHECK(fb.query.fallback);
    REQUIRE_FALSE(fb.entries.empty());
    CHECK(fb.entries[0].doc_id == "r0002");
    CHECK(fb.entries[0].cosine == 0.0);
}

TEST_CASE("external vectors and query_vector override") {
    auto cfg = small_config(4);
    cfg.embedder.kind = EmbedderKind::external;
    cfg.embedder.source = "unit-test";
    auto records = random_records(4, 710);
    std::map<std::string, Embedding> vecs{{"r0000", Embedding{{1, 0, 0, 0}, false}},
                                          {"r0001", Embedding{{0, 1, 0, 0}, false}},
                                          {"r0002", Embedding{{0, 0, 1, 0}, false}}};
    IngestReport rep;
    auto c = Collection::ingest(records, cfg, &rep, &vecs);
    CHECK(rep.zero_embedding_ids == std::vector<std::string>{"r0003"});
    CHECK(c.ann().size() == 3);

    Embedding q{{0, 0.6f, 0.8f, 0}, false};
    auto res = c.trace("unrelated_fragment_text", 1, 5, &q);
    CHECK_FALSE(res.query.fallback);
    REQUIRE(res.entries.size() == 1);
    CHECK(res.entries[0].doc_id == "r0002");
    CHECK(res.entries[0].cosine == doctest::Approx(0.8));

    Embedding wrong{{1, 0}, false};
    CHECK_THROWS_AS(c.trace("x", 1, 5, &wrong), DimensionError);
    std::map<std::string, Embedding> bad{{"r0000", Embedding{{1, 0}, false}}};
    CHECK_THROWS_AS(Collection::ingest(records, cfg, nullptr, &bad), DimensionError);
    CHECK_THROWS_AS(Collection::ingest(records, cfg), ConfigError);
}

TEST_CASE("metadata is returned byte for byte") {
    auto records = random_records(60, 711);
    auto c = Collection::ingest(records, small_config());
    for (int i = 0; i < 60; i += 7) {
        auto res = c.trace(records[i].content, 100, 10);
        for (const auto& entry : res.entries) {
            auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.id == entry.doc_id; });
            REQUIRE(it != records.end());
            CHECK(entry.author == it->author);
            CHECK(entry.license == it->license);
            CHECK(entry.origin == it->origin);
        }
    }
}

TEST_CASE("save and load reproduce the collection") {
    test::TempDir tmp;
    auto records = random_records(80, 712);
    auto c = Collection::ingest(records, small_config());
    c.save(tmp / "col");
    CHECK_THROWS_AS(c.save(tmp / "col"), Error);

    auto back = Collection::load(tmp / "col");
    CHECK(back.records() == c.records());
    CHECK(back.moss_bytes() == c.moss_bytes());
    CHECK(back.hnsw_bytes() == c.hnsw_bytes());
    CHECK(back.embeddings_bytes() == c.embeddings_bytes());
    CHECK(to_json(back.config()) == to_json(c.config()));
    for (int i = 0; i < 80; i += 9) {
        CHECK(ids_of(back.trace(records[i].content)) == ids_of(c.trace(records[i].content)));
    }

    auto smaller = Collection::ingest(random_records(10, 713), small_config());
    smaller.save(tmp / "col", true);
    CHECK(Collection::load(tmp / "col").size() == 10);
    for (const auto& entry : std::filesystem::directory_iterator(tmp.path())) {
        CHECK(entry.path().filename() == "col");
    }
    CHECK_THROWS_AS(Collection::load(tmp / "missing"), Error);
}

TEST_CASE("load rejects damaged files") {
    test::TempDir tmp;
    auto c = Collection::ingest(random_records(20, 714), small_config());
    c.save(tmp / "col");
    {
        std::ofstream out(tmp / "col" / std::string(Collection::kMossFile), std::ios::binary | std::ios::trunc);
        out << "garbage";
    }
    CHECK_THROWS_AS(Collection::load(tmp / "col"), FormatError);
}

TEST_CASE("integrity check") {
    test::TempDir tmp;
    synth::SynthConfig scfg;
    scfg.seed = 715;
    auto c = Collection::ingest(synth::make_corpus(300, scfg), CollectionConfig{});
    c.save(tmp / "col");

    SUBCASE("fresh collection passes") {
        auto rep = integrity_check(tmp / "col");
        for (const auto& chk : rep.checks) {
            INFO(chk.name << ": " << chk.detail);
            CHECK(chk.ok);
        }
        CHECK(rep.ok());
        CHECK(rep.checks.size() == 8);
        CHECK(rep.to_json()["ok"] == true);
    }
    SUBCASE("deleted records file is an id-set mismatch") {
        std::filesystem::remove(tmp / "col" / std::string(Collection::kRecordsFile));
        auto rep = integrity_check(tmp / "col", false);
        CHECK_FALSE(rep.ok());
        CHECK_FALSE(check_ok(rep, "id_sets"));
        CHECK(check_ok(rep, "moss_index"));
    }
    SUBCASE("altered seed breaks rebuild determinism") {
        auto path = tmp / "col" / std::string(Collection::kManifestFile);
        nlohmann::json m;
        std::ifstream(path) >> m;
        m["config"]["hnsw"]["seed"] = 4242;
        std::ofstream(path, std::ios::trunc) << m.dump(2);
        auto rep = integrity_check(tmp / "col");
        CHECK_FALSE(check_ok(rep, "rebuild_determinism"));
        CHECK(check_ok(rep, "id_sets"));
        CHECK(check_ok(rep, "files"));
    }
    SUBCASE("missing directory never throws") {
        auto rep = integrity_check(tmp / "nowhere");
        CHECK_FALSE(rep.ok());
        CHECK_FALSE(check_ok(rep, "manifest"));
    }
}

TEST_CASE("concurrent traces match serial results") {
    auto records = random_records(200, 716);
    auto c = Collection::ingest(records, small_config());
    std::vector<std::vector<std::string>> expected;
    for (std::size_t i = 0; i < records.size(); i += 4) {
        expected.push_back(ids_of(c.trace(records[i].content.substr(0, 80))));
    }
    std::vector<int> mismatches(4, 0);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int rep = 0; rep < 3; ++rep) {
                for (std::size_t i = 0; i < expected.size(); ++i) {
                    auto got = ids_of(c.trace(records[i * 4].content.substr(0, 80)));
                    mismatches[t] += got != expected[i];
                }
            }
        });
    }
    for (auto& th : threads) {
        th.join();
    }
    CHECK(mismatches == std::vector<int>(4, 0));
}

TEST_CASE("corpus JSON lines") {
    std::istringstream in(
        "{\"id\":\"a\",\"content\":\"int x;\",\"author\":\"ann\"}\n"
        "\n"
        "not json\n"
        "{\"id\":\"b\"}\n"
        "{\"id\":\"c\",\"content\":\"y\",\"license\":5}\n"
        "{\"id\":\"d\",\"content\":\"z\",\"origin\":null}\n");
    auto load = read_corpus_jsonl(in);
    REQUIRE(load.records.size() == 2);
    CHECK(load.records[0].author == std::optional<std::string>("ann"));
    CHECK_FALSE(load.records[1].origin.has_value());
    REQUIRE(load.rejects.size() == 3);
    CHECK(load.rejects[0].line == 3);
    CHECK(load.rejects[1].id == "b");
    CHECK(load.rejects[2].line == 5);

    std::ostringstream out;
    write_corpus_jsonl(out, load.records);
    std::istringstream again(out.str());
    CHECK(read_corpus_jsonl(again).records == load.records);
}

TEST_CASE("collection config round-trips through JSON") {
    CollectionConfig cfg;
    cfg.embedder.dim = 64;
    cfg.hnsw.seed = 9;
    cfg.moss.budget = 32;
    auto back = collection_config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    auto j = to_json(cfg);
    j["hnsw"]["M"] = 1;
    CHECK_THROWS_AS(collection_config_from_json(j), ConfigError);
}
