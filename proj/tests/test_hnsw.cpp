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
#include <map>
#include <set>
#include <sstream>

#include "provtrace/error.h"
#include "provtrace/hnsw.h"
#include "support.h"

using namespace provtrace;

namespace {

std::vector<std::pair<std::string, Embedding>>
random_items(std::size_t n, std::uint32_t dim, std::uint64_t seed) {
    rng::Engine e(seed);
    std::vector<std::pair<std::string, Embedding>> items;
    for (std::size_t i = 0; i < n; ++i) {
        items.emplace_back(fmt::format("v{:05}", i), test::random_unit(dim, e));
    }
    return items;
}

std::vector<std::string>
exact_knn(const std::vector<std::pair<std::string, Embedding>>& items, const Embedding& q, std::size_t k) {
    std::vector<std::pair<double, std::string>> all;
    for (const auto& [id, v] : items) {
        all.emplace_back(-cosine(q, v), id);
    }
    std::sort(all.begin(), all.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i) {
        out.push_back(all[i].second);
    }
    return out;
}

std::string
graph_bytes(const HnswIndex& g) {
    std::ostringstream out;
    g.save_graph(out);
    return out.str();
}

HnswIndex::VectorLookup
lookup_for(const std::vector<std::pair<std::string, Embedding>>& items) {
    auto table = std::make_shared<std::map<std::string, Embedding>>(items.begin(), items.end());
    return [table](const std::string& id) -> std::span<const float> { return table->at(id).values; };
}

}  // namespace

TEST_CASE("first and second insert") {
    HnswIndex g(4, HnswConfig{});
    CHECK(g.empty());
    CHECK(g.search(Embedding{{1, 0, 0, 0}, false}, 3).empty());

    g.insert("a", Embedding{{1, 0, 0, 0}, false});
    CHECK(g.size() == 1);
    CHECK(g.entry_point() == 0);
    for (int l = 0; l <= g.level(0); ++l) {
        CHECK(g.neighbors(0, l).empty());
    }

    g.insert("b", Embedding{{0, 1, 0, 0}, false});
    const int shared = std::min(g.level(0), g.level(1));
    for (int l = 0; l <= shared; ++l) {
        CHECK(g.neighbors(0, l) == std::vector<NodeId>{1});
        CHECK(g.neighbors(1, l) == std::vector<NodeId>{0});
    }
    CHECK(g.check_invariants().empty());
}

TEST_CASE("insert rejects bad input") {
    HnswIndex g(4, HnswConfig{});
    g.insert("a", Embedding{{1, 0, 0, 0}, false});
    CHECK_THROWS_AS(g.insert("a", Embedding{{0, 1, 0, 0}, false}), DuplicateIdError);
    CHECK_THROWS_AS(g.insert("b", Embedding{{1, 0, 0}, false}), DimensionError);
    CHECK_THROWS_AS(g.insert("c", Embedding{{0, 0, 0, 0}, true}), ConfigError);
    CHECK_THROWS_AS(g.search(Embedding{{1, 0}, false}, 1), DimensionError);
    CHECK(g.search(Embedding{{0, 0, 0, 0}, true}, 1).empty());
    CHECK(g.size() == 1);
}

TEST_CASE("200 random vectors keep every invariant and stay connected") {
    auto g = HnswIndex::build(random_items(200, 32, 501), 32, HnswConfig{});
    CHECK(g.size() == 200);
    CHECK(g.check_invariants().empty());
    CHECK(g.count_unreachable() == 0);
    for (NodeId n = 0; n < g.size(); ++n) {
        CHECK(g.level(n) <= g.level(g.entry_point()));
    }
}

TEST_CASE("search results are ordered and complete for k >= N") {
    auto items = random_items(50, 16, 502);
    auto g = HnswIndex::build(items, 16, HnswConfig{});
    auto hits = g.search(items[3].second, 80);
    REQUIRE(hits.size() == 50);
    CHECK(g.label(hits[0].node) == "v00003");
    CHECK(hits[0].cosine == doctest::Approx(1.0f).epsilon(1e-6));
    std::set<std::string> seen;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        seen.insert(g.label(hits[i].node));
        if (i > 0) {
            CHECK(hits[i - 1].cosine >= hits[i].cosine);
        }
    }
    CHECK(seen.size() == 50);
}

TEST_CASE("equal cosines are ordered by id") {
    HnswIndex g(2, HnswConfig{});
    g.insert("z", Embedding{{1, 0}, false});
    g.insert("a", Embedding{{1, 0}, false});
    g.insert("m", Embedding{{0, 1}, false});
    auto hits = g.search(Embedding{{1, 0}, false}, 3);
    REQUIRE(hits.size() == 3);
    CHECK(g.label(hits[0].node) == "a");
    CHECK(g.label(hits[1].node) == "z");
    CHECK(g.label(hits[2].node) == "m");
}

TEST_CASE("recall against exact kNN on 1000 Gaussian vectors") {
    constexpr std::uint32_t dim = 64;
    auto items = random_items(1000, dim, 503);
    auto g = HnswIndex::build(items, dim, HnswConfig{});
    rng::Engine e(504);
    std::size_t found = 0, total = 0;
    for (int q = 0; q < 200; ++q) {
        auto query = test::random_unit(dim, e);
        auto truth = exact_knn(items, query, 10);
        std::set<std::string> want(truth.begin(), truth.end());
        for (const auto& h : g.search(query, 10)) {
            found += want.count(g.label(h.node));
        }
        total += truth.size();
    }
    const double recall = static_cast<double>(found) / static_cast<double>(total);
    MESSAGE("recall@10 = " << recall);
    CHECK(recall >= 0.9);
}

TEST_CASE("builds are deterministic") {
    auto items = random_items(500, 24, 505);
    auto a = HnswIndex::build(items, 24, HnswConfig{});
    auto b = HnswIndex::build(items, 24, HnswConfig{});
    CHECK(graph_bytes(a) == graph_bytes(b));
    rng::Engine e(506);
    for (int q = 0; q < 50; ++q) {
        auto query = test::random_unit(24, e);
        auto ha = a.search(query, 10);
        auto hb = b.search(query, 10);
        REQUIRE(ha.size() == hb.size());
        for (std::size_t i = 0; i < ha.size(); ++i) {
            CHECK(a.label(ha[i].node) == b.label(hb[i].node));
            CHECK(ha[i].cosine == hb[i].cosine);
        }
    }
    HnswConfig other;
    other.seed = 43;
    CHECK(graph_bytes(HnswIndex::build(items, 24, other)) != graph_bytes(a));
    CHECK(HnswIndex::build({}, 24, HnswConfig{}).empty());
}

TEST_CASE("graph persistence round-trips") {
    auto items = random_items(300, 16, 507);
    auto g = HnswIndex::build(items, 16, HnswConfig{});
    const std::string bytes = graph_bytes(g);
    std::istringstream in(bytes);
    auto back = HnswIndex::load_graph(in, lookup_for(items));
    CHECK(graph_bytes(back) == bytes);
    CHECK(back.entry_point() == g.entry_point());
    CHECK(back.find("v00017") == g.find("v00017"));
    auto q = items[17].second;
    CHECK(back.label(back.search(q, 1)[0].node) == "v00017");

    std::istringstream bad_magic("XXXXXX" + bytes.substr(6));
    CHECK_THROWS_AS(HnswIndex::load_graph(bad_magic, lookup_for(items)), FormatError);
    std::istringstream truncated(bytes.substr(0, bytes.size() - 9));
    CHECK_THROWS_AS(HnswIndex::load_graph(truncated, lookup_for(items)), FormatError);
    std::istringstream missing(bytes);
    auto fewer = items;
    fewer.pop_back();
    CHECK_THROWS(HnswIndex::load_graph(missing, lookup_for(fewer)));
}

TEST_CASE("level distribution follows the 1/M geometric law") {
    HnswConfig cfg;
    cfg.ef_construction = 32;
    double fraction = 0.0;
    const std::uint64_t seeds[] = {1, 2, 3};
    for (auto seed : seeds) {
        cfg.seed = seed;
        auto g = HnswIndex::build(random_items(10000, 4, 600 + seed), 4, cfg);
        std::size_t upper = 0;
        for (NodeId n = 0; n < g.size(); ++n) {
            upper += g.level(n) >= 1;
        }
        fraction += static_cast<double>(upper) / static_cast<double>(g.size()) / 3.0;
    }
    MESSAGE("fraction with level >= 1: " << fraction);
    CHECK(fraction >= 0.5 / cfg.M);
    CHECK(fraction <= 2.0 / cfg.M);
}

TEST_CASE("config validation") {
    HnswConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.level_scale() == doctest::Approx(1.0 / std::log(16.0)));
    cfg.M = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.M = 16;
    cfg.ef_construction = 8;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.ef_construction = 200;
    cfg.ef_search = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
