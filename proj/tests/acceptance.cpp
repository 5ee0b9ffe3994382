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


// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "provtrace/canon.h"
#include "provtrace/clonegen.h"
#include "provtrace/collection.h"
#include "provtrace/evalbench.h"
#include "provtrace/hnsw.h"
#include "provtrace/mossidx.h"
#include "provtrace/synth.h"
#include "provtrace/winnow.h"
#include "support.h"

using namespace provtrace;

namespace {

using Clock = std::chrono::steady_clock;

double
seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// --- 1 ---------------------------------------------------------------------

Outcome
winnowing_guarantee() {
    const WinnowConfig cfg{5, 4};
    rng::Engine e(1);
    auto t0 = Clock::now();
    int hits = 0;
    constexpr int pairs = 1000;
    for (int i = 0; i < pairs; ++i) {
        auto shared = test::plain_code(e, cfg.k + cfg.w - 1 + rng::uniform_index(e, 40));
        auto wrap = [&](std::size_t before, std::size_t after) {
            return test::plain_code(e, before) + shared + test::plain_code(e, after);
        };
        auto a = wrap(rng::uniform_index(e, 200), rng::uniform_index(e, 200));
        auto b = wrap(rng::uniform_index(e, 200), rng::uniform_index(e, 200));
        hits += intersection_size(fingerprint(a, cfg).hashes, fingerprint(b, cfg).hashes) > 0;
    }
    double secs = seconds_since(t0);
    return {hits == pairs && secs < 10.0, fmt::format("{}/{} pairs share a fingerprint, {:.2f} s", hits, pairs, secs)};
}

// --- 2 ---------------------------------------------------------------------

// Inserts whitespace and comments only directly before a code character, and
// never after a '/', so no comment opener can be formed or broken.
std::string
reformat(const std::string& src, rng::Engine& e) {
    static const std::vector<std::string> kInserts{" ", "  ", "\t", "\n", "\r\n", "\n\n    ", "/* note */",
                                                   "// trailing remark\n", " /* multi\n line */ "};
    auto canon = canonicalize(src);
    std::set<std::size_t> points;
    for (std::size_t i = 0; i < canon.size(); ++i) {
        std::size_t off = canon.origin_map[i];
        if (off == 0 || src[off - 1] != '/') {
            if (rng::uniform_index(e, 4) == 0) {
                points.insert(off);
            }
        }
    }
    std::string out;
    std::size_t cursor = 0;
    for (std::size_t p : points) {
        out.append(src, cursor, p - cursor);
        out += kInserts[rng::uniform_index(e, kInserts.size())];
        cursor = p;
    }
    out.append(src, cursor);
    out += kInserts[rng::uniform_index(e, kInserts.size())];
    return out;
}

Outcome
format_invariance() {
    synth::SynthConfig scfg;
    scfg.seed = 2;
    auto snippets = synth::make_corpus(50, scfg);
    const WinnowConfig cfg;
    rng::Engine e(2);
    int same = 0, total = 0;
    for (const auto& s : snippets) {
        auto base = fingerprint(s.content, cfg);
        for (int v = 0; v < 10; ++v) {
            auto changed = reformat(s.content, e);
            same += changed != s.content && fingerprint(changed, cfg) == base;
            ++total;
        }
    }
    return {same == total, fmt::format("{}/{} reformatted snippets keep identical fingerprints", same, total)};
}

// --- 3 ---------------------------------------------------------------------

Outcome
moss_oracle() {
    const WinnowConfig wcfg;
    const MossConfig oracle{1.0, MossConfig::kUnbounded, 200};
    int agree = 0, total = 0;
    for (std::uint64_t corpus_seed = 1; corpus_seed <= 5; ++corpus_seed) {
        synth::SynthConfig scfg;
        scfg.seed = 300 + corpus_seed;
        auto records = synth::make_corpus(200, scfg);
        std::vector<std::pair<std::string, std::string>> docs;
        for (const auto& r : records) {
            docs.emplace_back(r.id, r.content);
        }
        auto idx = InvertedIndex::build(docs, wcfg);
        rng::Engine e(corpus_seed);
        for (int q = 0; q < 100; ++q) {
            std::string frag;
            if (q % 5 == 4) {
                frag = test::plain_code(e, 20 + rng::uniform_index(e, 200));
            } else {
                auto ts = tokenize(docs[rng::uniform_index(e, docs.size())].second);
                auto len = std::min<std::size_t>(ts.size(), 7 + rng::uniform_index(e, 120));
                frag = extract_window(ts, rng::uniform_index(e, ts.size() - len + 1), len);
            }
            auto fp = fingerprint(frag, wcfg);
            auto exhaustive = exhaustive_rank(idx, fp, oracle.top_k);
            // Documents with no shared fingerprint have score 0 and are
            // outside the candidate universe of the inverted index.
            std::erase_if(exhaustive, [](const ScoredDoc& d) { return d.score == 0.0; });
            agree += moss_query(idx, fp, oracle) == exhaustive;
            ++total;
        }
    }
    return {agree == total, fmt::format("{}/{} fragments: identical ids, order and scores", agree, total)};
}

// --- 4 ---------------------------------------------------------------------

Outcome
hnsw_recall() {
    constexpr std::uint32_t dim = 1024;
    constexpr std::size_t n = 10000, k = 10;
    auto t0 = Clock::now();
    rng::Engine e(4);
    std::vector<std::pair<std::string, Embedding>> items;
    for (std::size_t i = 0; i < n; ++i) {
        items.emplace_back(fmt::format("v{:05}", i), test::random_unit(dim, e));
    }
    auto g = HnswIndex::build(items, dim, HnswConfig{});

    auto exact = [&](const std::vector<float>& q) {
        std::vector<std::pair<float, std::size_t>> all(n);
        for (std::size_t i = 0; i < n; ++i) {
            all[i] = {-dot(q.data(), items[i].second.values.data(), dim), i};
        }
        std::partial_sort(all.begin(), all.begin() + k, all.end());
        std::set<std::string> ids;
        for (std::size_t i = 0; i < k; ++i) {
            ids.insert(items[all[i].second].first);
        }
        return ids;
    };
    auto recall = [&](const std::vector<Embedding>& queries) {
        std::size_t found = 0;
        for (const auto& q : queries) {
            auto truth = exact(q.values);
            for (const auto& h : g.search(q, k)) {
                found += truth.count(g.label(h.node));
            }
        }
        return static_cast<double>(found) / static_cast<double>(queries.size() * k);
    };

    std::vector<Embedding> indexed, fresh;
    for (int i = 0; i < 1000; ++i) {
        indexed.push_back(items[rng::uniform_index(e, n)].second);
    }
    for (int i = 0; i < 200; ++i) {
        fresh.push_back(test::random_unit(dim, e));
    }
    double r = recall(indexed);
    double secs = seconds_since(t0);
    double r_fresh = recall(fresh);
    return {r >= 0.90 && secs < 120.0,
            fmt::format("recall@10 {:.4f} over 1000 indexed-vector queries, {:.1f} s "
                        "(info: {:.4f} for 200 out-of-sample queries)",
                        r, secs, r_fresh)};
}

// --- 5 ---------------------------------------------------------------------

Outcome
scaling() {
    auto t0 = Clock::now();
    synth::SynthConfig scfg;
    scfg.seed = 5;
    auto corpus = [scfg](std::size_t n) { return synth::make_corpus(n, scfg); };
    const std::vector<std::size_t> sizes{1000, 10000, 100000};
    auto brute = bench_latency(collection_runner_factory(corpus, CollectionConfig{}, Method::exhaustive, 100), sizes,
                               100);
    auto hybrid =
        bench_latency(collection_runner_factory(corpus, CollectionConfig{}, Method::hybrid, 100), sizes, 100);
    double secs = seconds_since(t0);
    auto ms = [](const LatencyFit& f) {
        std::string s;
        for (const auto& x : f.samples) {
            s += fmt::format("{}{:.3f}", s.empty() ? "" : "/", x.mean_seconds * 1e3);
        }
        return s;
    };
    return {brute.b >= 0.8 && hybrid.b <= 0.5 && secs < 900.0,
            fmt::format("exhaustive b={:.3f} (r2 {:.3f}, ms {}), hybrid b={:.3f} (r2 {:.3f}, ms {}), {:.0f} s", brute.b,
                        brute.r2, ms(brute), hybrid.b, hybrid.r2, ms(hybrid), secs)};
}

// --- shared 5k corpus for 6 and 9 ---------------------------------------------

const Collection&
corpus_5k() {
    static const Collection c = [] {
        synth::SynthConfig scfg;
        return Collection::ingest(synth::make_corpus(5000, scfg), CollectionConfig{});
    }();
    return c;
}

// --- 6 ---------------------------------------------------------------------

Outcome
hybrid_consistency() {
    const auto& c = corpus_5k();
    QueryGenConfig qcfg;
    qcfg.grid = {15, 30, 60, 120, 240};
    qcfg.per_size = 200;
    qcfg.seed = 6;
    auto queries = make_queries(c, qcfg).queries;
    int applicable = 0, agree = 0, tied = 0;
    for (const auto& q : queries) {
        auto stage1 = c.vector_rank(q.fragment, 100);
        auto best = c.exhaustive_rank_ids(q.fragment, 2);
        if (best.empty() || std::find(stage1.begin(), stage1.end(), best[0]) == stage1.end()) {
            continue;
        }
        ++applicable;
        auto res = c.trace(q.fragment, 100, 10);
        if (!res.entries.empty() && res.entries[0].doc_id == best[0]) {
            ++agree;
        } else {
            auto fp = fingerprint(q.fragment, c.config().wcfg);
            double top = jaccard(fp, c.moss().fingerprints(*c.moss().find(best[0])));
            tied += !res.entries.empty() && res.entries[0].jaccard == top;
        }
    }
    return {applicable > 0 && agree == applicable,
            fmt::format("{}/{} applicable queries agree on top-1 ({} queries in total; "
                        "{} disagreements are equal-Jaccard ties)",
                        agree, applicable, queries.size(), tied)};
}

// --- 7 ---------------------------------------------------------------------

Outcome
metric_oracles() {
    rng::Engine e(7);
    int agree = 0;
    for (int inst = 0; inst < 1000; ++inst) {
        std::size_t nq = 1 + rng::uniform_index(e, 20);
        std::vector<Ranking> rs(nq);
        std::vector<TruthSet> ts(nq);
        for (std::size_t i = 0; i < nq; ++i) {
            for (std::size_t j = 0, len = rng::uniform_index(e, 12); j < len; ++j) {
                rs[i].push_back(fmt::format("d{}", rng::uniform_index(e, 15)));
            }
            ts[i].insert(fmt::format("d{}", rng::uniform_index(e, 15)));
        }
        bool ok = true;
        for (std::size_t n : {1, 2, 5, 10, 100}) {
            std::size_t hit = 0;
            for (std::size_t i = 0; i < nq; ++i) {
                bool found = false;
                for (std::size_t j = 0; j < std::min(n, rs[i].size()); ++j) {
                    found = found || ts[i].count(rs[i][j]) > 0;
                }
                hit += found;
            }
            ok = ok && recall_at_n(rs, ts, n) == static_cast<double>(hit) / static_cast<double>(nq);
        }
        double rr = 0.0;
        for (std::size_t i = 0; i < nq; ++i) {
            auto it = std::find_if(rs[i].begin(), rs[i].end(), [&](const auto& id) { return ts[i].count(id) > 0; });
            if (it != rs[i].end()) {
                rr += 1.0 / static_cast<double>(it - rs[i].begin() + 1);
            }
        }
        ok = ok && mrr(rs, ts) == rr / static_cast<double>(nq);
        agree += ok;
    }
    std::vector<Ranking> ex{{"t0", "x"}, {"x", "y", "t1"}, {"x", "y"}, {"x", "t3"}};
    std::vector<TruthSet> exs{{"t0"}, {"t1"}, {"t2"}, {"t3"}};
    double worked = mrr(ex, exs);
    bool worked_ok = std::abs(worked - 11.0 / 24.0) < 1e-12;
    return {agree == 1000 && worked_ok,
            fmt::format("{}/1000 instances match the reference; ranks {{1,3,none,2}} give MRR {:.6f} (11/24 = {:.6f})",
                        agree, worked, 11.0 / 24.0)};
}

// --- 8 ---------------------------------------------------------------------

Outcome
mutation_calibration() {
    // "item" is the only eligible word; "value" occurs twice and the rest are
    // at most three characters long.
    const std::string frag = "item = item + item * k; int a = b; value(other); if (x) value = 1;";
    const auto base = tokenize(frag);
    MutationConfig cfg;
    std::size_t replaced = 0, ineligible_changed = 0;
    constexpr int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        cfg.seed = rng::derive_seed(8, static_cast<std::uint64_t>(t));
        auto res = replace_frequent_words(frag, cfg);
        auto after = tokenize(res.text);
        bool item_changed = false, other_changed = after.size() != base.size();
        for (std::size_t i = 0; i < std::min(after.size(), base.size()); ++i) {
            if (after.tokens[i].text != base.tokens[i].text) {
                (base.tokens[i].text == "item" ? item_changed : other_changed) = true;
            }
        }
        replaced += item_changed;
        ineligible_changed += other_changed;
    }
    double rate = static_cast<double>(replaced) / trials;
    return {std::abs(rate - 0.2) <= 0.03 && ineligible_changed == 0,
            fmt::format("replacement rate {:.4f} over {} trials, ineligible words altered in {} trials", rate, trials,
                        ineligible_changed)};
}

// --- 9 ---------------------------------------------------------------------

Outcome
retrieval_trends() {
    const auto& c = corpus_5k();
    QueryGenConfig qcfg;
    qcfg.per_size = 400;
    qcfg.type2_fraction = 0.5;
    qcfg.seed = 9;
    auto queries = make_queries(c, qcfg).queries;
    auto rep = run_grid(c, queries, GridOptions{});

    auto mrr_of = [&](std::size_t w, int type, Method m) {
        auto* cell = rep.find(w, type, m);
        return cell != nullptr ? cell->mrr : -1.0;
    };
    double t1 = mrr_of(60, 1, Method::hybrid);
    double t2 = mrr_of(60, 2, Method::hybrid);
    double t2w = mrr_of(60, 2, Method::winnowing);
    bool a = t1 >= 0.95;
    bool b = t2 >= 0.60 && t2 >= t2w - 0.02;

    std::vector<std::string> drops;
    for (Method m : GridOptions{}.methods) {
        for (int type : {1, 2}) {
            for (std::size_t i = 1; i < qcfg.grid.size(); ++i) {
                double prev = mrr_of(qcfg.grid[i - 1], type, m);
                double cur = mrr_of(qcfg.grid[i], type, m);
                if (cur < prev - 0.03) {
                    drops.push_back(fmt::format("{} type-{} {}->{}: {:.4f}->{:.4f}", to_string(m), type,
                                                qcfg.grid[i - 1], qcfg.grid[i], prev, cur));
                }
            }
        }
    }
    bool mono = drops.empty();
    std::string table;
    for (Method m : GridOptions{}.methods) {
        for (int type : {1, 2}) {
            table += fmt::format("\n    {:<12} type-{}:", to_string(m), type);
            for (auto w : qcfg.grid) {
                table += fmt::format(" {:>3}={:.3f}", w, mrr_of(w, type, m));
            }
        }
    }
    std::string detail = fmt::format(
        "(a) type-1 w60 hybrid MRR {:.4f} [{}]; (b) type-2 w60 hybrid {:.4f} vs winnowing {:.4f} [{}]; "
        "(c) monotone within 0.03 [{}]{}{}",
        t1, a ? "ok" : "fail", t2, t2w, b ? "ok" : "fail", mono ? "ok" : "fail",
        drops.empty() ? "" : "; drops: " + fmt::format("{}", fmt::join(drops, ", ")), table);
    return {a && b && mono, detail};
}

// --- 10 --------------------------------------------------------------------

Outcome
determinism() {
    test::TempDir tmp;
    synth::SynthConfig scfg;
    scfg.seed = 10;
    QueryGenConfig qcfg;
    qcfg.grid = {15, 60, 240};
    qcfg.per_size = 40;
    GridOptions opts;
    opts.methods = {Method::vector_only, Method::winnowing, Method::hybrid, Method::exhaustive};

    std::vector<MetricReport> reports;
    for (const char* name : {"a", "b"}) {
        auto c = Collection::ingest(synth::make_corpus(2000, scfg), CollectionConfig{});
        c.save(tmp / name);
        auto loaded = Collection::load(tmp / name);
        reports.push_back(run_grid(loaded, make_queries(loaded, qcfg).queries, opts));
    }
    std::vector<std::string> differ;
    for (auto file : {Collection::kRecordsFile, Collection::kMossFile, Collection::kHnswFile,
                      Collection::kEmbeddingsFile}) {
        std::string f(file);
        if (test::read_bytes(tmp / "a" / f) != test::read_bytes(tmp / "b" / f)) {
            differ.push_back(f);
        }
    }
    bool same_report = reports[0] == reports[1] && reports[0].to_json().dump() == reports[1].to_json().dump();
    return {differ.empty() && same_report,
            fmt::format("index files {}; metric reports {} ({} cells)",
                        differ.empty() ? "byte-identical" : "differ: " + fmt::format("{}", fmt::join(differ, ", ")),
                        same_report ? "identical" : "differ", reports[0].cells.size())};
}

struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int
main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "winnowing guarantee", winnowing_guarantee},
        {2, "whitespace/comment invariance", format_invariance},
        {3, "fingerprint engine oracle equivalence", moss_oracle},
        {4, "HNSW recall", hnsw_recall},
        {5, "scaling exponents", scaling},
        {6, "hybrid consistency", hybrid_consistency},
        {7, "metric oracles", metric_oracles},
        {8, "mutation calibration", mutation_calibration},
        {9, "desk-scale retrieval trends", retrieval_trends},
        {10, "determinism", determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) {
        wanted.insert(std::atoi(argv[i]));
    }
    int failures = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && wanted.count(c.number) == 0) {
            continue;
        }
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("threw: {}", e.what())};
        }
        failures += !o.pass;
        fmt::print("{} [{}] {}: {}\n", o.pass ? "PASS" : "FAIL", c.number, c.name, o.detail);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
