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


#include "provtrace/evalbench.h"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <tuple>

#include "provtrace/error.h"

namespace provtrace {

std::optional<std::size_t>
first_relevant_rank(const Ranking& ranking, const TruthSet& truth) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (truth.count(ranking[i]) != 0) {
            return i + 1;
        }
    }
    return std::nullopt;
}

namespace {

void
check_lengths(std::span<const Ranking> rankings, std::span<const TruthSet> truths) {
    if (rankings.size() != truths.size()) {
        throw std::invalid_argument(
            fmt::format("{} rankings but {} truth sets", rankings.size(), truths.size()));
    }
}

}  // namespace

double
recall_at_n(std::span<const Ranking> rankings, std::span<const TruthSet> truths, std::size_t n) {
    check_lengths(rankings, truths);
    if (n == 0) {
        throw std::invalid_argument("recall cutoff must be at least 1");
    }
    if (rankings.empty()) {
        return 0.0;
    }
    std::size_t hits = 0;
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        auto r = first_relevant_rank(rankings[q], truths[q]);
        hits += (r && *r <= n) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double
mrr(std::span<const Ranking> rankings, std::span<const TruthSet> truths) {
    check_lengths(rankings, truths);
    if (rankings.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        if (auto r = first_relevant_rank(rankings[q], truths[q])) {
            sum += 1.0 / static_cast<double>(*r);
        }
    }
    return sum / static_cast<double>(rankings.size());
}

std::string_view
to_string(Method m) {
    switch (m) {
    case Method::vector_only:
        return "vector-only";
    case Method::winnowing:
        return "winnowing";
    case Method::hybrid:
        return "hybrid";
    case Method::exhaustive:
        return "exhaustive";
    }
    return "unknown";
}

Method
method_from_string(std::string_view name) {
    for (auto m : {Method::vector_only, Method::winnowing, Method::hybrid, Method::exhaustive}) {
        if (name == to_string(m)) {
            return m;
        }
    }
    throw ConfigError(fmt::format("unknown method '{}'", name));
}

// ---------------------------------------------------------------------------
// report

const MetricCell*
MetricReport::find(std::size_t window_tokens, int clone_type, Method method) const {
    for (const auto& c : cells) {
        if (c.window_tokens == window_tokens && c.clone_type == clone_type && c.method == method) {
            return &c;
        }
    }
    return nullptr;
}

nlohmann::json
MetricReport::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json recall = nlohmann::json::object();
        for (const auto& [n, v] : c.recall_at) {
            recall[std::to_string(n)] = v;
        }
        arr.push_back({{"corpus_size", c.corpus_size},
                       {"window_tokens", c.window_tokens},
                       {"clone_type", c.clone_type},
                       {"method", std::string(to_string(c.method))},
                       {"recall_at", recall},
                       {"mrr", c.mrr},
                       {"query_count", c.query_count}});
    }
    return nlohmann::json{{"cells", arr}};
}

std::string
MetricReport::to_table() const {
    std::set<std::size_t> cutoffs;
    for (const auto& c : cells) {
        for (const auto& [n, v] : c.recall_at) {
            cutoffs.insert(n);
        }
    }
    std::string out = fmt::format("{:>8} {:>7} {:>4} {:<12} {:>7}", "N", "window", "type", "method", "queries");
    for (auto n : cutoffs) {
        out += fmt::format(" {:>7}", fmt::format("R@{}", n));
    }
    out += fmt::format(" {:>7}\n", "MRR");
    for (const auto& c : cells) {
        out += fmt::format("{:>8} {:>7} {:>4} {:<12} {:>7}", c.corpus_size, c.window_tokens, c.clone_type,
                           to_string(c.method), c.query_count);
        for (auto n : cutoffs) {
            auto it = c.recall_at.find(n);
            out += it == c.recall_at.end() ? fmt::format(" {:>7}", "-") : fmt::format(" {:>7.4f}", it->second);
        }
        out += fmt::format(" {:>7.4f}\n", c.mrr);
    }
    return out;
}

// ---------------------------------------------------------------------------
// grid

std::size_t
GridOptions::depth() const {
    std::size_t d = 1;
    for (auto n : cutoffs) {
        d = std::max(d, n);
    }
    return d;
}

Ranking
rank_with(const Collection& c, Method method, std::string_view fragment, const GridOptions& opts) {
    const std::size_t depth = opts.depth();
    switch (method) {
    case Method::vector_only:
        return c.vector_rank(fragment, depth);
    case Method::winnowing:
        return c.winnowing_rank(fragment, depth, opts.moss);
    case Method::exhaustive:
        return c.exhaustive_rank_ids(fragment, depth);
    case Method::hybrid: {
        Ranking ids;
        for (auto& e : c.trace(fragment, opts.candidates, depth).entries) {
            ids.push_back(std::move(e.doc_id));
        }
        return ids;
    }
    }
    throw ConfigError("unknown method");
}

MetricReport
run_grid(const Collection& c, std::span<const CloneQuery> queries, const GridOptions& opts) {
    for (auto n : opts.cutoffs) {
        if (n == 0) {
            throw ConfigError("recall cutoffs must be at least 1");
        }
    }
    for (const auto& q : queries) {
        if (c.find_record(q.source_doc_id) == nullptr) {
            throw ConfigError(fmt::format("query '{}' names unknown document '{}'", q.id, q.source_doc_id));
        }
    }

    using Key = std::tuple<std::size_t, int, Method>;
    struct Bucket {
        std::vector<Ranking> rankings;
        std::vector<TruthSet> truths;
    };
    std::map<Key, Bucket> buckets;
    for (const auto& q : queries) {
        for (Method m : opts.methods) {
            auto& b = buckets[{q.window_tokens, q.clone_type, m}];
            b.rankings.push_back(rank_with(c, m, q.fragment, opts));
            b.truths.push_back({q.source_doc_id});
        }
    }

    MetricReport report;
    for (const auto& [key, b] : buckets) {
        MetricCell cell;
        cell.corpus_size = c.size();
        std::tie(cell.window_tokens, cell.clone_type, cell.method) = key;
        for (auto n : opts.cutoffs) {
            cell.recall_at[n] = recall_at_n(b.rankings, b.truths, n);
        }
        cell.mrr = mrr(b.rankings, b.truths);
        cell.query_count = b.rankings.size();
        report.cells.push_back(std::move(cell));
    }
    return report;
}

// ---------------------------------------------------------------------------
// latency

nlohmann::json
LatencyFit::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& s : samples) {
        arr.push_back({{"n", s.n}, {"mean_seconds", s.mean_seconds}, {"queries", s.queries}});
    }
    return nlohmann::json{{"samples", arr}, {"a", a}, {"b", b}, {"r2", r2}};
}

std::string
LatencyFit::to_csv() const {
    std::string out = "n,mean_seconds,queries\n";
    for (const auto& s : samples) {
        out += fmt::format("{},{:.9g},{}\n", s.n, s.mean_seconds, s.queries);
    }
    return out;
}

LatencyFit
fit_power_law(std::span<const LatencySample> samples) {
    if (samples.size() < 2) {
        throw ConfigError("a power-law fit needs at least two sizes");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].n == 0 || !(samples[i].mean_seconds > 0.0)) {
            throw ConfigError("latency samples need positive N and positive times");
        }
        if (i > 0 && samples[i].n <= samples[i - 1].n) {
            throw ConfigError("latency sample sizes must be strictly increasing");
        }
    }
    const double m = static_cast<double>(samples.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& s : samples) {
        sx += std::log(static_cast<double>(s.n));
        sy += std::log(s.mean_seconds);
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& s : samples) {
        double dx = std::log(static_cast<double>(s.n)) - mx;
        double dy = std::log(s.mean_seconds) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LatencyFit fit;
    fit.samples.assign(samples.begin(), samples.end());
    fit.b = sxy / sxx;
    fit.a = std::exp(my - fit.b * mx);
    double ss_res = 0.0;
    for (const auto& s : samples) {
        double pred = std::log(fit.a) + fit.b * std::log(static_cast<double>(s.n));
        double r = std::log(s.mean_seconds) - pred;
        ss_res += r * r;
    }
    fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

LatencyFit
bench_latency(const RunnerFactory& factory,
              std::span<const std::size_t> sizes,
              std::size_t queries_per_size,
              std::size_t warmup) {
    if (sizes.size() < 2) {
        throw ConfigError("latency benchmark needs at least two sizes");
    }
    if (queries_per_size == 0) {
        throw ConfigError("queries per size must be positive");
    }
    std::vector<LatencySample> samples;
    for (std::size_t n : sizes) {
        QueryRunner run = factory(n);
        for (std::size_t i = 0; i < warmup; ++i) {
            run(i);
        }
        auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < queries_per_size; ++i) {
            run(warmup + i);
        }
        std::chrono::duration<double> total = std::chrono::steady_clock::now() - t0;
        samples.push_back({n, total.count() / static_cast<double>(queries_per_size), queries_per_size});
    }
    return fit_power_law(samples);
}

RunnerFactory
collection_runner_factory(std::function<std::vector<CorpusRecord>(std::size_t n)> corpus,
                          CollectionConfig cfg,
                          Method method,
                          std::size_t queries,
                          GridOptions opts,
                          std::uint64_t seed) {
    return [corpus = std::move(corpus), cfg, method, queries, opts, seed](std::size_t n) -> QueryRunner {
        auto records = corpus(n);
        QueryGenConfig qcfg;
        qcfg.grid = {60};
        qcfg.per_size = std::max<std::size_t>(queries, 1);
        qcfg.seed = seed;
        auto fragments = std::make_shared<std::vector<std::string>>();
        for (auto& q : make_queries(records, qcfg).queries) {
            fragments->push_back(std::move(q.fragment));
        }
        if (fragments->empty()) {
            throw ConfigError(fmt::format("corpus of size {} has no document of 60 tokens", n));
        }
        const std::size_t depth = opts.depth();

        if (method == Method::exhaustive) {
            std::vector<std::pair<std::string, std::string>> docs;
            docs.reserve(records.size());
            for (auto& r : records) {
                docs.emplace_back(std::move(r.id), std::move(r.content));
            }
            auto idx = std::make_shared<InvertedIndex>(InvertedIndex::build(std::move(docs), cfg.wcfg));
            auto wcfg = cfg.wcfg;
            return [idx, fragments, depth, wcfg](std::size_t i) {
                const auto& f = (*fragments)[i % fragments->size()];
                auto hits = exhaustive_rank(*idx, fingerprint(f, wcfg), depth);
                if (hits.size() > depth) {
                    throw Error("exhaustive rank exceeded depth");
                }
            };
        }
        auto coll = std::make_shared<Collection>(Collection::ingest(std::move(records), cfg));
        return [coll, fragments, method, opts](std::size_t i) {
            const auto& f = (*fragments)[i % fragments->size()];
            auto ids = rank_with(*coll, method, f, opts);
            if (ids.size() > opts.depth()) {
                throw Error("ranking exceeded depth");
            }
        };
    };
}

}  // namespace provtrace
