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


#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "provtrace/clonegen.h"
#include "provtrace/collection.h"

namespace provtrace {

using Ranking = std::vector<std::string>;
using TruthSet = std::set<std::string>;

/// 1-based rank of the first id in `truth`, or nullopt.
std::optional<std::size_t>
first_relevant_rank(const Ranking& ranking, const TruthSet& truth);

/// Fraction of queries with a relevant id among the first n. Throws
/// std::invalid_argument on length mismatch or n == 0.
double
recall_at_n(std::span<const Ranking> rankings, std::span<const TruthSet> truths, std::size_t n);

/// Mean reciprocal rank of the first relevant id; misses count as 0.
double
mrr(std::span<const Ranking> rankings, std::span<const TruthSet> truths);

enum class Method { vector_only, winnowing, hybrid, exhaustive };

std::string_view
to_string(Method m);

/// Accepts "vector-only", "winnowing", "hybrid", "exhaustive"; throws
/// ConfigError otherwise.
Method
method_from_string(std::string_view name);

struct MetricCell {
    std::size_t corpus_size = 0;
    std::size_t window_tokens = 0;
    int clone_type = 1;
    Method method = Method::hybrid;
    std::map<std::size_t, double> recall_at;
    double mrr = 0.0;
    std::size_t query_count = 0;

    bool
    operator==(const MetricCell&) const = default;
};

struct MetricReport {
    std::vector<MetricCell> cells;  // sorted by (window, clone type, method)

    const MetricCell*
    find(std::size_t window_tokens, int clone_type, Method method) const;

    nlohmann::json
    to_json() const;

    /// Aligned-column text table, one row per cell.
    std::string
    to_table() const;

    bool
    operator==(const MetricReport&) const = default;
};

struct GridOptions {
    std::vector<Method> methods{Method::vector_only, Method::winnowing, Method::hybrid};
    std::vector<std::size_t> cutoffs{1, 10, 100};
    std::size_t candidates = 100;  // hybrid stage-1 size
    std::optional<MossConfig> moss;  // winnowing override; collection config otherwise

    std::size_t
    depth() const;
};

/// Ranked ids for one fragment, at most opts.depth() long.
Ranking
rank_with(const Collection& c, Method method, std::string_view fragment, const GridOptions& opts);

/// Runs every method over every query and aggregates per (window, clone
/// type, method). Throws ConfigError if a query names an unknown document.
MetricReport
run_grid(const Collection& c, std::span<const CloneQuery> queries, const GridOptions& opts);

struct LatencySample {
    std::size_t n = 0;
    double mean_seconds = 0.0;
    std::size_t queries = 0;
};

struct LatencyFit {
    std::vector<LatencySample> samples;
    double a = 0.0;
    double b = 0.0;
    double r2 = 0.0;

    nlohmann::json
    to_json() const;

    /// "n,mean_seconds,queries" rows with a header line.
    std::string
    to_csv() const;
};

/// Least squares of log T = log a + b log N. Needs at least two samples
/// with strictly increasing N and positive times; throws ConfigError
/// otherwise.
LatencyFit
fit_power_law(std::span<const LatencySample> samples);

/// Runs query `i` of the prepared workload.
using QueryRunner = std::function<void(std::size_t i)>;
/// Prepares the workload for corpus size N. Preparation is not timed.
using RunnerFactory = std::function<QueryRunner(std::size_t n)>;

/// For each size: build, run `warmup` untimed queries, then time
/// `queries_per_size` queries one at a time and record the mean.
LatencyFit
bench_latency(const RunnerFactory& factory,
              std::span<const std::size_t> sizes,
              std::size_t queries_per_size,
              std::size_t warmup = 10);

/// Factory for the built-in methods over a generated corpus. Each size
/// ingests corpus(N) under `cfg` and queries with 60-token windows drawn
/// by make_queries. The exhaustive method builds only the fingerprint
/// index, since it never touches the graph.
RunnerFactory
collection_runner_factory(std::function<std::vector<CorpusRecord>(std::size_t n)> corpus,
                          CollectionConfig cfg,
                          Method method,
                          std::size_t queries,
                          GridOptions opts = {},
                          std::uint64_t seed = 11);

}  // namespace provtrace
