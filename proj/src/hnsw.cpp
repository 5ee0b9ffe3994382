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

#include "provtrace/hnsw.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>

#include "provtrace/binio.h"
#include "provtrace/error.h"

namespace provtrace {

namespace {

// Per-thread visited marks; bumping the epoch clears them in O(1), so a
// search does not pay O(N) to reset state.
class VisitedSet {
public:
    void
    reset(std::size_t n) {
        if (marks_.size() < n) {
            marks_.resize(n, 0);
        }
        if (++epoch_ == 0) {
            std::fill(marks_.begin(), marks_.end(), 0);
            epoch_ = 1;
        }
    }

    /// Returns true the first time `n` is seen since the last reset.
    bool
    insert(NodeId n) {
        if (marks_[n] == epoch_) {
            return false;
        }
        marks_[n] = epoch_;
        return true;
    }

private:
    std::vector<std::uint32_t> marks_;
    std::uint32_t epoch_ = 0;
};

VisitedSet&
thread_visited() {
    thread_local VisitedSet v;
    return v;
}

}  // namespace

double
HnswConfig::level_scale() const {
    return 1.0 / std::log(static_cast<double>(M));
}

void
HnswConfig::validate() const {
    if (M < 2) {
        throw ConfigError(fmt::format("HNSW M must be >= 2, got {}", M));
    }
    if (ef_construction < M) {
        throw ConfigError(fmt::format("HNSW ef_construction ({}) must be >= M ({})", ef_construction, M));
    }
    if (ef_search < 1) {
        throw ConfigError("HNSW ef_search must be >= 1");
    }
}

HnswIndex::HnswIndex(std::uint32_t dim, const HnswConfig& cfg)
    : dim_(dim), cfg_(cfg), level_scale_(cfg.level_scale()), rng_(cfg.seed) {
    cfg_.validate();
    if (dim_ < 1) {
        throw ConfigError("HNSW dimension must be >= 1");
    }
}

int
HnswIndex::draw_level() {
    // U uniform in (0, 1), built from 53 random bits so the draw does not
    // depend on the standard library's distribution implementation.
    double u = (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
    return static_cast<int>(std::floor(-std::log(u) * level_scale_));
}

float
HnswIndex::distance(const float* q, NodeId n) const {
    return 1.0f - dot(q, data_.data() + static_cast<std::size_t>(n) * dim_, dim_);
}

std::optional<NodeId>
HnswIndex::find(std::string_view id) const {
    auto it = lookup_.find(std::string(id));
    if (it == lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<HnswIndex::Candidate>
HnswIndex::search_layer(const float* q, const std::vector<Candidate>& entry, std::size_t ef, int level) const {
    auto& visited = thread_visited();
    visited.reset(labels_.size());

    // candidates: closest first; results: farthest first, capped at ef
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> candidates;
    std::priority_queue<Candidate> results;
    for (const auto& c : entry) {
        if (visited.insert(c.second)) {
            candidates.push(c);
            results.push(c);
        }
    }
    while (results.size() > ef) {
        results.pop();
    }

    while (!candidates.empty()) {
        Candidate current = candidates.top();
        if (results.size() >= ef && current > results.top()) {
            break;
        }
        candidates.pop();
        for (NodeId nb : links_[current.second][static_cast<std::size_t>(level)]) {
            if (!visited.insert(nb)) {
                continue;
            }
            Candidate c{distance(q, nb), nb};
            if (results.size() < ef || c < results.top()) {
                candidates.push(c);
                results.push(c);
                if (results.size() > ef) {
                    results.pop();
                }
            }
        }
    }

    std::vector<Candidate> out(results.size());
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = results.top();
        results.pop();
    }
    return out;
}

void
HnswIndex::shrink(NodeId n, int level, std::size_t limit) {
    auto& list = links_[n][static_cast<std::size_t>(level)];
    const float* base = data_.data() + static_cast<std::size_t>(n) * dim_;
    std::vector<Candidate> scored;
    scored.reserve(list.size());
    for (NodeId nb : list) {
        scored.emplace_back(distance(base, nb), nb);
    }
    std::sort(scored.begin(), scored.end());
    list.clear();
    for (std::size_t i = 0; i < limit && i < scored.size(); ++i) {
        list.push_back(scored[i].second);
    }
}

void
HnswIndex::insert(std::string id, const Embedding& e) {
    if (e.dim() != dim_) {
        throw DimensionError(fmt::format("cannot insert {}-dim vector '{}' into {}-dim graph", e.dim(), id, dim_));
    }
    if (e.zero) {
        throw ConfigError(fmt::format("zero-flagged embedding '{}' cannot be indexed", id));
    }
    if (lookup_.contains(id)) {
        throw DuplicateIdError(id);
    }

    const auto node = static_cast<NodeId>(labels_.size());
    const int level = draw_level();
    data_.insert(data_.end(), e.values.begin(), e.values.end());
    lookup_.emplace(id, node);
    labels_.push_back(std::move(id));
    levels_.push_back(level);
    links_.emplace_back(static_cast<std::size_t>(level) + 1);

    if (entry_ == kNoNode) {
        entry_ = node;
        max_level_ = level;
        return;
    }

    const float* q = data_.data() + static_cast<std::size_t>(node) * dim_;
    std::vector<Candidate> eps{{distance(q, entry_), entry_}};
    for (int l = max_level_; l > level; --l) {
        eps = search_layer(q, eps, 1, l);
    }

    for (int l = std::min(level, max_level_); l >= 0; --l) {
        auto found = search_layer(q, eps, cfg_.ef_construction, l);
        const std::size_t limit = limit_for(l);
        auto& mine = links_[node][static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < found.size() && i < limit; ++i) {
            NodeId nb = found[i].second;
            mine.push_back(nb);
            auto& theirs = links_[nb][static_cast<std::size_t>(l)];
            theirs.push_back(node);
            if (theirs.size() > limit) {
                shrink(nb, l, limit);
            }
        }
        eps = std::move(found);
    }

    if (level > max_level_) {
        entry_ = node;
        max_level_ = level;
    }
}

HnswIndex
HnswIndex::build(std::vector<std::pair<std::string, Embedding>> items, std::uint32_t dim, const HnswConfig& cfg) {
    HnswIndex index(dim, cfg);
    index.data_.reserve(items.size() * dim);
    for (auto& [id, e] : items) {
        index.insert(std::move(id), e);
    }
    return index;
}

std::vector<HnswHit>
HnswIndex::search(const Embedding& query, std::size_t k, std::optional<std::size_t> ef) const {
    if (query.zero) {
        return {};
    }
    return search(std::span<const float>(query.values), k, ef);
}

std::vector<HnswHit>
HnswIndex::search(std::span<const float> query, std::size_t k, std::optional<std::size_t> ef) const {
    if (query.size() != dim_) {
        throw DimensionError(fmt::format("query has {} dimensions, graph has {}", query.size(), dim_));
    }
    if (entry_ == kNoNode || k == 0) {
        return {};
    }
    const float* q = query.data();
    std::vector<Candidate> eps{{distance(q, entry_), entry_}};
    for (int l = max_level_; l > 0; --l) {
        eps = search_layer(q, eps, 1, l);
    }
    const std::size_t beam = std::max<std::size_t>(ef.value_or(cfg_.ef_search), k);
    auto found = search_layer(q, eps, beam, 0);

    std::vector<HnswHit> hits;
    hits.reserve(found.size());
    for (const auto& [d, n] : found) {
        hits.push_back({n, dot(q, data_.data() + static_cast<std::size_t>(n) * dim_, dim_)});
    }
    std::sort(hits.begin(), hits.end(), [&](const HnswHit& a, const HnswHit& b) {
        if (a.cosine != b.cosine) {
            return a.cosine > b.cosine;
        }
        return labels_[a.node] < labels_[b.node];
    });
    if (hits.size() > k) {
        hits.resize(k);
    }
    return hits;
}

void
HnswIndex::save_graph(std::ostream& out) const {
    binio::put_bytes(out, kMagic);
    binio::put<std::uint32_t>(out, kFormatVersion);
    binio::put<std::uint32_t>(out, dim_);
    binio::put<std::uint32_t>(out, cfg_.M);
    binio::put<std::uint32_t>(out, cfg_.ef_construction);
    binio::put<std::uint32_t>(out, cfg_.ef_search);
    binio::put<std::uint64_t>(out, cfg_.seed);
    binio::put<std::uint64_t>(out, labels_.size());
    binio::put<std::uint32_t>(out, entry_);
    binio::put<std::int32_t>(out, max_level_);

    for (std::size_t n = 0; n < labels_.size(); ++n) {
        binio::put_string(out, labels_[n]);
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(levels_[n]));
    }
    for (const auto& per_level : links_) {
        for (const auto& list : per_level) {
            binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(list.size()));
            for (NodeId nb : list) {
                binio::put<std::uint32_t>(out, nb);
            }
        }
    }
    if (!out) {
        throw Error("failed writing HNSW graph");
    }
}

HnswIndex
HnswIndex::load_graph(std::istream& in, const VectorLookup& lookup) {
    binio::expect_magic(in, kMagic, "HNSW graph");
    auto version = binio::get<std::uint32_t>(in);
    if (version != kFormatVersion) {
        throw FormatError(fmt::format("HNSW graph: unsupported version {}", version));
    }
    auto dim = binio::get<std::uint32_t>(in);
    HnswConfig cfg;
    cfg.M = binio::get<std::uint32_t>(in);
    cfg.ef_construction = binio::get<std::uint32_t>(in);
    cfg.ef_search = binio::get<std::uint32_t>(in);
    cfg.seed = binio::get<std::uint64_t>(in);
    HnswIndex index(dim, cfg);

    auto n = binio::get<std::uint64_t>(in);
    if (n >= kNoNode) {
        throw FormatError("HNSW graph: node count out of range");
    }
    auto entry = binio::get<std::uint32_t>(in);
    auto stored_top = binio::get<std::int32_t>(in);

    index.labels_.reserve(n);
    index.levels_.reserve(n);
    index.data_.reserve(n * dim);
    for (std::uint64_t i = 0; i < n; ++i) {
        auto label = binio::get_string(in);
        auto level = binio::get<std::uint32_t>(in);
        if (level > 64) {
            throw FormatError(fmt::format("HNSW graph: node '{}' has implausible level {}", label, level));
        }
        auto v = lookup(label);
        if (v.size() != dim) {
            throw DimensionError(fmt::format("HNSW graph: vector for '{}' has {} dimensions, expected {}",
                                             label, v.size(), dim));
        }
        index.data_.insert(index.data_.end(), v.begin(), v.end());
        if (!index.lookup_.emplace(label, static_cast<NodeId>(i)).second) {
            throw FormatError(fmt::format("HNSW graph: duplicate node '{}'", label));
        }
        index.labels_.push_back(std::move(label));
        index.levels_.push_back(static_cast<int>(level));
    }
    index.links_.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        index.links_[i].resize(static_cast<std::size_t>(index.levels_[i]) + 1);
        for (auto& list : index.links_[i]) {
            auto count = binio::get<std::uint32_t>(in);
            if (count > n) {
                throw FormatError("HNSW graph: adjacency list longer than node count");
            }
            list.reserve(count);
            for (std::uint32_t j = 0; j < count; ++j) {
                auto nb = binio::get<std::uint32_t>(in);
                if (nb >= n) {
                    throw FormatError("HNSW graph: link to unknown node");
                }
                list.push_back(nb);
            }
        }
    }

    int top = -1;
    for (int l : index.levels_) {
        top = std::max(top, l);
    }
    if (n == 0) {
        if (entry != kNoNode) {
            throw FormatError("HNSW graph: empty graph with an entry point");
        }
    } else if (entry >= n || index.levels_[entry] != top || stored_top != top) {
        throw FormatError("HNSW graph: entry point is not on the top level");
    }
    index.entry_ = n == 0 ? kNoNode : entry;
    index.max_level_ = top;
    // Continue the level sequence where the original build left off.
    index.rng_.discard(n);
    return index;
}

std::vector<std::string>
HnswIndex::check_invariants() const {
    std::vector<std::string> problems;
    auto report = [&](std::string msg) {
        if (problems.size() < 50) {
            problems.push_back(std::move(msg));
        }
    };

    int top = -1;
    for (std::size_t n = 0; n < labels_.size(); ++n) {
        top = std::max(top, levels_[n]);
        if (links_[n].size() != static_cast<std::size_t>(levels_[n]) + 1) {
            report(fmt::format("node '{}' has {} adjacency levels for level {}", labels_[n], links_[n].size(),
                               levels_[n]));
            continue;
        }
        for (int l = 0; l <= levels_[n]; ++l) {
            const auto& list = links_[n][static_cast<std::size_t>(l)];
            if (list.size() > limit_for(l)) {
                report(fmt::format("node '{}' layer {} degree {} exceeds {}", labels_[n], l, list.size(),
                                   limit_for(l)));
            }
            for (NodeId nb : list) {
                if (nb >= labels_.size()) {
                    report(fmt::format("node '{}' layer {} links to missing node {}", labels_[n], l, nb));
                } else if (levels_[nb] < l) {
                    report(fmt::format("node '{}' layer {} links to '{}' whose level is {}", labels_[n], l,
                                       labels_[nb], levels_[nb]));
                } else if (nb == n) {
                    report(fmt::format("node '{}' links to itself on layer {}", labels_[n], l));
                }
            }
        }
    }

    if (labels_.empty()) {
        if (entry_ != kNoNode) {
            report("empty graph has an entry point");
        }
        return problems;
    }
    if (entry_ >= labels_.size() || levels_[entry_] != top || max_level_ != top) {
        report("entry point is not a node on the top level");
        return problems;
    }

    return problems;
}

std::size_t
HnswIndex::count_unreachable() const {
    if (labels_.empty()) {
        return 0;
    }
    std::vector<char> seen(labels_.size(), 0);
    std::vector<NodeId> stack{entry_};
    seen[entry_] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        NodeId n = stack.back();
        stack.pop_back();
        for (NodeId nb : links_[n][0]) {
            if (nb < labels_.size() && !seen[nb]) {
                seen[nb] = 1;
                ++reached;
                stack.push_back(nb);
            }
        }
    }
    return labels_.size() - reached;
}

}  // namespace provtrace
