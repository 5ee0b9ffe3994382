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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "provtrace/embed.h"

namespace provtrace {

struct HnswConfig {
    std::uint32_t M = 16;  // neighbors per node above layer 0; layer 0 allows 2M
    std::uint32_t ef_construction = 200;
    std::uint32_t ef_search = 128;
    std::uint64_t seed = 42;

    /// mL = 1 / ln(M)
    double
    level_scale() const;

    void
    validate() const;
};

using NodeId = std::uint32_t;

struct HnswHit {
    NodeId node = 0;
    float cosine = 0.0f;
};

/**
 * Hierarchical navigable small world graph over unit vectors, distance
 * 1 - dot. Nodes are labelled with document ids.
 *
 * Construction is single-writer and fully determined by the config seed and
 * insertion order. A graph that is no longer being modified can be searched
 * from any number of threads without locking.
 */
class HnswIndex {
public:
    static constexpr std::string_view kMagic = "HNSWG1";
    static constexpr std::uint32_t kFormatVersion = 1;
    static constexpr NodeId kNoNode = 0xFFFFFFFFu;

    HnswIndex(std::uint32_t dim, const HnswConfig& cfg);

    /// Throws DuplicateIdError, DimensionError, or ConfigError for a
    /// zero-flagged embedding.
    void
    insert(std::string id, const Embedding& e);

    /// Sequential insert in input order.
    static HnswIndex
    build(std::vector<std::pair<std::string, Embedding>> items, std::uint32_t dim, const HnswConfig& cfg);

    /// k best by cosine descending, ties by ascending id. Beam width is
    /// max(ef, k), with ef defaulting to the config's ef_search. Empty for an
    /// empty graph or a zero-flagged query.
    std::vector<HnswHit>
    search(const Embedding& query, std::size_t k, std::optional<std::size_t> ef = std::nullopt) const;

    std::vector<HnswHit>
    search(std::span<const float> query, std::size_t k, std::optional<std::size_t> ef = std::nullopt) const;

    std::size_t
    size() const {
        return labels_.size();
    }

    bool
    empty() const {
        return labels_.empty();
    }

    std::uint32_t
    dim() const {
        return dim_;
    }

    const HnswConfig&
    config() const {
        return cfg_;
    }

    NodeId
    entry_point() const {
        return entry_;
    }

    int
    max_level() const {
        return max_level_;
    }

    const std::string&
    label(NodeId n) const {
        return labels_.at(n);
    }

    int
    level(NodeId n) const {
        return levels_.at(n);
    }

    std::span<const float>
    vector(NodeId n) const {
        return {data_.data() + static_cast<std::size_t>(n) * dim_, dim_};
    }

    const std::vector<NodeId>&
    neighbors(NodeId n, int level) const {
        return links_.at(n).at(static_cast<std::size_t>(level));
    }

    std::optional<NodeId>
    find(std::string_view id) const;

    /// Header, node table and adjacency blocks. Vectors are not written;
    /// they are supplied again on load.
    void
    save_graph(std::ostream& out) const;

    using VectorLookup = std::function<std::span<const float>(const std::string& id)>;

    /// Validates the header, takes each node's vector from `lookup` and
    /// checks that the entry point sits on the top level.
    static HnswIndex
    load_graph(std::istream& in, const VectorLookup& lookup);

    /// Empty when degree bounds, link validity and the entry point invariant
    /// hold.
    std::vector<std::string>
    check_invariants() const;

    /// Nodes not reachable from the entry point over layer-0 links. Pruning
    /// can strand a few nodes in large graphs, so this is a diagnostic.
    std::size_t
    count_unreachable() const;

private:
    using Candidate = std::pair<float, NodeId>;  // (distance, node)

    int
    draw_level();

    float
    distance(const float* q, NodeId n) const;

    std::vector<Candidate>
    search_layer(const float* q, const std::vector<Candidate>& entry, std::size_t ef, int level) const;

    void
    shrink(NodeId n, int level, std::size_t limit);

    std::size_t
    limit_for(int level) const {
        return level == 0 ? 2 * static_cast<std::size_t>(cfg_.M) : cfg_.M;
    }

    std::uint32_t dim_;
    HnswConfig cfg_;
    double level_scale_;
    std::mt19937_64 rng_;

    std::vector<float> data_;
    std::vector<std::string> labels_;
    std::vector<int> levels_;
    std::vector<std::vector<std::vector<NodeId>>> links_;  // [node][level]
    std::unordered_map<std::string, NodeId> lookup_;
    NodeId entry_ = kNoNode;
    int max_level_ = -1;
};

}  // namespace provtrace
