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
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "provtrace/winnow.h"

namespace provtrace {

/// Ordinal of a document inside an InvertedIndex. Ordinals follow ascending
/// lexicographic doc id order, so comparing ordinals compares ids.
using DocOrdinal = std::uint32_t;

struct MossConfig {
    static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

    double freq_threshold = 0.005;  // drop hashes in more than this fraction of docs
    std::size_t budget = 64;        // posting lists consumed per query
    std::size_t top_k = 10;

    void
    validate() const;
};

struct ScoredDoc {
    DocOrdinal doc = 0;
    double score = 0.0;

    bool
    operator==(const ScoredDoc&) const = default;
};

struct MossQueryStats {
    std::size_t query_hashes = 0;
    std::size_t filtered_hashes = 0;
    std::size_t lists_inspected = 0;
    std::size_t candidates = 0;
};

/// Fingerprint hash -> posting list of documents, plus each document's full
/// FingerprintSet for re-ranking. Immutable once built; concurrent queries
/// need no synchronization.
class InvertedIndex {
public:
    static constexpr std::string_view kMagic = "MOSSIDX1";
    static constexpr std::uint32_t kFormatVersion = 1;
    static constexpr std::size_t kHashSpace = 1u << 16;

    InvertedIndex();

    /// Fingerprints and indexes each (id, content) pair. Throws
    /// DuplicateIdError naming the first repeated id.
    static InvertedIndex
    build(std::vector<std::pair<std::string, std::string>> docs, const WinnowConfig& cfg);

    /// Indexes precomputed fingerprint sets (which must come from `cfg`).
    static InvertedIndex
    from_fingerprints(std::vector<std::pair<std::string, FingerprintSet>> docs,
                      const WinnowConfig& cfg);

    std::size_t
    doc_count() const {
        return doc_ids_.size();
    }

    const WinnowConfig&
    config() const {
        return cfg_;
    }

    std::span<const DocOrdinal>
    postings(std::uint16_t hash) const {
        return postings_[hash];
    }

    std::size_t
    document_frequency(std::uint16_t hash) const {
        return postings_[hash].size();
    }

    const FingerprintSet&
    fingerprints(DocOrdinal doc) const {
        return doc_fingerprints_.at(doc);
    }

    const std::string&
    doc_id(DocOrdinal doc) const {
        return doc_ids_.at(doc);
    }

    const std::vector<std::string>&
    doc_ids() const {
        return doc_ids_;
    }

    std::optional<DocOrdinal>
    find(std::string_view id) const;

    std::size_t
    total_postings() const;

    void
    save(std::ostream& out) const;

    /// Validates magic, version, and (when given) that the stored winnow
    /// config equals `expected`.
    static InvertedIndex
    load(std::istream& in, const std::optional<WinnowConfig>& expected = std::nullopt);

    /// Empty when every InvertedIndex invariant holds, otherwise one line per
    /// violation.
    std::vector<std::string>
    check_invariants() const;

private:
    void
    rebuild_lookup();

    WinnowConfig cfg_;
    std::vector<std::string> doc_ids_;
    std::vector<FingerprintSet> doc_fingerprints_;
    std::vector<std::vector<DocOrdinal>> postings_;
    std::unordered_map<std::string, DocOrdinal> lookup_;
};

/// Budgeted candidate generation: drop hashes whose document frequency
/// exceeds freq_threshold * doc_count, order the rest rarest-first (ties by
/// hash value) and union the first `budget` posting lists. Sorted ascending.
std::vector<DocOrdinal>
moss_candidates(const InvertedIndex& idx,
                const FingerprintSet& query,
                const MossConfig& cfg,
                MossQueryStats* stats = nullptr);

/// moss_candidates followed by exact-Jaccard re-ranking; top_k by score
/// descending, ties by ascending doc id.
std::vector<ScoredDoc>
moss_query(const InvertedIndex& idx,
           const FingerprintSet& query,
           const MossConfig& cfg,
           MossQueryStats* stats = nullptr);

/// Fingerprints `fragment` with `wcfg` and runs moss_query. Throws
/// ConfigError when `wcfg` differs from the index's config.
std::vector<ScoredDoc>
moss_query(const InvertedIndex& idx,
           std::string_view fragment,
           const MossConfig& cfg,
           const WinnowConfig& wcfg,
           MossQueryStats* stats = nullptr);

/// Jaccard against every document with no filtering or budget. Same order
/// as moss_query.
std::vector<ScoredDoc>
exhaustive_rank(const InvertedIndex& idx, const FingerprintSet& query, std::size_t top_k);

std::vector<ScoredDoc>
exhaustive_rank(const InvertedIndex& idx,
                std::string_view fragment,
                std::size_t top_k,
                const WinnowConfig& wcfg);

/// Sorts by score descending then ordinal ascending and truncates to top_k.
void
sort_and_truncate(std::vector<ScoredDoc>& docs, std::size_t top_k);

}  // namespace provtrace
