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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "provtrace/collection.h"
#include "provtrace/rng.h"

namespace provtrace {

struct MutationConfig {
    double replace_prob = 0.2;
    std::size_t min_word_len_exclusive = 3;
    std::size_t min_count_exclusive = 2;
    std::size_t random_string_len = 8;
    std::uint64_t seed = 0;

    void
    validate() const;
};

/// What happened to one distinct word of the fragment.
struct WordDecision {
    std::string word;
    std::size_t count = 0;
    double draw = 0.0;
    bool eligible = false;
    bool replaced = false;
    std::string replacement;  // empty unless replaced
};

struct MutationResult {
    std::string text;
    std::vector<WordDecision> decisions;  // first-appearance order

    std::size_t
    replaced_count() const;
};

/// Frequent-word renaming. Distinct word tokens are visited in order of first
/// appearance and each draws U from the seeded generator; a word is renamed
/// when U <= replace_prob, it is longer than min_word_len_exclusive and it
/// occurs more than min_count_exclusive times. A renamed word has every
/// whole-token occurrence replaced by one fresh lowercase string. Everything
/// else in the fragment is preserved byte-for-byte.
MutationResult
replace_frequent_words(std::string_view fragment, const MutationConfig& cfg);

/// Same, drawing from a caller-owned generator (cfg.seed is ignored).
MutationResult
replace_frequent_words(std::string_view fragment, const MutationConfig& cfg, rng::Engine& engine);

struct CloneQuery {
    std::string id;
    std::string fragment;
    std::string source_doc_id;
    std::size_t window_tokens = 0;
    int clone_type = 1;
    std::uint64_t seed = 0;
    std::size_t start_token = 0;

    bool
    operator==(const CloneQuery&) const = default;
};

nlohmann::json
to_json(const CloneQuery& q);

CloneQuery
clone_query_from_json(const nlohmann::json& j);

struct QueryGenConfig {
    std::vector<std::size_t> grid{7, 15, 30, 60, 120, 240, 480};
    std::size_t per_size = 100;
    double type2_fraction = 0.5;
    std::uint64_t seed = 7;
    MutationConfig mutation;  // seed is replaced per query

    void
    validate() const;
};

struct QuerySet {
    std::vector<CloneQuery> queries;
    std::vector<std::size_t> skipped_sizes;  // no record has enough tokens
};

/// Samples (record, start token) pairs uniformly for every window size; a
/// type2_fraction share of each size, spread evenly, is mutated. Query i
/// uses a seed derived from cfg.seed and i alone, so the set is identical
/// across runs and independent of generation order.
QuerySet
make_queries(std::span<const CorpusRecord> records, const QueryGenConfig& cfg);

QuerySet
make_queries(const Collection& c, const QueryGenConfig& cfg);

void
write_queries_jsonl(std::ostream& out, std::span<const CloneQuery> queries);

/// Throws FormatError naming the line on malformed input.
std::vector<CloneQuery>
read_queries_jsonl(std::istream& in);

}  // namespace provtrace
