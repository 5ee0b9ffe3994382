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


#include "provtrace/clonegen.h"

#include <fmt/format.h>

#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "provtrace/canon.h"
#include "provtrace/error.h"

namespace provtrace {

void
MutationConfig::validate() const {
    if (!(replace_prob >= 0.0 && replace_prob <= 1.0)) {
        throw ConfigError(fmt::format("replace_prob must be in [0, 1], got {}", replace_prob));
    }
    if (random_string_len == 0) {
        throw ConfigError("random_string_len must be positive");
    }
}

std::size_t
MutationResult::replaced_count() const {
    std::size_t n = 0;
    for (const auto& d : decisions) {
        n += d.replaced ? 1 : 0;
    }
    return n;
}

MutationResult
replace_frequent_words(std::string_view fragment, const MutationConfig& cfg) {
    rng::Engine engine(cfg.seed);
    return replace_frequent_words(fragment, cfg, engine);
}

MutationResult
replace_frequent_words(std::string_view fragment, const MutationConfig& cfg, rng::Engine& engine) {
    cfg.validate();
    TokenStream ts = tokenize(fragment);

    MutationResult result;
    std::unordered_map<std::string_view, std::size_t> slot;
    for (const auto& t : ts.tokens) {
        if (t.kind != TokenKind::word) {
            continue;
        }
        auto [it, fresh] = slot.try_emplace(t.text, result.decisions.size());
        if (fresh) {
            WordDecision d;
            d.word = t.text;
            result.decisions.push_back(std::move(d));
        }
        ++result.decisions[it->second].count;
    }

    for (auto& d : result.decisions) {
        d.draw = rng::uniform01(engine);
        d.eligible = d.word.size() > cfg.min_word_len_exclusive && d.count > cfg.min_count_exclusive;
        if (d.draw <= cfg.replace_prob && d.eligible) {
            d.replaced = true;
            d.replacement.resize(cfg.random_string_len);
            for (auto& ch : d.replacement) {
                ch = static_cast<char>('a' + rng::uniform_index(engine, 26));
            }
        }
    }

    std::string& out = result.text;
    out.reserve(fragment.size());
    std::size_t cursor = 0;
    for (const auto& t : ts.tokens) {
        if (t.kind != TokenKind::word) {
            continue;
        }
        const auto& d = result.decisions[slot.at(t.text)];
        if (!d.replaced) {
            continue;
        }
        out.append(fragment.substr(cursor, t.offset - cursor));
        out.append(d.replacement);
        cursor = t.end();
    }
    out.append(fragment.substr(cursor));
    return result;
}

// ---------------------------------------------------------------------------

nlohmann::json
to_json(const CloneQuery& q) {
    return nlohmann::json{{"id", q.id},
                          {"source_doc_id", q.source_doc_id},
                          {"window_tokens", q.window_tokens},
                          {"clone_type", q.clone_type},
                          {"seed", q.seed},
                          {"start_token", q.start_token},
                          {"fragment", q.fragment}};
}

CloneQuery
clone_query_from_json(const nlohmann::json& j) {
    try {
        CloneQuery q;
        q.id = j.at("id").get<std::string>();
        q.source_doc_id = j.at("source_doc_id").get<std::string>();
        q.window_tokens = j.at("window_tokens").get<std::size_t>();
        q.clone_type = j.at("clone_type").get<int>();
        q.seed = j.at("seed").get<std::uint64_t>();
        q.start_token = j.value("start_token", std::size_t{0});
        q.fragment = j.at("fragment").get<std::string>();
        if (q.clone_type != 1 && q.clone_type != 2) {
            throw FormatError(fmt::format("query '{}': clone_type must be 1 or 2", q.id));
        }
        return q;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("malformed query: {}", e.what()));
    }
}

void
QueryGenConfig::validate() const {
    if (!(type2_fraction >= 0.0 && type2_fraction <= 1.0)) {
        throw ConfigError(fmt::format("type2_fraction must be in [0, 1], got {}", type2_fraction));
    }
    for (auto w : grid) {
        if (w == 0) {
            throw ConfigError("window sizes must be positive");
        }
    }
    mutation.validate();
}

QuerySet
make_queries(std::span<const CorpusRecord> records, const QueryGenConfig& cfg) {
    cfg.validate();
    QuerySet set;
    if (cfg.per_size == 0) {
        return set;
    }

    // Only counts are kept for the whole corpus; a sampled record is
    // re-tokenized when its window is cut.
    std::vector<std::size_t> token_counts;
    token_counts.reserve(records.size());
    for (const auto& r : records) {
        token_counts.push_back(tokenize(r.content).size());
    }

    std::uint64_t serial = 0;
    for (std::size_t size : cfg.grid) {
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < token_counts.size(); ++i) {
            if (token_counts[i] >= size) {
                eligible.push_back(i);
            }
        }
        if (eligible.empty()) {
            set.skipped_sizes.push_back(size);
            continue;
        }
        for (std::size_t j = 0; j < cfg.per_size; ++j, ++serial) {
            CloneQuery q;
            q.seed = rng::derive_seed(cfg.seed, serial);
            rng::Engine engine(q.seed);
            std::size_t doc = eligible[rng::uniform_index(engine, eligible.size())];
            const TokenStream ts = tokenize(records[doc].content);
            q.start_token = rng::uniform_index(engine, ts.size() - size + 1);
            q.window_tokens = size;
            q.source_doc_id = records[doc].id;
            q.fragment = extract_window(ts, q.start_token, size);
            q.id = fmt::format("w{}-{:05}", size, j);

            auto before = static_cast<std::size_t>(std::floor(static_cast<double>(j) * cfg.type2_fraction));
            auto after = static_cast<std::size_t>(std::floor(static_cast<double>(j + 1) * cfg.type2_fraction));
            if (after > before) {
                q.clone_type = 2;
                MutationConfig m = cfg.mutation;
                m.seed = rng::derive_seed(q.seed, 1);
                q.fragment = replace_frequent_words(q.fragment, m).text;
            }
            set.queries.push_back(std::move(q));
        }
    }
    return set;
}

QuerySet
make_queries(const Collection& c, const QueryGenConfig& cfg) {
    return make_queries(std::span<const CorpusRecord>(c.records()), cfg);
}

void
write_queries_jsonl(std::ostream& out, std::span<const CloneQuery> queries) {
    for (const auto& q : queries) {
        out << to_json(q).dump() << '\n';
    }
}

std::vector<CloneQuery>
read_queries_jsonl(std::istream& in) {
    std::vector<CloneQuery> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(clone_query_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(fmt::format("queries line {}: {}", lineno, e.what()));
        } catch (const FormatError& e) {
            throw FormatError(fmt::format("queries line {}: {}", lineno, e.what()));
        }
    }
    return out;
}

}  // namespace provtrace
