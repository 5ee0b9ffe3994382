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

#include "provtrace/mossidx.h"

#include <fmt/format.h>

#include <algorithm>
#include <istream>
#include <ostream>

#include "provtrace/binio.h"
#include "provtrace/error.h"

namespace provtrace {

void
MossConfig::validate() const {
    if (!(freq_threshold > 0.0 && freq_threshold <= 1.0)) {
        throw ConfigError(fmt::format("freq_threshold must be in (0, 1], got {}", freq_threshold));
    }
    if (budget < 1) {
        throw ConfigError("budget must be >= 1");
    }
    if (top_k < 1) {
        throw ConfigError("top_k must be >= 1");
    }
}

InvertedIndex::InvertedIndex() : postings_(kHashSpace) {
}

InvertedIndex
InvertedIndex::build(std::vector<std::pair<std::string, std::string>> docs, const WinnowConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<std::string, FingerprintSet>> fps;
    fps.reserve(docs.size());
    for (auto& [id, content] : docs) {
        fps.emplace_back(std::move(id), fingerprint(content, cfg));
    }
    return from_fingerprints(std::move(fps), cfg);
}

InvertedIndex
InvertedIndex::from_fingerprints(std::vector<std::pair<std::string, FingerprintSet>> docs,
                                 const WinnowConfig& cfg) {
    cfg.validate();
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < docs.size(); ++i) {
        if (docs[i].first == docs[i - 1].first) {
            throw DuplicateIdError(docs[i].first);
        }
    }

    InvertedIndex idx;
    idx.cfg_ = cfg;
    idx.doc_ids_.reserve(docs.size());
    idx.doc_fingerprints_.reserve(docs.size());
    for (auto& [id, fp] : docs) {
        auto ordinal = static_cast<DocOrdinal>(idx.doc_ids_.size());
        for (std::uint16_t h : fp.hashes) {
            idx.postings_[h].push_back(ordinal);
        }
        idx.doc_ids_.push_back(std::move(id));
        idx.doc_fingerprints_.push_back(std::move(fp));
    }
    idx.rebuild_lookup();
    return idx;
}

void
InvertedIndex::rebuild_lookup() {
    lookup_.clear();
    lookup_.reserve(doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        lookup_.emplace(doc_ids_[i], static_cast<DocOrdinal>(i));
    }
}

std::optional<DocOrdinal>
InvertedIndex::find(std::string_view id) const {
    auto it = lookup_.find(std::string(id));
    if (it == lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t
InvertedIndex::total_postings() const {
    std::size_t total = 0;
    for (const auto& list : postings_) {
        total += list.size();
    }
    return total;
}

void
InvertedIndex::save(std::ostream& out) const {
    binio::put_bytes(out, kMagic);
    binio::put<std::uint32_t>(out, kFormatVersion);
    binio::put<std::uint32_t>(out, cfg_.k);
    binio::put<std::uint32_t>(out, cfg_.w);
    binio::put<std::uint64_t>(out, doc_ids_.size());
    for (const auto& id : doc_ids_) {
        binio::put_string(out, id);
    }

    for (const auto& fp : doc_fingerprints_) {
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(fp.marks.size()));
        for (const auto& m : fp.marks) {
            binio::put<std::uint16_t>(out, m.hash);
            binio::put<std::uint32_t>(out, m.position);
        }
    }

    std::uint32_t non_empty = 0;
    for (const auto& list : postings_) {
        non_empty += list.empty() ? 0 : 1;
    }
    binio::put<std::uint32_t>(out, non_empty);
    for (std::size_t h = 0; h < postings_.size(); ++h) {
        if (postings_[h].empty()) {
            continue;
        }
        binio::put<std::uint16_t>(out, static_cast<std::uint16_t>(h));
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(postings_[h].size()));
        for (DocOrdinal d : postings_[h]) {
            binio::put<std::uint32_t>(out, d);
        }
    }
    if (!out) {
        throw Error("failed writing inverted index");
    }
}

InvertedIndex
InvertedIndex::load(std::istream& in, const std::optional<WinnowConfig>& expected) {
    binio::expect_magic(in, kMagic, "inverted index");
    auto version = binio::get<std::uint32_t>(in);
    if (version != kFormatVersion) {
        throw FormatError(fmt::format("inverted index: unsupported version {}", version));
    }
    InvertedIndex idx;
    idx.cfg_.k = binio::get<std::uint32_t>(in);
    idx.cfg_.w = binio::get<std::uint32_t>(in);
    idx.cfg_.validate();
    if (expected && !(*expected == idx.cfg_)) {
        throw ConfigError(fmt::format("inverted index built with k={} w={}, expected k={} w={}",
                                      idx.cfg_.k, idx.cfg_.w, expected->k, expected->w));
    }

    auto n = binio::get<std::uint64_t>(in);
    if (n > std::numeric_limits<DocOrdinal>::max()) {
        throw FormatError("inverted index: document count out of range");
    }
    idx.doc_ids_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        idx.doc_ids_.push_back(binio::get_string(in));
    }
    idx.doc_fingerprints_.resize(n);
    for (auto& fp : idx.doc_fingerprints_) {
        auto marks = binio::get<std::uint32_t>(in);
        fp.marks.reserve(marks);
        for (std::uint32_t m = 0; m < marks; ++m) {
            Fingerprint f;
            f.hash = binio::get<std::uint16_t>(in);
            f.position = binio::get<std::uint32_t>(in);
            fp.marks.push_back(f);
            fp.hashes.push_back(f.hash);
        }
        std::sort(fp.hashes.begin(), fp.hashes.end());
        fp.hashes.erase(std::unique(fp.hashes.begin(), fp.hashes.end()), fp.hashes.end());
    }

    auto lists = binio::get<std::uint32_t>(in);
    for (std::uint32_t l = 0; l < lists; ++l) {
        auto h = binio::get<std::uint16_t>(in);
        auto len = binio::get<std::uint32_t>(in);
        if (len > n) {
            throw FormatError("inverted index: posting list longer than document count");
        }
        auto& list = idx.postings_[h];
        list.reserve(len);
        for (std::uint32_t j = 0; j < len; ++j) {
            auto d = binio::get<std::uint32_t>(in);
            if (d >= n) {
                throw FormatError("inverted index: posting references unknown document");
            }
            list.push_back(d);
        }
    }
    idx.rebuild_lookup();
    if (idx.lookup_.size() != idx.doc_ids_.size()) {
        throw FormatError("inverted index: duplicate document ids");
    }
    return idx;
}

std::vector<std::string>
InvertedIndex::check_invariants() const {
    std::vector<std::string> problems;
    if (!std::is_sorted(doc_ids_.begin(), doc_ids_.end()) ||
        std::adjacent_find(doc_ids_.begin(), doc_ids_.end()) != doc_ids_.end()) {
        problems.emplace_back("document ids are not strictly ascending");
    }
    std::vector<std::vector<DocOrdinal>> expected(kHashSpace);
    for (std::size_t d = 0; d < doc_fingerprints_.size(); ++d) {
        for (std::uint16_t h : doc_fingerprints_[d].hashes) {
            expected[h].push_back(static_cast<DocOrdinal>(d));
        }
    }
    for (std::size_t h = 0; h < kHashSpace; ++h) {
        if (postings_[h] != expected[h]) {
            problems.push_back(fmt::format("posting list for hash {} disagrees with document fingerprints", h));
            if (problems.size() > 20) {
                break;
            }
        }
    }
    return problems;
}

void
sort_and_truncate(std::vector<ScoredDoc>& docs, std::size_t top_k) {
    auto before = [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.doc < b.doc;
    };
    if (top_k < docs.size()) {
        std::partial_sort(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(top_k), docs.end(), before);
        docs.resize(top_k);
    } else {
        std::sort(docs.begin(), docs.end(), before);
    }
}

std::vector<DocOrdinal>
moss_candidates(const InvertedIndex& idx,
                const FingerprintSet& query,
                const MossConfig& cfg,
                MossQueryStats* stats) {
    cfg.validate();
    const double limit = cfg.freq_threshold * static_cast<double>(idx.doc_count());

    std::vector<std::pair<std::size_t, std::uint16_t>> survivors;  // (df, hash)
    survivors.reserve(query.hashes.size());
    for (std::uint16_t h : query.hashes) {
        std::size_t df = idx.document_frequency(h);
        if (static_cast<double>(df) > limit) {
            continue;
        }
        survivors.emplace_back(df, h);
    }
    std::sort(survivors.begin(), survivors.end());

    std::size_t inspect = std::min(cfg.budget, survivors.size());
    std::vector<DocOrdinal> candidates;
    for (std::size_t i = 0; i < inspect; ++i) {
        auto list = idx.postings(survivors[i].second);
        candidates.insert(candidates.end(), list.begin(), list.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    if (stats != nullptr) {
        stats->query_hashes = query.hashes.size();
        stats->filtered_hashes = query.hashes.size() - survivors.size();
        stats->lists_inspected = inspect;
        stats->candidates = candidates.size();
    }
    return candidates;
}

std::vector<ScoredDoc>
moss_query(const InvertedIndex& idx,
           const FingerprintSet& query,
           const MossConfig& cfg,
           MossQueryStats* stats) {
    auto candidates = moss_candidates(idx, query, cfg, stats);
    std::vector<ScoredDoc> scored;
    scored.reserve(candidates.size());
    for (DocOrdinal d : candidates) {
        scored.push_back({d, jaccard(query, idx.fingerprints(d))});
    }
    sort_and_truncate(scored, cfg.top_k);
    return scored;
}

std::vector<ScoredDoc>
moss_query(const InvertedIndex& idx,
           std::string_view fragment,
           const MossConfig& cfg,
           const WinnowConfig& wcfg,
           MossQueryStats* stats) {
    if (!(wcfg == idx.config())) {
        throw ConfigError(fmt::format("query winnow config k={} w={} does not match index k={} w={}",
                                      wcfg.k, wcfg.w, idx.config().k, idx.config().w));
    }
    return moss_query(idx, fingerprint(fragment, wcfg), cfg, stats);
}

std::vector<ScoredDoc>
exhaustive_rank(const InvertedIndex& idx, const FingerprintSet& query, std::size_t top_k) {
    std::vector<ScoredDoc> scored;
    scored.reserve(idx.doc_count());
    for (std::size_t d = 0; d < idx.doc_count(); ++d) {
        auto ordinal = static_cast<DocOrdinal>(d);
        scored.push_back({ordinal, jaccard(query, idx.fingerprints(ordinal))});
    }
    sort_and_truncate(scored, top_k);
    return scored;
}

std::vector<ScoredDoc>
exhaustive_rank(const InvertedIndex& idx,
                std::string_view fragment,
                std::size_t top_k,
                const WinnowConfig& wcfg) {
    if (!(wcfg == idx.config())) {
        throw ConfigError("exhaustive_rank winnow config does not match index");
    }
    return exhaustive_rank(idx, fingerprint(fragment, wcfg), top_k);
}

}  // namespace provtrace
