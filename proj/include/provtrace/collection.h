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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "provtrace/embed.h"
#include "provtrace/hnsw.h"
#include "provtrace/mossidx.h"
#include "provtrace/winnow.h"

namespace provtrace {

/// One source snippet and its provenance metadata.
struct CorpusRecord {
    std::string id;
    std::string content;
    std::optional<std::string> author;
    std::optional<std::string> license;
    std::optional<std::string> origin;

    bool
    operator==(const CorpusRecord&) const = default;
};

struct RecordReject {
    std::size_t line = 0;  // 1-based line in the corpus file, 0 if not from a file
    std::string id;
    std::string reason;
};

struct CorpusLoad {
    std::vector<CorpusRecord> records;
    std::vector<RecordReject> rejects;
};

nlohmann::json
to_json(const CorpusRecord& r);

/// Parses one corpus object; throws FormatError on missing/mistyped fields.
CorpusRecord
record_from_json(const nlohmann::json& j);

/// JSON-lines corpus: one object per line with `id`, `content` and optional
/// `author`, `license`, `origin`. Lines that fail to parse become rejects.
CorpusLoad
read_corpus_jsonl(std::istream& in);

/// Throws FormatError naming the path if it cannot be opened.
CorpusLoad
read_corpus_file(const std::filesystem::path& path);

void
write_corpus_jsonl(std::ostream& out, std::span<const CorpusRecord> records);

struct CollectionConfig {
    WinnowConfig wcfg;
    EmbedderSpec embedder;  // embedder.wcfg is forced to wcfg
    HnswConfig hnsw;
    MossConfig moss;

    void
    validate() const;
};

nlohmann::json
to_json(const CollectionConfig& cfg);

CollectionConfig
collection_config_from_json(const nlohmann::json& j);

struct IngestReport {
    std::size_t submitted = 0;
    std::size_t indexed = 0;
    std::vector<RecordReject> rejects;
    std::vector<std::string> zero_embedding_ids;

    nlohmann::json
    to_json() const;
};

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;  // equals jaccard; the final ordering key
    double cosine = 0.0;
    double jaccard = 0.0;
    std::optional<std::string> author;
    std::optional<std::string> license;
    std::optional<std::string> origin;
};

struct QueryEcho {
    std::size_t candidates = 0;
    std::size_t top_k = 0;
    std::size_t fragment_bytes = 0;
    std::size_t fragment_fingerprints = 0;
    std::size_t stage1_hits = 0;
    bool fallback = false;  // zero embedding: answered by the budgeted fingerprint query
};

struct RankedResult {
    std::vector<RankedEntry> entries;
    QueryEcho query;
    double stage1_ms = 0.0;
    double stage2_ms = 0.0;
};

/**
 * Snippets, metadata, fingerprint index and vector graph for one corpus.
 *
 * Records are kept in ascending id order; record i is document ordinal i of
 * the fingerprint index. Every record is in the graph unless its embedding
 * is zero-flagged. A built or loaded collection is immutable and trace() may
 * be called from any number of threads.
 */
class Collection {
public:
    static constexpr int kFormatVersion = 1;
    static constexpr std::string_view kManifestFile = "manifest.json";
    static constexpr std::string_view kRecordsFile = "records.jsonl";
    static constexpr std::string_view kMossFile = "moss.idx";
    static constexpr std::string_view kHnswFile = "hnsw.idx";
    static constexpr std::string_view kEmbeddingsFile = "embeddings.bin";

    /// Builds fingerprints, embeddings, the inverted index and the graph.
    /// Records with duplicate ids, invalid UTF-8 or empty content are
    /// rejected individually and the build continues. With an external
    /// embedder, vectors come from `external`; records without one are
    /// zero-flagged.
    static Collection
    ingest(std::vector<CorpusRecord> records,
           const CollectionConfig& cfg,
           IngestReport* report = nullptr,
           const std::map<std::string, Embedding>* external = nullptr);

    /// Writes the collection into a sibling temporary directory and renames
    /// it into place, so an interrupted save never leaves a directory that
    /// loads as complete.
    void
    save(const std::filesystem::path& dir, bool overwrite = false) const;

    static Collection
    load(const std::filesystem::path& dir);

    /// Stage 1: top `candidates` by cosine from the graph. Stage 2: Jaccard
    /// of fingerprint sets; ordered by Jaccard, then cosine, then id. A
    /// fragment with a zero embedding falls back to the budgeted fingerprint
    /// query. `query_vector` overrides the built-in embedder.
    RankedResult
    trace(std::string_view fragment,
          std::size_t candidates = 100,
          std::size_t top_k = 10,
          const Embedding* query_vector = nullptr) const;

    /// Stage 1 alone: ids by cosine.
    std::vector<std::string>
    vector_rank(std::string_view fragment, std::size_t depth) const;

    /// The budgeted fingerprint engine alone, using config().moss with
    /// top_k = depth unless `moss` overrides it.
    std::vector<std::string>
    winnowing_rank(std::string_view fragment,
                   std::size_t depth,
                   const std::optional<MossConfig>& moss = std::nullopt) const;

    /// Brute-force Jaccard over every record.
    std::vector<std::string>
    exhaustive_rank_ids(std::string_view fragment, std::size_t depth) const;

    Embedding
    embed_query(const FingerprintSet& fp) const;

    std::size_t
    size() const {
        return records_.size();
    }

    const std::vector<CorpusRecord>&
    records() const {
        return records_;
    }

    const CorpusRecord*
    find_record(std::string_view id) const;

    const InvertedIndex&
    moss() const {
        return moss_;
    }

    const HnswIndex&
    ann() const {
        return *ann_;
    }

    const CollectionConfig&
    config() const {
        return cfg_;
    }

    const nlohmann::json&
    manifest() const {
        return manifest_;
    }

    const std::vector<std::string>&
    zero_embedding_ids() const {
        return zero_ids_;
    }

    /// Serialized forms of the three index files, as save() writes them.
    std::string
    moss_bytes() const;
    std::string
    hnsw_bytes() const;
    std::string
    embeddings_bytes() const;

    /// In-memory consistency checks; one line per problem.
    std::vector<std::string>
    check_invariants() const;

private:
    Collection();

    void
    finish_setup();

    CollectionConfig cfg_;
    std::vector<CorpusRecord> records_;
    InvertedIndex moss_;
    std::unique_ptr<HnswIndex> ann_;
    std::vector<DocOrdinal> node_ordinal_;  // graph node -> record ordinal
    std::vector<std::string> zero_ids_;
    nlohmann::json manifest_;
};

struct IntegrityCheck {
    std::string name;
    bool ok = true;
    std::string detail;
};

struct IntegrityReport {
    std::vector<IntegrityCheck> checks;

    bool
    ok() const;

    nlohmann::json
    to_json() const;
};

/// Audits a collection directory: manifest and file versions, checksums,
/// id-set agreement across records / fingerprint index / graph, index
/// invariants. With `rebuild`, re-ingests the records under the manifest's
/// configuration and byte-compares the regenerated index files. Never
/// throws for a damaged collection; failures are report entries.
IntegrityReport
integrity_check(const std::filesystem::path& dir, bool rebuild = true);

}  // namespace provtrace
