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

#include "provtrace/collection.h"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "collection_files.h"
#include "provtrace/binio.h"
#include "provtrace/error.h"

namespace provtrace {

namespace fs = std::filesystem;

namespace {

double
elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void
write_file(const fs::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
        throw Error(fmt::format("failed writing '{}'", path.string()));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

void
CollectionConfig::validate() const {
    wcfg.validate();
    embedder.validate();
    hnsw.validate();
    moss.validate();
    if (!(embedder.wcfg == wcfg)) {
        throw ConfigError("embedder winnow config must match the collection winnow config");
    }
}

nlohmann::json
to_json(const CollectionConfig& cfg) {
    return nlohmann::json{
        {"winnow", {{"k", cfg.wcfg.k}, {"w", cfg.wcfg.w}}},
        {"embedder",
         {{"kind", std::string(to_string(cfg.embedder.kind))},
          {"dim", cfg.embedder.dim},
          {"seed", cfg.embedder.seed},
          {"source", cfg.embedder.source}}},
        {"hnsw",
         {{"M", cfg.hnsw.M},
          {"ef_construction", cfg.hnsw.ef_construction},
          {"ef_search", cfg.hnsw.ef_search},
          {"seed", cfg.hnsw.seed}}},
        {"moss", {{"freq_threshold", cfg.moss.freq_threshold}, {"budget", cfg.moss.budget}}},
    };
}

CollectionConfig
collection_config_from_json(const nlohmann::json& j) {
    try {
        CollectionConfig cfg;
        cfg.wcfg.k = j.at("winnow").at("k").get<std::uint32_t>();
        cfg.wcfg.w = j.at("winnow").at("w").get<std::uint32_t>();
        const auto& e = j.at("embedder");
        cfg.embedder.kind = embedder_kind_from_string(e.at("kind").get<std::string>());
        cfg.embedder.dim = e.at("dim").get<std::uint32_t>();
        cfg.embedder.seed = e.at("seed").get<std::uint64_t>();
        cfg.embedder.source = e.value("source", std::string());
        cfg.embedder.wcfg = cfg.wcfg;
        const auto& h = j.at("hnsw");
        cfg.hnsw.M = h.at("M").get<std::uint32_t>();
        cfg.hnsw.ef_construction = h.at("ef_construction").get<std::uint32_t>();
        cfg.hnsw.ef_search = h.at("ef_search").get<std::uint32_t>();
        cfg.hnsw.seed = h.at("seed").get<std::uint64_t>();
        const auto& m = j.at("moss");
        cfg.moss.freq_threshold = m.at("freq_threshold").get<double>();
        cfg.moss.budget = m.at("budget").get<std::size_t>();
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("invalid collection config: {}", e.what()));
    }
}

nlohmann::json
IngestReport::to_json() const {
    auto rejects_json = nlohmann::json::array();
    for (const auto& r : rejects) {
        rejects_json.push_back({{"line", r.line}, {"id", r.id}, {"reason", r.reason}});
    }
    return nlohmann::json{{"submitted", submitted},
                          {"indexed", indexed},
                          {"rejected", rejects.size()},
                          {"rejects", rejects_json},
                          {"zero_embedding_ids", zero_embedding_ids}};
}

// ---------------------------------------------------------------------------
// build

Collection::Collection() = default;

Collection
Collection::ingest(std::vector<CorpusRecord> records,
                   const CollectionConfig& cfg_in,
                   IngestReport* report,
                   const std::map<std::string, Embedding>* external) {
    CollectionConfig cfg = cfg_in;
    cfg.embedder.wcfg = cfg.wcfg;
    cfg.validate();
    if (cfg.embedder.kind == EmbedderKind::external && external == nullptr) {
        throw ConfigError("external embedder selected but no vectors were supplied");
    }

    IngestReport local;
    IngestReport& rep = report != nullptr ? *report : local;
    rep = IngestReport{};
    rep.submitted = records.size();

    // First occurrence of an id wins; submission order decides.
    std::vector<CorpusRecord> accepted;
    accepted.reserve(records.size());
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& r = records[i];
        if (r.id.empty()) {
            rep.rejects.push_back({0, r.id, "empty id"});
        } else if (!is_valid_utf8(r.content) || !is_valid_utf8(r.id)) {
            rep.rejects.push_back({0, r.id, "content is not valid UTF-8"});
        } else if (r.content.empty()) {
            rep.rejects.push_back({0, r.id, "empty content"});
        } else if (!seen.insert(r.id).second) {
            rep.rejects.push_back({0, r.id, "duplicate id"});
        } else {
            accepted.push_back(std::move(r));
        }
    }
    std::sort(accepted.begin(), accepted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    Collection c;
    c.cfg_ = cfg;
    c.records_ = std::move(accepted);

    std::vector<std::pair<std::string, FingerprintSet>> fps;
    fps.reserve(c.records_.size());
    for (const auto& r : c.records_) {
        fps.emplace_back(r.id, fingerprint(r.content, cfg.wcfg));
    }

    c.ann_ = std::make_unique<HnswIndex>(cfg.embedder.dim, cfg.hnsw);
    for (const auto& [id, fp] : fps) {
        Embedding e;
        if (cfg.embedder.kind == EmbedderKind::fingerprint_hash) {
            e = embed_fingerprints(fp, cfg.embedder);
        } else if (auto it = external->find(id); it != external->end()) {
            if (it->second.dim() != cfg.embedder.dim) {
                throw DimensionError(fmt::format("external vector for '{}' has {} dimensions, collection uses {}",
                                                 id, it->second.dim(), cfg.embedder.dim));
            }
            e = it->second;
        } else {
            e.values.assign(cfg.embedder.dim, 0.0f);
            e.zero = true;
        }
        if (e.zero) {
            c.zero_ids_.push_back(id);
        } else {
            c.ann_->insert(id, e);
        }
    }
    c.moss_ = InvertedIndex::from_fingerprints(std::move(fps), cfg.wcfg);
    c.finish_setup();

    rep.indexed = c.records_.size();
    rep.zero_embedding_ids = c.zero_ids_;

    auto rejects_json = rep.to_json()["rejects"];
    c.manifest_ = nlohmann::json{
        {"format", "provtrace-collection"},
        {"version", kFormatVersion},
        {"created_at", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)))},
        {"config", to_json(cfg)},
        {"counts",
         {{"submitted", rep.submitted},
          {"records", c.records_.size()},
          {"moss_docs", c.moss_.doc_count()},
          {"ann_nodes", c.ann_->size()},
          {"zero_embedding", c.zero_ids_.size()},
          {"rejected", rep.rejects.size()}}},
        {"zero_embedding_ids", c.zero_ids_},
        {"rejects", rejects_json},
    };
    return c;
}

void
Collection::finish_setup() {
    node_ordinal_.assign(ann_->size(), 0);
    for (NodeId n = 0; n < ann_->size(); ++n) {
        auto ord = moss_.find(ann_->label(n));
        if (!ord) {
            throw FormatError(fmt::format("graph node '{}' has no record", ann_->label(n)));
        }
        node_ordinal_[n] = *ord;
    }
}

const CorpusRecord*
Collection::find_record(std::string_view id) const {
    auto ord = moss_.find(id);
    return ord ? &records_[*ord] : nullptr;
}

// ---------------------------------------------------------------------------
// persistence

std::string
Collection::moss_bytes() const {
    std::ostringstream out(std::ios::binary);
    moss_.save(out);
    return std::move(out).str();
}

std::string
Collection::hnsw_bytes() const {
    std::ostringstream out(std::ios::binary);
    ann_->save_graph(out);
    return std::move(out).str();
}

std::string
Collection::embeddings_bytes() const {
    std::ostringstream out(std::ios::binary);
    binio::put_bytes(out, detail::kEmbeddingsMagic);
    binio::put<std::uint32_t>(out, detail::kEmbeddingsVersion);
    binio::put<std::uint32_t>(out, cfg_.embedder.dim);
    binio::put<std::uint64_t>(out, records_.size());
    for (const auto& r : records_) {
        binio::put_string(out, r.id);
        auto node = ann_->find(r.id);
        binio::put<std::uint8_t>(out, node ? 0 : 1);
        if (node) {
            auto v = ann_->vector(*node);
            out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
        }
    }
    return std::move(out).str();
}

void
Collection::save(const fs::path& dir, bool overwrite) const {
    fs::path target = fs::absolute(dir);
    if (fs::exists(target) && !overwrite) {
        throw Error(fmt::format("collection directory '{}' already exists", target.string()));
    }
    fs::path tmp = target;
    tmp += fmt::format(".partial-{}", ::getpid());
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    std::ostringstream records_out;
    write_corpus_jsonl(records_out, records_);

    nlohmann::json manifest = manifest_;
    nlohmann::json files = nlohmann::json::object();
    auto emit = [&](std::string_view name, const std::string& bytes) {
        write_file(tmp / name, bytes);
        files[std::string(name)] = {{"bytes", bytes.size()}, {"fnv1a64", detail::fnv1a64_hex(bytes)}};
    };
    emit(kRecordsFile, records_out.str());
    emit(kMossFile, moss_bytes());
    emit(kEmbeddingsFile, embeddings_bytes());
    emit(kHnswFile, hnsw_bytes());
    manifest["files"] = files;
    write_file(tmp / kManifestFile, manifest.dump(2) + "\n");

    if (fs::exists(target)) {
        fs::path old = target;
        old += fmt::format(".old-{}", ::getpid());
        fs::rename(target, old);
        fs::rename(tmp, target);
        fs::remove_all(old);
    } else {
        if (target.has_parent_path()) {
            fs::create_directories(target.parent_path());
        }
        fs::rename(tmp, target);
    }
}

Collection
Collection::load(const fs::path& dir) {
    auto manifest = detail::read_manifest(dir);
    Collection c;
    c.manifest_ = manifest;
    c.cfg_ = collection_config_from_json(manifest.at("config"));

    auto corpus = read_corpus_file(dir / kRecordsFile);
    if (!corpus.rejects.empty()) {
        throw FormatError(fmt::format("{}: line {}: {}", kRecordsFile, corpus.rejects.front().line,
                                      corpus.rejects.front().reason));
    }
    c.records_ = std::move(corpus.records);

    {
        std::ifstream in(dir / kMossFile, std::ios::binary);
        if (!in) {
            throw FormatError(fmt::format("missing {}", kMossFile));
        }
        c.moss_ = InvertedIndex::load(in, c.cfg_.wcfg);
    }

    auto vectors = detail::read_embeddings(dir / kEmbeddingsFile, c.cfg_.embedder.dim);
    {
        std::ifstream in(dir / kHnswFile, std::ios::binary);
        if (!in) {
            throw FormatError(fmt::format("missing {}", kHnswFile));
        }
        c.ann_ = std::make_unique<HnswIndex>(HnswIndex::load_graph(in, [&](const std::string& id) {
            auto it = vectors.vectors.find(id);
            if (it == vectors.vectors.end()) {
                throw FormatError(fmt::format("graph node '{}' has no stored embedding", id));
            }
            return std::span<const float>(it->second);
        }));
    }
    if (c.ann_->dim() != c.cfg_.embedder.dim) {
        throw FormatError("graph dimension disagrees with manifest");
    }

    // id-set agreement
    if (c.records_.size() != c.moss_.doc_count()) {
        throw FormatError(fmt::format("records ({}) and fingerprint index ({}) disagree on document count",
                                      c.records_.size(), c.moss_.doc_count()));
    }
    for (std::size_t i = 0; i < c.records_.size(); ++i) {
        if (c.records_[i].id != c.moss_.doc_id(static_cast<DocOrdinal>(i))) {
            throw FormatError(fmt::format("record '{}' is not in the fingerprint index", c.records_[i].id));
        }
    }
    c.zero_ids_ = vectors.zero_ids;
    if (c.ann_->size() + c.zero_ids_.size() != c.records_.size()) {
        throw FormatError("graph and records disagree on document count");
    }
    c.finish_setup();
    return c;
}

// ---------------------------------------------------------------------------
// queries

Embedding
Collection::embed_query(const FingerprintSet& fp) const {
    if (cfg_.embedder.kind != EmbedderKind::fingerprint_hash) {
        Embedding zero;
        zero.values.assign(cfg_.embedder.dim, 0.0f);
        zero.zero = true;
        return zero;
    }
    return embed_fingerprints(fp, cfg_.embedder);
}

RankedResult
Collection::trace(std::string_view fragment,
                  std::size_t candidates,
                  std::size_t top_k,
                  const Embedding* query_vector) const {
    RankedResult result;
    result.query.candidates = candidates;
    result.query.top_k = top_k;
    result.query.fragment_bytes = fragment.size();
    if (records_.empty() || top_k == 0) {
        return result;
    }

    auto t0 = std::chrono::steady_clock::now();
    FingerprintSet fp = fingerprint(fragment, cfg_.wcfg);
    result.query.fragment_fingerprints = fp.hashes.size();
    Embedding q = query_vector != nullptr ? *query_vector : embed_query(fp);
    if (q.dim() != cfg_.embedder.dim) {
        throw DimensionError(fmt::format("query vector has {} dimensions, collection uses {}", q.dim(),
                                         cfg_.embedder.dim));
    }

    auto attach = [&](DocOrdinal ord, double cos, double jac) {
        const auto& r = records_[ord];
        result.entries.push_back({r.id, jac, cos, jac, r.author, r.license, r.origin});
    };

    if (q.zero) {
        result.query.fallback = true;
        MossConfig mc = cfg_.moss;
        mc.top_k = top_k;
        auto hits = moss_query(moss_, fp, mc);
        result.query.stage1_hits = hits.size();
        result.stage1_ms = elapsed_ms(t0);
        for (const auto& h : hits) {
            attach(h.doc, 0.0, h.score);
        }
        return result;
    }

    auto hits = ann_->search(q, candidates);
    result.query.stage1_hits = hits.size();
    result.stage1_ms = elapsed_ms(t0);

    auto t1 = std::chrono::steady_clock::now();
    struct Scored {
        DocOrdinal ord;
        double cosine;
        double jaccard;
    };
    std::vector<Scored> scored;
    scored.reserve(hits.size());
    for (const auto& h : hits) {
        DocOrdinal ord = node_ordinal_[h.node];
        scored.push_back({ord, static_cast<double>(h.cosine), jaccard(fp, moss_.fingerprints(ord))});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.jaccard != b.jaccard) {
            return a.jaccard > b.jaccard;
        }
        if (a.cosine != b.cosine) {
            return a.cosine > b.cosine;
        }
        return a.ord < b.ord;
    });
    if (scored.size() > top_k) {
        scored.resize(top_k);
    }
    for (const auto& s : scored) {
        attach(s.ord, s.cosine, s.jaccard);
    }
    result.stage2_ms = elapsed_ms(t1);
    return result;
}

std::vector<std::string>
Collection::vector_rank(std::string_view fragment, std::size_t depth) const {
    std::vector<std::string> ids;
    if (records_.empty()) {
        return ids;
    }
    auto q = embed_query(fingerprint(fragment, cfg_.wcfg));
    for (const auto& h : ann_->search(q, depth)) {
        ids.push_back(ann_->label(h.node));
    }
    return ids;
}

std::vector<std::string>
Collection::winnowing_rank(std::string_view fragment,
                           std::size_t depth,
                           const std::optional<MossConfig>& moss) const {
    MossConfig mc = moss.value_or(cfg_.moss);
    mc.top_k = depth;
    std::vector<std::string> ids;
    for (const auto& h : moss_query(moss_, fingerprint(fragment, cfg_.wcfg), mc)) {
        ids.push_back(moss_.doc_id(h.doc));
    }
    return ids;
}

std::vector<std::string>
Collection::exhaustive_rank_ids(std::string_view fragment, std::size_t depth) const {
    std::vector<std::string> ids;
    for (const auto& h : exhaustive_rank(moss_, fingerprint(fragment, cfg_.wcfg), depth)) {
        ids.push_back(moss_.doc_id(h.doc));
    }
    return ids;
}

std::vector<std::string>
Collection::check_invariants() const {
    std::vector<std::string> problems = moss_.check_invariants();
    for (auto& p : ann_->check_invariants()) {
        problems.push_back(std::move(p));
    }
    if (records_.size() != moss_.doc_count()) {
        problems.push_back("records and fingerprint index differ in size");
    } else {
        for (std::size_t i = 0; i < records_.size(); ++i) {
            if (records_[i].id != moss_.doc_id(static_cast<DocOrdinal>(i))) {
                problems.push_back(fmt::format("record '{}' missing from fingerprint index", records_[i].id));
                break;
            }
        }
    }
    std::set<std::string> covered(zero_ids_.begin(), zero_ids_.end());
    for (NodeId n = 0; n < ann_->size(); ++n) {
        if (!covered.insert(ann_->label(n)).second) {
            problems.push_back(fmt::format("'{}' is both in the graph and zero-flagged", ann_->label(n)));
        }
    }
    std::set<std::string> record_ids;
    for (const auto& r : records_) {
        record_ids.insert(r.id);
    }
    if (covered != record_ids) {
        problems.push_back("graph nodes plus zero-embedding ids do not equal the record id set");
    }
    return problems;
}

}  // namespace provtrace
