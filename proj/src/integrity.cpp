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


#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <fstream>
#include <set>
#include <sstream>

#include "collection_files.h"
#include "provtrace/collection.h"
#include "provtrace/error.h"

namespace provtrace {

namespace fs = std::filesystem;

bool
IntegrityReport::ok() const {
    for (const auto& c : checks) {
        if (!c.ok) {
            return false;
        }
    }
    return true;
}

nlohmann::json
IntegrityReport::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    }
    return nlohmann::json{{"ok", ok()}, {"checks", arr}};
}

namespace {

std::string
join(const std::vector<std::string>& lines, std::size_t limit = 5) {
    std::string out;
    for (std::size_t i = 0; i < lines.size() && i < limit; ++i) {
        if (i != 0) {
            out += "; ";
        }
        out += lines[i];
    }
    if (lines.size() > limit) {
        out += fmt::format("; and {} more", lines.size() - limit);
    }
    return out;
}

class Auditor {
public:
    explicit Auditor(IntegrityReport& report) : report_(report) {}

    // Runs `fn`; a thrown exception or a non-empty problem list fails the check.
    template <typename Fn>
    bool
    run(std::string name, Fn&& fn) {
        IntegrityCheck check{std::move(name), true, ""};
        try {
            std::vector<std::string> problems;
            check.detail = fn(problems);
            if (!problems.empty()) {
                check.ok = false;
                check.detail = join(problems);
            }
        } catch (const std::exception& e) {
            check.ok = false;
            check.detail = e.what();
        }
        report_.checks.push_back(check);
        return check.ok;
    }

    void
    skip(std::string name, std::string why) {
        report_.checks.push_back({std::move(name), false, "skipped: " + why});
    }

private:
    IntegrityReport& report_;
};

}  // namespace

IntegrityReport
integrity_check(const fs::path& dir, bool rebuild) {
    IntegrityReport report;
    Auditor audit(report);

    nlohmann::json manifest;
    CollectionConfig cfg;
    bool have_manifest = audit.run("manifest", [&](std::vector<std::string>&) {
        manifest = detail::read_manifest(dir);
        cfg = collection_config_from_json(manifest.at("config"));
        return fmt::format("version {}", manifest.at("version").get<int>());
    });
    if (!have_manifest) {
        for (const char* name : {"files", "records", "moss_index", "embeddings", "hnsw_graph", "id_sets",
                                 "rebuild_determinism"}) {
            audit.skip(name, "manifest unreadable");
        }
        return report;
    }

    audit.run("files", [&](std::vector<std::string>& problems) {
        auto files = manifest.value("files", nlohmann::json::object());
        for (auto name : {Collection::kRecordsFile, Collection::kMossFile, Collection::kEmbeddingsFile,
                          Collection::kHnswFile}) {
            std::string key(name);
            auto path = dir / name;
            if (!fs::exists(path)) {
                problems.push_back(fmt::format("{} is missing", key));
                continue;
            }
            if (!files.contains(key)) {
                problems.push_back(fmt::format("{} has no manifest entry", key));
                continue;
            }
            auto bytes = detail::read_file_bytes(path);
            if (bytes.size() != files[key].at("bytes").get<std::size_t>()) {
                problems.push_back(fmt::format("{} is {} bytes, manifest says {}", key, bytes.size(),
                                               files[key].at("bytes").get<std::size_t>()));
            } else if (detail::fnv1a64_hex(bytes) != files[key].at("fnv1a64").get<std::string>()) {
                problems.push_back(fmt::format("{} checksum mismatch", key));
            }
        }
        return std::string("4 files, sizes and checksums match");
    });

    std::vector<CorpusRecord> records;
    // A missing records file still lets the id-set comparison run (against
    // an empty set) so the report says which ids went missing.
    bool have_records = audit.run("records", [&](std::vector<std::string>& problems) {
        if (!fs::exists(dir / Collection::kRecordsFile)) {
            problems.push_back(fmt::format("{} is missing", Collection::kRecordsFile));
            return std::string();
        }
        auto load = read_corpus_file(dir / Collection::kRecordsFile);
        for (const auto& r : load.rejects) {
            problems.push_back(fmt::format("line {}: {}", r.line, r.reason));
        }
        records = std::move(load.records);
        for (std::size_t i = 1; i < records.size(); ++i) {
            if (!(records[i - 1].id < records[i].id)) {
                problems.push_back(fmt::format("ids not strictly ascending at '{}'", records[i].id));
                break;
            }
        }
        return fmt::format("{} records", records.size());
    });

    std::optional<InvertedIndex> moss;
    audit.run("moss_index", [&](std::vector<std::string>& problems) {
        std::ifstream in(dir / Collection::kMossFile, std::ios::binary);
        if (!in) {
            throw FormatError("cannot open fingerprint index");
        }
        moss = InvertedIndex::load(in, cfg.wcfg);
        problems = moss->check_invariants();
        return fmt::format("{} documents, {} postings", moss->doc_count(), moss->total_postings());
    });

    std::optional<detail::StoredEmbeddings> stored;
    audit.run("embeddings", [&](std::vector<std::string>& problems) {
        stored = detail::read_embeddings(dir / Collection::kEmbeddingsFile, cfg.embedder.dim);
        for (const auto& [id, v] : stored->vectors) {
            double sq = 0.0;
            for (float x : v) {
                sq += static_cast<double>(x) * x;
            }
            if (std::abs(std::sqrt(sq) - 1.0) > 1e-4) {
                problems.push_back(fmt::format("vector '{}' has norm {:.6f}", id, std::sqrt(sq)));
            }
        }
        return fmt::format("{} vectors, {} zero-flagged", stored->vectors.size(), stored->zero_ids.size());
    });

    std::optional<HnswIndex> graph;
    if (stored) {
        audit.run("hnsw_graph", [&](std::vector<std::string>& problems) {
            std::ifstream in(dir / Collection::kHnswFile, std::ios::binary);
            if (!in) {
                throw FormatError("cannot open graph");
            }
            graph.emplace(HnswIndex::load_graph(in, [&](const std::string& id) {
                auto it = stored->vectors.find(id);
                if (it == stored->vectors.end()) {
                    throw FormatError(fmt::format("graph node '{}' has no stored embedding", id));
                }
                return std::span<const float>(it->second);
            }));
            problems = graph->check_invariants();
            return fmt::format("{} nodes, max level {}", graph->size(), graph->max_level());
        });
    } else {
        audit.skip("hnsw_graph", "embeddings unreadable");
    }

    if (moss && stored && graph) {
        audit.run("id_sets", [&](std::vector<std::string>& problems) {
            std::set<std::string> rec;
            for (const auto& r : records) {
                rec.insert(r.id);
            }
            std::set<std::string> fp;
            for (DocOrdinal i = 0; i < moss->doc_count(); ++i) {
                fp.insert(moss->doc_id(i));
            }
            std::set<std::string> emb(stored->ids.begin(), stored->ids.end());
            std::set<std::string> covered(stored->zero_ids.begin(), stored->zero_ids.end());
            for (NodeId n = 0; n < graph->size(); ++n) {
                if (!covered.insert(graph->label(n)).second) {
                    problems.push_back(fmt::format("'{}' is in the graph and zero-flagged", graph->label(n)));
                }
            }
            auto compare = [&](const std::set<std::string>& other, std::string_view what) {
                std::vector<std::string> missing, extra;
                std::set_difference(other.begin(), other.end(), rec.begin(), rec.end(), std::back_inserter(missing));
                std::set_difference(rec.begin(), rec.end(), other.begin(), other.end(), std::back_inserter(extra));
                if (!missing.empty() || !extra.empty()) {
                    problems.push_back(fmt::format("{}: {} ids without a record (first '{}'), {} records absent",
                                                   what, missing.size(), missing.empty() ? "" : missing.front(),
                                                   extra.size()));
                }
            };
            compare(fp, "fingerprint index");
            compare(emb, "embeddings");
            compare(covered, "graph plus zero-flagged");
            return fmt::format("{} ids agree", rec.size());
        });
    } else {
        audit.skip("id_sets", "a component failed to load");
    }

    if (!rebuild) {
        return report;
    }
    if (!have_records || !stored) {
        audit.skip("rebuild_determinism", "records or embeddings unreadable");
        return report;
    }
    audit.run("rebuild_determinism", [&](std::vector<std::string>& problems) {
        std::map<std::string, Embedding> external;
        if (cfg.embedder.kind == EmbedderKind::external) {
            for (const auto& [id, v] : stored->vectors) {
                external.emplace(id, Embedding{v, false});
            }
        }
        auto rebuilt = Collection::ingest(records, cfg, nullptr,
                                          cfg.embedder.kind == EmbedderKind::external ? &external : nullptr);
        auto compare = [&](std::string_view name, const std::string& bytes) {
            if (detail::read_file_bytes(dir / name) != bytes) {
                problems.push_back(fmt::format("rebuilt {} differs", name));
            }
        };
        compare(Collection::kMossFile, rebuilt.moss_bytes());
        compare(Collection::kEmbeddingsFile, rebuilt.embeddings_bytes());
        compare(Collection::kHnswFile, rebuilt.hnsw_bytes());
        return std::string("rebuilt index files are byte-identical");
    });
    return report;
}

}  // namespace provtrace
