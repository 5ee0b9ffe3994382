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


#include "provtrace/cli.h"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "provtrace/clonegen.h"
#include "provtrace/error.h"
#include "provtrace/evalbench.h"
#include "provtrace/synth.h"

namespace provtrace {

nlohmann::json
trace_response_json(const RankedResult& result) {
    auto opt = [](const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    auto results = nlohmann::json::array();
    std::size_t rank = 0;
    for (const auto& e : result.entries) {
        results.push_back({{"rank", ++rank},
                           {"doc_id", e.doc_id},
                           {"score", e.score},
                           {"cosine", e.cosine},
                           {"jaccard", e.jaccard},
                           {"author", opt(e.author)},
                           {"license", opt(e.license)},
                           {"origin", opt(e.origin)}});
    }
    const auto& q = result.query;
    return {{"results", results},
            {"query",
             {{"candidates", q.candidates},
              {"top_k", q.top_k},
              {"fragment_bytes", q.fragment_bytes},
              {"fragment_fingerprints", q.fragment_fingerprints},
              {"stage1_hits", q.stage1_hits},
              {"fallback", q.fallback}}},
            {"timings", {{"stage1_ms", result.stage1_ms}, {"stage2_ms", result.stage2_ms}}}};
}

std::string
trace_table(const RankedResult& result) {
    auto text = [](const std::optional<std::string>& v) { return v ? *v : std::string("-"); };
    std::string out = fmt::format("{:>4}  {:<24} {:>8} {:>8}  {:<16} {:<14} {}\n", "rank", "doc_id", "jaccard",
                                  "cosine", "author", "license", "origin");
    std::size_t rank = 0;
    for (const auto& e : result.entries) {
        out += fmt::format("{:>4}  {:<24} {:>8.4f} {:>8.4f}  {:<16} {:<14} {}\n", ++rank, e.doc_id, e.jaccard,
                           e.cosine, text(e.author), text(e.license), text(e.origin));
    }
    out += fmt::format("candidates={} top_k={} fallback={} stage1={:.3f}ms stage2={:.3f}ms\n",
                       result.query.candidates, result.query.top_k, result.query.fallback, result.stage1_ms,
                       result.stage2_ms);
    return out;
}

namespace {

// Flag values that parse but make no sense, such as an empty code fragment.
struct UsageError : Error {
    using Error::Error;
};

void
print_json(std::ostream& out, const nlohmann::json& j) {
    out << j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

std::string
read_all(std::istream& in) {
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string
read_code(const std::string& path, std::istream& in) {
    std::string code;
    if (path.empty() || path == "-") {
        code = read_all(in);
    } else {
        std::ifstream f(path, std::ios::binary);
        if (!f) {
            throw FormatError(fmt::format("cannot open code file '{}'", path));
        }
        code = read_all(f);
    }
    if (code.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw UsageError("no code given: pass --code FILE or pipe the fragment on stdin");
    }
    if (!is_valid_utf8(code)) {
        throw FormatError("code is not valid UTF-8");
    }
    return code;
}

std::string
collection_path(const std::string& flag) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("PROVTRACE_COLLECTION"); env != nullptr && *env != '\0') {
        return env;
    }
    throw UsageError("no collection: pass --collection DIR or set PROVTRACE_COLLECTION");
}

void
check_format(const std::string& format) {
    if (format != "json" && format != "table") {
        throw UsageError(fmt::format("--format must be json or table, got '{}'", format));
    }
}

TraceService* g_service = nullptr;

extern "C" void
stop_service(int) {
    if (g_service != nullptr) {
        g_service->stop();
    }
}

struct IngestArgs {
    std::string corpus, out, vectors;
    std::uint32_t dim = 1024, k = 5, w = 4;
    std::uint64_t seed = 1, hnsw_seed = 42;
    MossConfig moss;
    bool overwrite = false;
};

int
cmd_ingest(const IngestArgs& a, std::ostream& out) {
    CollectionConfig cfg;
    cfg.wcfg = {a.k, a.w};
    cfg.embedder.dim = a.dim;
    cfg.embedder.seed = a.seed;
    cfg.embedder.wcfg = cfg.wcfg;
    cfg.hnsw.seed = a.hnsw_seed;
    cfg.moss = a.moss;
    std::map<std::string, Embedding> external;
    if (!a.vectors.empty()) {
        cfg.embedder.kind = EmbedderKind::external;
        cfg.embedder.source = a.vectors;
        external = import_embeddings_file(a.vectors, a.dim);
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }

    auto load = read_corpus_file(a.corpus);
    IngestReport report;
    auto c = Collection::ingest(std::move(load.records), cfg, &report, a.vectors.empty() ? nullptr : &external);
    c.save(a.out, a.overwrite);

    auto summary = report.to_json();
    summary["submitted"] = report.submitted + load.rejects.size();
    for (const auto& r : load.rejects) {
        summary["rejects"].push_back({{"line", r.line}, {"id", r.id}, {"reason", r.reason}});
    }
    summary["rejected"] = summary["rejects"].size();
    summary["collection"] = a.out;
    summary["config"] = to_json(c.config());
    print_json(out, summary);
    return exit_code::ok;
}

}  // namespace

int
run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Trace code fragments back to candidate source snippets.", "provtrace"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Build a collection from a JSON-lines corpus");
    c_ingest->add_option("--corpus", ingest.corpus, "Corpus file (JSON lines)")->required();
    c_ingest->add_option("--out", ingest.out, "Collection directory to write")->required();
    c_ingest->add_option("--dim", ingest.dim, "Embedding dimension")->capture_default_str();
    c_ingest->add_option("--seed", ingest.seed, "Embedder hash seed")->capture_default_str();
    c_ingest->add_option("--hnsw-seed", ingest.hnsw_seed, "Graph level seed")->capture_default_str();
    c_ingest->add_option("--k", ingest.k, "k-gram size")->capture_default_str();
    c_ingest->add_option("--w", ingest.w, "Winnowing window")->capture_default_str();
    c_ingest->add_option("--freq-threshold", ingest.moss.freq_threshold,
                         "Drop query hashes present in more than this fraction of documents")
        ->capture_default_str();
    c_ingest->add_option("--budget", ingest.moss.budget, "Posting lists read per fingerprint query")
        ->capture_default_str();
    c_ingest->add_option("--vectors", ingest.vectors, "External vectors (id<TAB>floats per line)");
    c_ingest->add_flag("--overwrite", ingest.overwrite, "Replace an existing collection directory");

    std::string collection, code_path, format = "json";
    std::size_t candidates = 100, top_k = 10;
    auto* c_trace = app.add_subcommand("trace", "Rank likely sources of a code fragment");
    c_trace->add_option("--collection", collection, "Collection directory (default $PROVTRACE_COLLECTION)");
    c_trace->add_option("--code", code_path, "Fragment file; stdin when absent or '-'");
    c_trace->add_option("--candidates", candidates, "Vector-stage candidates")->capture_default_str();
    c_trace->add_option("--top-k", top_k, "Results to return")->capture_default_str();
    c_trace->add_option("--format", format, "json or table")->capture_default_str();

    MutationConfig mutation;
    auto* c_mutate = app.add_subcommand("mutate", "Rename frequent words of a fragment");
    c_mutate->add_option("--code", code_path, "Fragment file; stdin when absent or '-'");
    c_mutate->add_option("--seed", mutation.seed, "RNG seed")->capture_default_str();
    c_mutate->add_option("--prob", mutation.replace_prob, "Per-word replacement probability")
        ->capture_default_str();

    QueryGenConfig qgen;
    std::string corpus_path, queries_out;
    auto* c_mq = app.add_subcommand("make-queries", "Sample clone queries with ground truth");
    c_mq->add_option("--collection", collection, "Collection directory (default $PROVTRACE_COLLECTION)");
    c_mq->add_option("--corpus", corpus_path, "Corpus file instead of a collection");
    c_mq->add_option("--grid", qgen.grid, "Window sizes in tokens")->delimiter(',')->capture_default_str();
    c_mq->add_option("--per-size", qgen.per_size, "Queries per window size")->capture_default_str();
    c_mq->add_option("--type2-fraction", qgen.type2_fraction, "Share of mutated queries")->capture_default_str();
    c_mq->add_option("--seed", qgen.seed, "RNG seed")->capture_default_str();
    c_mq->add_option("--out", queries_out, "Query file to write (JSON lines)")->required();

    GridOptions grid;
    std::string queries_path;
    std::vector<std::string> method_names{"vector-only", "winnowing", "hybrid"};
    auto* c_eval = app.add_subcommand("eval", "Score methods on a query file");
    c_eval->add_option("--collection", collection, "Collection directory (default $PROVTRACE_COLLECTION)");
    c_eval->add_option("--queries", queries_path, "Query file from make-queries")->required();
    c_eval->add_option("--methods", method_names, "Methods")->delimiter(',')->capture_default_str();
    c_eval->add_option("--cutoffs", grid.cutoffs, "Recall cutoffs")->delimiter(',')->capture_default_str();
    c_eval->add_option("--candidates", grid.candidates, "Hybrid vector-stage candidates")->capture_default_str();
    c_eval->add_option("--format", format, "json or table")->capture_default_str();

    std::vector<std::size_t> sizes{1000, 10000, 100000};
    std::size_t bench_queries = 100, warmup = 10;
    std::string bench_method = "hybrid", csv_path;
    std::uint64_t corpus_seed = 1;
    std::uint32_t bench_dim = 1024;
    auto* c_bench = app.add_subcommand("bench", "Fit query latency against corpus size");
    c_bench->add_option("--sizes", sizes, "Corpus sizes")->delimiter(',')->capture_default_str();
    c_bench->add_option("--queries", bench_queries, "Timed queries per size")->capture_default_str();
    c_bench->add_option("--warmup", warmup, "Untimed queries per size")->capture_default_str();
    c_bench->add_option("--method", bench_method, "vector-only, winnowing, hybrid or exhaustive")
        ->capture_default_str();
    c_bench->add_option("--corpus", corpus_path, "Corpus file; synthetic corpus when absent");
    c_bench->add_option("--corpus-seed", corpus_seed, "Synthetic corpus seed")->capture_default_str();
    c_bench->add_option("--dim", bench_dim, "Embedding dimension")->capture_default_str();
    c_bench->add_option("--csv", csv_path, "Also write (N, mean seconds) samples as CSV");

    bool no_rebuild = false;
    auto* c_check = app.add_subcommand("check", "Audit a collection directory");
    c_check->add_option("--collection", collection, "Collection directory (default $PROVTRACE_COLLECTION)");
    c_check->add_flag("--no-rebuild", no_rebuild, "Skip the rebuild-and-compare check");

    std::string listen = "127.0.0.1:8080";
    ServiceOptions service_opts;
    auto* c_serve = app.add_subcommand("serve", "Serve trace requests over HTTP");
    c_serve->add_option("--collection", collection, "Collection directory (default $PROVTRACE_COLLECTION)");
    c_serve->add_option("--listen", listen, "host:port")->capture_default_str();
    c_serve->add_option("--max-code-bytes", service_opts.max_code_bytes, "Largest accepted fragment")
        ->capture_default_str();

    auto fail = [&](int code, std::string_view kind, std::string_view message) {
        err << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump(
                   -1, ' ', false, nlohmann::json::error_handler_t::replace)
            << '\n';
        return code;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::CallForVersion& e) {
        out << kVersion << '\n';
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        return fail(exit_code::usage, "usage", e.what());
    }

    try {
        if (*c_ingest) {
            return cmd_ingest(ingest, out);
        }

        if (*c_trace) {
            check_format(format);
            auto c = Collection::load(collection_path(collection));
            auto result = c.trace(read_code(code_path, in), candidates, top_k);
            if (format == "table") {
                out << trace_table(result);
            } else {
                print_json(out, trace_response_json(result));
            }
            return exit_code::ok;
        }

        if (*c_mutate) {
            try {
                mutation.validate();
            } catch (const ConfigError& e) {
                throw UsageError(e.what());
            }
            auto r = replace_frequent_words(read_code(code_path, in), mutation);
            auto replaced = nlohmann::json::array();
            std::size_t eligible = 0;
            for (const auto& d : r.decisions) {
                eligible += d.eligible ? 1 : 0;
                if (d.replaced) {
                    replaced.push_back({{"word", d.word}, {"replacement", d.replacement}, {"count", d.count}});
                }
            }
            print_json(out, {{"text", r.text},
                             {"seed", mutation.seed},
                             {"distinct_words", r.decisions.size()},
                             {"eligible_words", eligible},
                             {"replaced", replaced}});
            return exit_code::ok;
        }

        if (*c_mq) {
            try {
                qgen.validate();
            } catch (const ConfigError& e) {
                throw UsageError(e.what());
            }
            QuerySet set;
            if (!corpus_path.empty()) {
                auto load = read_corpus_file(corpus_path);
                set = make_queries(load.records, qgen);
            } else {
                set = make_queries(Collection::load(collection_path(collection)), qgen);
            }
            std::ofstream f(queries_out, std::ios::binary | std::ios::trunc);
            if (!f) {
                throw FormatError(fmt::format("cannot write '{}'", queries_out));
            }
            write_queries_jsonl(f, set.queries);
            f.close();
            std::map<std::string, std::size_t> by_size;
            std::size_t type2 = 0;
            for (const auto& q : set.queries) {
                ++by_size[std::to_string(q.window_tokens)];
                type2 += q.clone_type == 2 ? 1 : 0;
            }
            print_json(out, {{"out", queries_out},
                             {"count", set.queries.size()},
                             {"type2", type2},
                             {"by_size", by_size},
                             {"skipped_sizes", set.skipped_sizes},
                             {"seed", qgen.seed}});
            return exit_code::ok;
        }

        if (*c_eval) {
            check_format(format);
            grid.methods.clear();
            try {
                for (const auto& m : method_names) {
                    grid.methods.push_back(method_from_string(m));
                }
            } catch (const ConfigError& e) {
                throw UsageError(e.what());
            }
            auto c = Collection::load(collection_path(collection));
            std::ifstream qf(queries_path, std::ios::binary);
            if (!qf) {
                throw FormatError(fmt::format("cannot open query file '{}'", queries_path));
            }
            auto queries = read_queries_jsonl(qf);
            auto report = run_grid(c, queries, grid);
            if (format == "table") {
                out << report.to_table();
            } else {
                print_json(out, report.to_json());
            }
            return exit_code::ok;
        }

        if (*c_bench) {
            if (sizes.size() < 2) {
                throw UsageError("bench needs at least two --sizes to fit a power law");
            }
            Method method;
            try {
                method = method_from_string(bench_method);
            } catch (const ConfigError& e) {
                throw UsageError(e.what());
            }
            std::function<std::vector<CorpusRecord>(std::size_t)> corpus;
            if (corpus_path.empty()) {
                synth::SynthConfig sc;
                sc.seed = corpus_seed;
                corpus = [sc](std::size_t n) { return synth::make_corpus(n, sc); };
            } else {
                auto all = std::make_shared<std::vector<CorpusRecord>>(read_corpus_file(corpus_path).records);
                corpus = [all](std::size_t n) {
                    if (n > all->size()) {
                        throw FormatError(fmt::format("corpus has {} records, {} requested", all->size(), n));
                    }
                    return std::vector<CorpusRecord>(all->begin(), all->begin() + static_cast<std::ptrdiff_t>(n));
                };
            }
            CollectionConfig cfg;
            cfg.embedder.dim = bench_dim;
            auto fit = bench_latency(collection_runner_factory(corpus, cfg, method, bench_queries), sizes,
                                     bench_queries, warmup);
            if (!csv_path.empty()) {
                std::ofstream f(csv_path, std::ios::binary | std::ios::trunc);
                f << fit.to_csv();
                if (!f) {
                    throw FormatError(fmt::format("cannot write '{}'", csv_path));
                }
            }
            auto j = fit.to_json();
            j["method"] = std::string(to_string(method));
            print_json(out, j);
            return exit_code::ok;
        }

        if (*c_check) {
            auto report = integrity_check(collection_path(collection), !no_rebuild);
            print_json(out, report.to_json());
            return report.ok() ? exit_code::ok : exit_code::data;
        }

        if (*c_serve) {
            auto colon = listen.rfind(':');
            int port = -1;
            if (colon != std::string::npos) {
                try {
                    port = std::stoi(listen.substr(colon + 1));
                } catch (const std::exception&) {
                    port = -1;
                }
            }
            if (colon == std::string::npos || port < 0 || port > 65535) {
                throw UsageError(fmt::format("--listen expects host:port, got '{}'", listen));
            }
            auto c = std::make_shared<const Collection>(Collection::load(collection_path(collection)));
            TraceService service(c, service_opts);
            int bound = service.bind(listen.substr(0, colon), port);
            if (bound < 0) {
                throw Error(fmt::format("cannot listen on {}", listen));
            }
            out << nlohmann::json{{"listening", fmt::format("{}:{}", listen.substr(0, colon), bound)},
                                  {"documents", c->size()}}
                       .dump()
                << std::endl;
            g_service = &service;
            std::signal(SIGINT, stop_service);
            std::signal(SIGTERM, stop_service);
            bool ok = service.listen();
            g_service = nullptr;
            return ok ? exit_code::ok : exit_code::internal;
        }
    } catch (const UsageError& e) {
        return fail(exit_code::usage, "usage", e.what());
    } catch (const ConfigError& e) {
        return fail(exit_code::data, "config", e.what());
    } catch (const Error& e) {
        return fail(exit_code::data, "data", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(exit_code::data, "io", e.what());
    } catch (const std::exception& e) {
        return fail(exit_code::internal, "internal", e.what());
    }
    return fail(exit_code::usage, "usage", "no subcommand");
}

}  // namespace provtrace
