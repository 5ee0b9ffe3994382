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


#include "provtrace/synth.h"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "provtrace/canon.h"
#include "provtrace/rng.h"

namespace provtrace::synth {

namespace {

constexpr std::array<std::string_view, 96> kParts{
    "buffer", "count",  "index",   "node",    "value",   "result",  "total",   "item",    "list",    "size",
    "offset", "cursor", "parser",  "token",   "stream",  "record",  "entry",   "key",     "hash",    "table",
    "queue",  "stack",  "child",   "parent",  "left",    "right",   "min",     "max",     "sum",     "temp",
    "flag",   "state",  "mode",    "config",  "path",    "name",    "data",    "len",     "width",   "height",
    "delta",  "score",  "weight",  "limit",   "pos",     "start",   "end",     "step",    "line",    "col",
    "row",    "matrix", "vec",     "cache",   "pool",    "block",   "page",    "frame",   "packet",  "header",
    "body",   "socket", "client",  "server",  "user",    "order",   "price",   "amount",  "rate",    "time",
    "date",   "event",  "handler", "task",    "job",     "worker",  "thread",  "lock",    "signal",  "error",
    "status", "code",   "message", "text",    "file",    "reader",  "writer",  "graph",   "edge",    "range",
    "level",  "depth",  "bucket",  "segment", "channel", "session",
};
constexpr std::array<std::string_view, 10> kTypes{"int",  "long",     "float",    "double", "char",
                                                  "bool", "size_t",   "uint32_t", "auto",   "unsigned"};
constexpr std::array<std::string_view, 12> kVerbs{"get",  "set",   "update", "compute", "read",  "write",
                                                  "find", "parse", "build",  "reset",   "check", "merge"};
constexpr std::array<std::string_view, 6> kCompare{"<", ">", "<=", ">=", "==", "!="};
constexpr std::array<std::string_view, 4> kArith{"+", "-", "*", "%"};
constexpr std::array<std::string_view, 5> kLicenses{"MIT", "Apache-2.0", "BSD-3-Clause", "GPL-3.0", "MPL-2.0"};

class Writer {
public:
    // Naming style and a shared identifier pool come from the repository;
    // each file draws most of its names from the pool and coins the rest.
    Writer(std::uint64_t seed, std::uint64_t repo_seed, const SynthConfig& cfg) : rng_(repo_seed), cfg_(cfg) {
        const bool snake = pick(2) == 0;
        std::vector<std::string> var_pool, func_pool;
        for (std::size_t i = 0; i < 40; ++i) {
            var_pool.push_back(identifier(snake, 1 + pick(3)));
        }
        for (std::size_t i = 0; i < 16; ++i) {
            func_pool.push_back(function_name(snake));
        }

        rng_.seed(seed);
        const std::size_t n_vars = 6 + pick(10);
        for (std::size_t i = 0; i < n_vars; ++i) {
            vars_.push_back(chance(cfg.shared_name_rate) ? var_pool[pick(var_pool.size())]
                                                         : identifier(snake, 1 + pick(3)));
        }
        const std::size_t n_funcs = 3 + pick(5);
        for (std::size_t i = 0; i < n_funcs; ++i) {
            funcs_.push_back(chance(cfg.shared_name_rate) ? func_pool[pick(func_pool.size())] : function_name(snake));
        }
    }

    std::string
    document(std::size_t target_tokens) {
        std::size_t f = 0;
        while (tokens_ < target_tokens) {
            function(funcs_[f % funcs_.size()], target_tokens);
            ++f;
        }
        return std::move(out_);
    }

private:
    std::size_t
    pick(std::size_t n) {
        return static_cast<std::size_t>(rng::uniform_index(rng_, n));
    }

    bool
    chance(double p) {
        return rng::uniform01(rng_) < p;
    }

    static std::string
    capitalize(std::string_view s) {
        std::string r(s);
        r[0] = static_cast<char>(r[0] - 'a' + 'A');
        return r;
    }

    std::string
    identifier(bool snake, std::size_t parts) {
        std::string id(kParts[pick(kParts.size())]);
        for (std::size_t i = 1; i < parts; ++i) {
            auto p = kParts[pick(kParts.size())];
            id += snake ? "_" + std::string(p) : capitalize(p);
        }
        return id;
    }

    std::string
    function_name(bool snake) {
        std::string f(kVerbs[pick(kVerbs.size())]);
        auto part = kParts[pick(kParts.size())];
        f += snake ? "_" + std::string(part) : capitalize(part);
        return f;
    }

    const std::string&
    var() {
        return vars_[pick(vars_.size())];
    }

    std::string
    operand() {
        switch (pick(6)) {
        case 0:
            return std::to_string(pick(1000));
        case 1:
            return fmt::format("{}[{}]", var(), var());
        case 2:
            return fmt::format("{}({})", funcs_[pick(funcs_.size())], var());
        default:
            return var();
        }
    }

    std::string
    expr() {
        std::string e = operand();
        std::size_t extra = pick(3);
        for (std::size_t i = 0; i < extra; ++i) {
            e += fmt::format(" {} {}", kArith[pick(kArith.size())], operand());
        }
        return e;
    }

    void
    emit(std::string_view line) {
        out_.append(indent_ * 4, ' ');
        out_.append(line);
        out_.push_back('\n');
        tokens_ += tokenize(line).size();
    }

    void
    comment() {
        std::string words;
        std::size_t n = 2 + pick(6);
        for (std::size_t i = 0; i < n; ++i) {
            words += (i ? " " : "") + std::string(kParts[pick(kParts.size())]);
        }
        emit(chance(0.7) ? "// " + words : "/* " + words + " */");
    }

    void
    statement(int depth) {
        if (chance(cfg_.comment_rate)) {
            comment();
        }
        std::size_t kind = depth < 2 ? pick(9) : pick(5);
        switch (kind) {
        case 0:
            emit(fmt::format("{} {} = {};", kTypes[pick(kTypes.size())], var(), expr()));
            break;
        case 1:
            emit(fmt::format("{} = {};", var(), expr()));
            break;
        case 2:
            emit(fmt::format("{} += {};", var(), operand()));
            break;
        case 3:
            emit(fmt::format("{}({}, {});", funcs_[pick(funcs_.size())], var(), operand()));
            break;
        case 4:
            emit(fmt::format("{}[{}] = {};", var(), var(), expr()));
            break;
        case 5:
            emit(fmt::format("if ({} {} {}) {{", var(), kCompare[pick(kCompare.size())], operand()));
            block(depth + 1);
            if (chance(0.3)) {
                emit("} else {");
                block(depth + 1);
            }
            emit("}");
            break;
        case 6:
            emit(fmt::format("for (int i = 0; i < {}; i++) {{", var()));
            block(depth + 1);
            emit("}");
            break;
        case 7:
            emit(fmt::format("while ({} {} {}) {{", var(), kCompare[pick(kCompare.size())], operand()));
            block(depth + 1);
            emit("}");
            break;
        default:
            emit(fmt::format("{}++;", var()));
            break;
        }
    }

    void
    block(int depth) {
        ++indent_;
        std::size_t n = 1 + pick(4);
        for (std::size_t i = 0; i < n; ++i) {
            statement(depth);
        }
        --indent_;
    }

    void
    function(const std::string& name, std::size_t target_tokens) {
        if (chance(0.3)) {
            comment();
        }
        emit(fmt::format("{} {}({} {}, {} {}) {{", kTypes[pick(kTypes.size())], name, kTypes[pick(kTypes.size())],
                         var(), kTypes[pick(kTypes.size())], var()));
        ++indent_;
        std::size_t n = 3 + pick(10);
        for (std::size_t i = 0; i < n && tokens_ < target_tokens; ++i) {
            statement(0);
        }
        emit(fmt::format("return {};", expr()));
        --indent_;
        emit("}");
        out_.push_back('\n');
    }

    rng::Engine rng_;
    const SynthConfig& cfg_;
    std::vector<std::string> vars_;
    std::vector<std::string> funcs_;
    std::string out_;
    std::size_t tokens_ = 0;
    std::size_t indent_ = 0;
};

}  // namespace

CorpusRecord
make_record(std::size_t index, const SynthConfig& cfg) {
    const std::uint64_t seed = rng::derive_seed(cfg.seed, index);
    const std::size_t repo = index / std::max<std::size_t>(cfg.files_per_repo, 1);
    const std::uint64_t repo_seed = rng::derive_seed(cfg.seed ^ 0x7265706fULL, repo);
    rng::Engine meta(rng::derive_seed(seed, 1));
    rng::Engine repo_meta(rng::derive_seed(repo_seed, 1));

    const double lo = std::log(static_cast<double>(std::max<std::size_t>(cfg.min_tokens, 1)));
    const double hi = std::log(static_cast<double>(std::max(cfg.max_tokens, cfg.min_tokens)));
    auto target = static_cast<std::size_t>(std::exp(lo + (hi - lo) * rng::uniform01(meta)));

    CorpusRecord r;
    r.id = fmt::format("doc{:07}", index);
    r.content = Writer(seed, repo_seed, cfg).document(std::max<std::size_t>(target, 1));
    r.author = fmt::format("author{:04}", rng::uniform_index(meta, 500));
    r.license = std::string(kLicenses[rng::uniform_index(repo_meta, kLicenses.size())]);
    r.origin = fmt::format("https://example.org/repo{:05}/src/file{}.c", repo, index);
    return r;
}

std::vector<CorpusRecord>
make_corpus(std::size_t count, const SynthConfig& cfg) {
    std::vector<CorpusRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(make_record(i, cfg));
    }
    return out;
}

}  // namespace provtrace::synth
