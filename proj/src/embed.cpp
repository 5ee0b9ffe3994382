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

#include "provtrace/embed.h"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "provtrace/error.h"

namespace provtrace {

namespace {

std::uint64_t
mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t kSignDomain = 0x5bd1e9955bd1e995ULL;

}  // namespace

void
EmbedderSpec::validate() const {
    if (dim < 2) {
        throw ConfigError(fmt::format("embedding dimension must be >= 2, got {}", dim));
    }
    if (kind == EmbedderKind::fingerprint_hash) {
        wcfg.validate();
    }
}

std::string_view
to_string(EmbedderKind kind) {
    return kind == EmbedderKind::fingerprint_hash ? "fingerprint-hash" : "external";
}

EmbedderKind
embedder_kind_from_string(std::string_view name) {
    if (name == "fingerprint-hash") {
        return EmbedderKind::fingerprint_hash;
    }
    if (name == "external") {
        return EmbedderKind::external;
    }
    throw ConfigError(fmt::format("unknown embedder kind '{}'", name));
}

HashedFeature
hash_feature(std::uint16_t fingerprint_hash, std::uint64_t seed, std::uint32_t dim) {
    std::uint64_t bucket_key = mix64(seed);
    std::uint64_t sign_key = mix64(seed ^ kSignDomain);
    std::uint64_t h1 = mix64(bucket_key ^ fingerprint_hash);
    std::uint64_t h2 = mix64(sign_key ^ fingerprint_hash);
    return {static_cast<std::uint32_t>(h1 % dim), (h2 >> 63) != 0 ? -1.0f : 1.0f};
}

float
dot(const float* a, const float* b, std::size_t n) {
    float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        for (std::size_t j = 0; j < 8; ++j) {
            acc[j] += a[i + j] * b[i + j];
        }
    }
    for (; i < n; ++i) {
        acc[0] += a[i] * b[i];
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

bool
normalize(std::vector<float>& values) {
    double sq = 0.0;
    for (float v : values) {
        sq += static_cast<double>(v) * v;
    }
    if (sq == 0.0) {
        return false;
    }
    double inv = 1.0 / std::sqrt(sq);
    for (float& v : values) {
        v = static_cast<float>(v * inv);
    }
    return true;
}

Embedding
embed_fingerprints(const FingerprintSet& fp, const EmbedderSpec& spec) {
    Embedding e;
    e.values.assign(spec.dim, 0.0f);
    for (std::uint16_t h : fp.hashes) {
        auto f = hash_feature(h, spec.seed, spec.dim);
        e.values[f.bucket] += f.sign;
    }
    // Colliding features of opposite sign can cancel to an all-zero vector.
    e.zero = !normalize(e.values);
    return e;
}

Embedding
embed(std::string_view content, const EmbedderSpec& spec) {
    spec.validate();
    if (spec.kind != EmbedderKind::fingerprint_hash) {
        throw ConfigError("external embedders have no built-in encoder; import vectors instead");
    }
    return embed_fingerprints(fingerprint(content, spec.wcfg), spec);
}

double
cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError(fmt::format("cosine of {}-dim and {}-dim embeddings", a.dim(), b.dim()));
    }
    if (a.zero || b.zero) {
        return 0.0;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        s += static_cast<double>(a.values[i]) * b.values[i];
    }
    return s;
}

std::map<std::string, Embedding>
import_embeddings(std::istream& in, std::optional<std::uint32_t> expected_dim) {
    std::map<std::string, Embedding> out;
    std::optional<std::size_t> dim = expected_dim;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw FormatError(fmt::format("vector file line {}: expected '<id>\\t<floats>'", lineno));
        }
        std::string id = line.substr(0, tab);
        auto fail = [&](std::string_view why) {
            return FormatError(fmt::format("vector file line {} (id '{}'): {}", lineno, id, why));
        };

        Embedding e;
        const char* p = line.data() + tab + 1;
        const char* end = line.data() + line.size();
        while (true) {
            float v = 0.0f;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc() || !std::isfinite(v)) {
                throw fail("malformed float component");
            }
            e.values.push_back(v);
            if (next == end) {
                break;
            }
            if (*next != ',') {
                throw fail("components must be separated by commas");
            }
            p = next + 1;
        }

        if (!dim) {
            dim = e.values.size();
        }
        if (e.values.size() != *dim) {
            throw fail(fmt::format("dimension mismatch: {} components, expected {}", e.values.size(), *dim));
        }
        if (*dim < 2) {
            throw fail("dimension must be >= 2");
        }
        e.zero = !normalize(e.values);
        if (!out.emplace(id, std::move(e)).second) {
            throw fail("duplicate id");
        }
    }
    return out;
}

std::map<std::string, Embedding>
import_embeddings_file(const std::string& path, std::optional<std::uint32_t> expected_dim) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError(fmt::format("cannot open vector file '{}'", path));
    }
    return import_embeddings(in, expected_dim);
}

}  // namespace provtrace
