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

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "provtrace/winnow.h"

namespace provtrace {

/// Unit-norm dense vector. An unembeddable input (no fingerprints) yields an
/// all-zero vector with `zero` set; it is never normalized.
struct Embedding {
    std::vector<float> values;
    bool zero = false;

    std::size_t
    dim() const {
        return values.size();
    }

    bool
    operator==(const Embedding&) const = default;
};

enum class EmbedderKind { fingerprint_hash, external };

struct EmbedderSpec {
    static constexpr std::uint32_t kDefaultDim = 1024;

    EmbedderKind kind = EmbedderKind::fingerprint_hash;
    std::uint32_t dim = kDefaultDim;
    std::uint64_t seed = 1;
    WinnowConfig wcfg;
    std::string source;  // vector file identifier for external embedders

    void
    validate() const;
};

std::string_view
to_string(EmbedderKind kind);

EmbedderKind
embedder_kind_from_string(std::string_view name);

/// Bucket and sign of one fingerprint hash under `seed`. Two independent
/// seeded 64-bit mixes; exposed so tests can check bucket disjointness.
struct HashedFeature {
    std::uint32_t bucket;
    float sign;
};

HashedFeature
hash_feature(std::uint16_t fingerprint_hash, std::uint64_t seed, std::uint32_t dim);

/// Signed feature hashing of the fingerprint hash set, L2-normalized.
Embedding
embed_fingerprints(const FingerprintSet& fp, const EmbedderSpec& spec);

/// Fingerprints `content` with spec.wcfg and embeds it. Throws ConfigError
/// for external embedder specs, which have no built-in encoder.
Embedding
embed(std::string_view content, const EmbedderSpec& spec);

/// Dot product, zero for zero-flagged inputs. Throws DimensionError on a
/// dimension mismatch.
double
cosine(const Embedding& a, const Embedding& b);

/// Fixed-order float dot product shared by every vector kernel so that
/// results do not depend on the call site.
float
dot(const float* a, const float* b, std::size_t n);

/// Scales to unit norm in place; returns false (and leaves the vector
/// untouched) if it is all zeros.
bool
normalize(std::vector<float>& values);

/// Reads `<doc_id>\t<comma-separated floats>` lines. Every vector must have
/// the same dimension (equal to `expected_dim` when given); vectors are
/// renormalized. Throws FormatError naming the line and id on malformed
/// records, duplicate ids, or dimension mismatches.
std::map<std::string, Embedding>
import_embeddings(std::istream& in, std::optional<std::uint32_t> expected_dim = std::nullopt);

std::map<std::string, Embedding>
import_embeddings_file(const std::string& path, std::optional<std::uint32_t> expected_dim = std::nullopt);

}  // namespace provtrace
