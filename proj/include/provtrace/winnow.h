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
#include <span>
#include <string_view>
#include <vector>

#include "provtrace/canon.h"

namespace provtrace {

struct WinnowConfig {
    std::uint32_t k = 5;  // k-gram length in characters
    std::uint32_t w = 4;  // window length in hashes

    /// Throws ConfigError unless k >= 1 and w >= 1.
    void
    validate() const;

    bool
    operator==(const WinnowConfig&) const = default;
};

struct Fingerprint {
    std::uint16_t hash = 0;
    std::uint32_t position = 0;  // index of the k-gram in the canonical text

    bool
    operator==(const Fingerprint&) const = default;
};

/// Winnowed fingerprints of one document. `hashes` is the sorted,
/// duplicate-free hash set every similarity computation uses; `marks` keeps
/// the selected (hash, position) pairs in position order.
struct FingerprintSet {
    std::vector<std::uint16_t> hashes;
    std::vector<Fingerprint> marks;

    bool
    empty() const {
        return hashes.empty();
    }

    bool
    operator==(const FingerprintSet&) const = default;
};

/// Low 16 bits of SHA-1 over the given bytes: digest[18] << 8 | digest[19].
std::uint16_t
sha1_low16(std::string_view bytes);

/// One hash per k-gram of `text`; empty when text is shorter than k.
std::vector<std::uint16_t>
kgram_hashes(const CanonicalText& text, std::uint32_t k);

/// Minimum of every window of `w` consecutive hashes, rightmost on ties. A
/// selection shared by consecutive windows is recorded once. When fewer than
/// `w` hashes exist the global minimum is taken.
FingerprintSet
winnow(std::span<const std::uint16_t> hashes, std::uint32_t w);

/// winnow(kgram_hashes(canonicalize(content), k), w)
FingerprintSet
fingerprint(std::string_view content, const WinnowConfig& cfg);

/// |A ∩ B| / |A ∪ B| over two sorted hash sets; 0 when both are empty.
double
jaccard(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b);

inline double
jaccard(const FingerprintSet& a, const FingerprintSet& b) {
    return jaccard(a.hashes, b.hashes);
}

/// Number of common elements of two sorted hash sets.
std::size_t
intersection_size(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b);

}  // namespace provtrace
