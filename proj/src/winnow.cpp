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

#include "provtrace/winnow.h"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>

#include "provtrace/error.h"

namespace provtrace {

namespace {

// Fetching the digest and allocating a context per k-gram costs ~4x the
// hash itself, so each thread keeps one of each.
class Sha1Context {
public:
    Sha1Context() : md_(EVP_MD_fetch(nullptr, "SHA1", nullptr)), ctx_(EVP_MD_CTX_new()) {
        if (md_ == nullptr || ctx_ == nullptr) {
            throw Error("OpenSSL SHA-1 digest unavailable");
        }
    }

    ~Sha1Context() {
        EVP_MD_CTX_free(ctx_);
        EVP_MD_free(md_);
    }

    Sha1Context(const Sha1Context&) = delete;
    Sha1Context&
    operator=(const Sha1Context&) = delete;

    std::uint16_t
    low16(std::string_view bytes) {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestInit_ex2(ctx_, md_, nullptr) != 1 ||
            EVP_DigestUpdate(ctx_, bytes.data(), bytes.size()) != 1 ||
            EVP_DigestFinal_ex(ctx_, digest, &len) != 1 || len != 20) {
            throw Error("SHA-1 computation failed");
        }
        return static_cast<std::uint16_t>((digest[18] << 8) | digest[19]);
    }

private:
    EVP_MD* md_;
    EVP_MD_CTX* ctx_;
};

Sha1Context&
thread_sha1() {
    thread_local Sha1Context ctx;
    return ctx;
}

}  // namespace

void
WinnowConfig::validate() const {
    if (k < 1 || w < 1) {
        throw ConfigError(fmt::format("winnow config requires k >= 1 and w >= 1 (k={}, w={})", k, w));
    }
}

std::uint16_t
sha1_low16(std::string_view bytes) {
    return thread_sha1().low16(bytes);
}

std::vector<std::uint16_t>
kgram_hashes(const CanonicalText& text, std::uint32_t k) {
    std::vector<std::uint16_t> out;
    if (k == 0 || text.size() < k) {
        return out;
    }
    const std::size_t count = text.size() - k + 1;
    out.reserve(count);

    auto& sha = thread_sha1();
    std::string gram;
    for (std::size_t i = 0; i < count; ++i) {
        gram.clear();
        for (std::size_t j = 0; j < k; ++j) {
            append_utf8(gram, text.chars[i + j]);
        }
        out.push_back(sha.low16(gram));
    }
    return out;
}

FingerprintSet
winnow(std::span<const std::uint16_t> hashes, std::uint32_t w) {
    FingerprintSet out;
    if (hashes.empty()) {
        return out;
    }
    if (w == 0) {
        throw ConfigError("winnow window must be >= 1");
    }

    auto rightmost_min = [&](std::size_t begin, std::size_t end) {
        std::size_t best = begin;
        for (std::size_t i = begin + 1; i < end; ++i) {
            if (hashes[i] <= hashes[best]) {
                best = i;
            }
        }
        return best;
    };

    if (hashes.size() < w) {
        std::size_t pos = rightmost_min(0, hashes.size());
        out.marks.push_back({hashes[pos], static_cast<std::uint32_t>(pos)});
    } else {
        std::size_t last = hashes.size();  // sentinel: nothing recorded yet
        for (std::size_t start = 0; start + w <= hashes.size(); ++start) {
            std::size_t pos = rightmost_min(start, start + w);
            if (pos != last) {
                out.marks.push_back({hashes[pos], static_cast<std::uint32_t>(pos)});
                last = pos;
            }
        }
    }

    out.hashes.reserve(out.marks.size());
    for (const auto& m : out.marks) {
        out.hashes.push_back(m.hash);
    }
    std::sort(out.hashes.begin(), out.hashes.end());
    out.hashes.erase(std::unique(out.hashes.begin(), out.hashes.end()), out.hashes.end());
    return out;
}

FingerprintSet
fingerprint(std::string_view content, const WinnowConfig& cfg) {
    cfg.validate();
    auto hashes = kgram_hashes(canonicalize(content), cfg.k);
    return winnow(hashes, cfg.w);
}

std::size_t
intersection_size(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b) {
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t common = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++common;
            ++i;
            ++j;
        }
    }
    return common;
}

double
jaccard(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b) {
    if (a.empty() && b.empty()) {
        return 0.0;
    }
    std::size_t common = intersection_size(a, b);
    std::size_t uni = a.size() + b.size() - common;
    return static_cast<double>(common) / static_cast<double>(uni);
}

}  // namespace provtrace
