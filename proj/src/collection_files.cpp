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


#include "collection_files.h"

#include <fmt/format.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "provtrace/binio.h"
#include "provtrace/collection.h"
#include "provtrace/error.h"

namespace provtrace::detail {

std::uint64_t
fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string
fnv1a64_hex(std::string_view bytes) {
    return fmt::format("{:016x}", fnv1a64(bytes));
}

std::string
read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(fmt::format("cannot open '{}'", path.string()));
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

nlohmann::json
read_manifest(const std::filesystem::path& dir) {
    auto path = dir / Collection::kManifestFile;
    if (!std::filesystem::is_directory(dir)) {
        throw FormatError(fmt::format("'{}' is not a collection directory", dir.string()));
    }
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_file_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
    if (!m.is_object() || m.value("format", std::string()) != "provtrace-collection") {
        throw FormatError(fmt::format("{}: not a provtrace collection manifest", path.string()));
    }
    if (!m.contains("version") || !m["version"].is_number_integer() ||
        m["version"].get<int>() != Collection::kFormatVersion) {
        throw FormatError(fmt::format("{}: unsupported collection version", path.string()));
    }
    if (!m.contains("config")) {
        throw FormatError(fmt::format("{}: missing config", path.string()));
    }
    return m;
}

StoredEmbeddings
read_embeddings(const std::filesystem::path& path, std::uint32_t expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(fmt::format("cannot open '{}'", path.string()));
    }
    binio::expect_magic(in, kEmbeddingsMagic, "embeddings");
    if (binio::get<std::uint32_t>(in) != kEmbeddingsVersion) {
        throw FormatError("embeddings: unsupported version");
    }
    auto dim = binio::get<std::uint32_t>(in);
    if (dim != expected_dim) {
        throw FormatError(fmt::format("embeddings: dimension {} but manifest says {}", dim, expected_dim));
    }
    auto count = binio::get<std::uint64_t>(in);
    StoredEmbeddings out;
    for (std::uint64_t i = 0; i < count; ++i) {
        auto id = binio::get_string(in);
        auto zero = binio::get<std::uint8_t>(in);
        out.ids.push_back(id);
        if (zero != 0) {
            out.zero_ids.push_back(id);
            continue;
        }
        std::vector<float> v(dim);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(dim * sizeof(float)));
        if (!in) {
            throw FormatError("embeddings: unexpected end of file");
        }
        if (!out.vectors.emplace(id, std::move(v)).second) {
            throw FormatError(fmt::format("embeddings: duplicate id '{}'", id));
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError("embeddings: trailing bytes");
    }
    return out;
}

}  // namespace provtrace::detail
