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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

// Helpers shared by collection load/save and the integrity audit.
namespace provtrace::detail {

inline constexpr std::string_view kEmbeddingsMagic = "EMBEDS01";
inline constexpr std::uint32_t kEmbeddingsVersion = 1;

std::uint64_t
fnv1a64(std::string_view bytes);

std::string
fnv1a64_hex(std::string_view bytes);

std::string
read_file_bytes(const std::filesystem::path& path);

/// Parses manifest.json and checks its format tag and version.
nlohmann::json
read_manifest(const std::filesystem::path& dir);

struct StoredEmbeddings {
    std::vector<std::string> ids;  // file order
    std::map<std::string, std::vector<float>> vectors;
    std::vector<std::string> zero_ids;
};

StoredEmbeddings
read_embeddings(const std::filesystem::path& path, std::uint32_t expected_dim);

}  // namespace provtrace::detail
