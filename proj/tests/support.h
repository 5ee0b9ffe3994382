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

#include <fmt/format.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "provtrace/collection.h"
#include "provtrace/rng.h"

namespace provtrace::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() / fmt::format("provtrace-test-{}-{}", ::getpid(), counter++);
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir&
    operator=(const TempDir&) = delete;

    const std::filesystem::path&
    path() const {
        return path_;
    }
    std::filesystem::path
    operator/(std::string_view name) const {
        return path_ / name;
    }

private:
    std::filesystem::path path_;
};

inline Embedding
random_unit(std::uint32_t dim, rng::Engine& e) {
    Embedding v;
    v.values.resize(dim);
    for (auto& x : v.values) {
        x = static_cast<float>(rng::normal(e));
    }
    normalize(v.values);
    return v;
}

/// Printable ASCII text that contains no comment openers and no whitespace
/// other than single spaces, so reformatting it cannot change its meaning.
inline std::string
plain_code(rng::Engine& e, std::size_t len) {
    static constexpr std::string_view kAlphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_(){}[];,.=+-<>!&|*%";
    std::string s;
    while (s.size() < len) {
        char c = kAlphabet[rng::uniform_index(e, kAlphabet.size())];
        if (!s.empty() && s.back() == '/' && (c == '/' || c == '*')) {
            continue;
        }
        s.push_back(c);
    }
    return s;
}

inline std::string
read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline CorpusRecord
record(std::string id, std::string content) {
    CorpusRecord r;
    r.id = std::move(id);
    r.content = std::move(content);
    return r;
}

}  // namespace provtrace::test
