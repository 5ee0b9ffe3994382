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

#include <fstream>
#include <istream>
#include <ostream>

#include "provtrace/collection.h"
#include "provtrace/error.h"

namespace provtrace {

namespace {

nlohmann::json
optional_json(const std::optional<std::string>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<std::string>
optional_field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw FormatError(fmt::format("field '{}' must be a string or null", key));
    }
    return it->get<std::string>();
}

}  // namespace

nlohmann::json
to_json(const CorpusRecord& r) {
    return nlohmann::json{{"id", r.id},
                          {"content", r.content},
                          {"author", optional_json(r.author)},
                          {"license", optional_json(r.license)},
                          {"origin", optional_json(r.origin)}};
}

CorpusRecord
record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw FormatError("record must be a JSON object");
    }
    auto id = j.find("id");
    if (id == j.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) {
        throw FormatError("record needs a non-empty string 'id'");
    }
    auto content = j.find("content");
    if (content == j.end() || !content->is_string()) {
        throw FormatError(fmt::format("record '{}' needs a string 'content'", id->get<std::string>()));
    }
    CorpusRecord r;
    r.id = id->get<std::string>();
    r.content = content->get<std::string>();
    r.author = optional_field(j, "author");
    r.license = optional_field(j, "license");
    r.origin = optional_field(j, "origin");
    return r;
}

CorpusLoad
read_corpus_jsonl(std::istream& in) {
    CorpusLoad load;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            auto j = nlohmann::json::parse(line);
            load.records.push_back(record_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            load.rejects.push_back({lineno, "", fmt::format("malformed JSON: {}", e.what())});
        } catch (const FormatError& e) {
            std::string id;
            try {
                auto j = nlohmann::json::parse(line);
                if (j.is_object() && j.contains("id") && j["id"].is_string()) {
                    id = j["id"].get<std::string>();
                }
            } catch (...) {
            }
            load.rejects.push_back({lineno, id, e.what()});
        }
    }
    return load;
}

CorpusLoad
read_corpus_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(fmt::format("cannot open corpus file '{}'", path.string()));
    }
    return read_corpus_jsonl(in);
}

void
write_corpus_jsonl(std::ostream& out, std::span<const CorpusRecord> records) {
    for (const auto& r : records) {
        out << to_json(r).dump() << '\n';
    }
}

}  // namespace provtrace
