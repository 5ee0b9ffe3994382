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

#include "provtrace/canon.h"

#include <fmt/format.h>

#include <stdexcept>

#include "provtrace/error.h"

namespace provtrace {

namespace {

constexpr char32_t kReplacementChar = 0xFFFD;

std::size_t
sequence_length(unsigned char lead) {
    if (lead < 0x80) {
        return 1;
    }
    if ((lead & 0xE0) == 0xC0) {
        return 2;
    }
    if ((lead & 0xF0) == 0xE0) {
        return 3;
    }
    if ((lead & 0xF8) == 0xF0) {
        return 4;
    }
    return 0;
}

}  // namespace

bool
is_valid_utf8(std::string_view bytes) {
    std::size_t i = 0;
    while (i < bytes.size()) {
        auto lead = static_cast<unsigned char>(bytes[i]);
        std::size_t len = sequence_length(lead);
        if (len == 0 || i + len > bytes.size()) {
            return false;
        }
        char32_t cp = len == 1 ? lead : (lead & (0x7F >> len));
        for (std::size_t j = 1; j < len; ++j) {
            auto cont = static_cast<unsigned char>(bytes[i + j]);
            if ((cont & 0xC0) != 0x80) {
                return false;
            }
            cp = (cp << 6) | (cont & 0x3F);
        }
        // overlong forms, surrogates, out of range
        static constexpr char32_t kMinForLength[] = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < kMinForLength[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            return false;
        }
        i += len;
    }
    return true;
}

SourceText
SourceText::from_utf8(std::string bytes, std::optional<std::string> language_hint) {
    if (!is_valid_utf8(bytes)) {
        throw FormatError("content is not valid UTF-8");
    }
    return SourceText{std::move(bytes), std::move(language_hint)};
}

char32_t
decode_utf8(std::string_view s, std::size_t& pos) {
    auto lead = static_cast<unsigned char>(s[pos]);
    std::size_t len = sequence_length(lead);
    if (len == 0 || pos + len > s.size()) {
        ++pos;
        return kReplacementChar;
    }
    if (len == 1) {
        ++pos;
        return lead;
    }
    char32_t cp = lead & (0x7F >> len);
    for (std::size_t j = 1; j < len; ++j) {
        cp = (cp << 6) | (static_cast<unsigned char>(s[pos + j]) & 0x3F);
    }
    pos += len;
    return cp;
}

void
append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool
is_word_char(char32_t c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_';
}

bool
is_whitespace(char32_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string
CanonicalText::utf8() const {
    std::string out;
    out.reserve(chars.size());
    for (char32_t c : chars) {
        append_utf8(out, c);
    }
    return out;
}

CanonicalText
canonicalize(std::string_view content) {
    CanonicalText out;
    out.chars.reserve(content.size());
    out.origin_map.reserve(content.size());

    std::size_t i = 0;
    const std::size_t n = content.size();
    while (i < n) {
        char c = content[i];
        if (c == '#' || (c == '/' && i + 1 < n && content[i + 1] == '/')) {
            while (i < n && content[i] != '\n') {
                ++i;
            }
            continue;
        }
        if (c == '/' && i + 1 < n && content[i + 1] == '*') {
            auto close = content.find("*/", i + 2);
            i = close == std::string_view::npos ? n : close + 2;
            continue;
        }
        std::size_t start = i;
        char32_t cp = decode_utf8(content, i);
        if (is_whitespace(cp)) {
            continue;
        }
        out.chars.push_back(cp);
        out.origin_map.push_back(start);
    }
    return out;
}

TokenStream
tokenize(std::string_view content) {
    TokenStream ts;
    ts.source = std::string(content);

    std::size_t i = 0;
    const std::size_t n = content.size();
    while (i < n) {
        std::size_t start = i;
        char32_t cp = decode_utf8(content, i);
        if (is_whitespace(cp)) {
            continue;
        }
        if (is_word_char(cp)) {
            while (i < n && is_word_char(static_cast<unsigned char>(content[i]))) {
                ++i;
            }
            ts.tokens.push_back({std::string(content.substr(start, i - start)), start, TokenKind::word});
        } else {
            ts.tokens.push_back({std::string(content.substr(start, i - start)), start, TokenKind::symbol});
        }
    }
    return ts;
}

std::string
extract_window(const TokenStream& ts, std::size_t start, std::size_t length) {
    if (length == 0 || start >= ts.tokens.size() || length > ts.tokens.size() - start) {
        throw std::out_of_range(fmt::format(
            "token window [{}, {}) outside stream of {} tokens", start, start + length, ts.tokens.size()));
    }
    std::size_t begin = ts.tokens[start].offset;
    std::size_t end = ts.tokens[start + length - 1].end();
    return ts.source.substr(begin, end - begin);
}

}  // namespace provtrace
