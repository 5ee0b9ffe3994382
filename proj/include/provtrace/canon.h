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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace provtrace {

/// Raw source text as ingested. Content is UTF-8; construct through
/// SourceText::from_utf8 to get validation.
struct SourceText {
    std::string content;
    std::optional<std::string> language_hint;

    /// Throws FormatError if `bytes` is not well-formed UTF-8.
    static SourceText
    from_utf8(std::string bytes, std::optional<std::string> language_hint = std::nullopt);
};

bool
is_valid_utf8(std::string_view bytes);

/// Comment- and whitespace-free form of a source text. `chars` holds Unicode
/// code points; origin_map[i] is the byte offset of chars[i] in the original
/// content.
struct CanonicalText {
    std::u32string chars;
    std::vector<std::size_t> origin_map;

    std::size_t
    size() const {
        return chars.size();
    }

    /// chars re-encoded as UTF-8.
    std::string
    utf8() const;
};

enum class TokenKind { word, symbol };

struct Token {
    std::string text;
    std::size_t offset = 0;  // byte offset into the tokenized content
    TokenKind kind = TokenKind::word;

    std::size_t
    end() const {
        return offset + text.size();
    }
};

/// Tokens of a text plus the text itself, so windows can be cut back out of
/// the original with interior whitespace intact.
struct TokenStream {
    std::string source;
    std::vector<Token> tokens;

    std::size_t
    size() const {
        return tokens.size();
    }
};

/// Strips `//` and `#` line comments, `/* */` block comments and all
/// whitespace. String literals get no special treatment.
CanonicalText
canonicalize(std::string_view content);

/// Words are maximal runs of [A-Za-z0-9_]; any other non-whitespace code
/// point is a one-character symbol token. Comments are not stripped.
TokenStream
tokenize(std::string_view content);

/// Original text from the start of token `start` to the end of token
/// `start + length - 1`. Throws std::out_of_range on a bad range.
std::string
extract_window(const TokenStream& ts, std::size_t start, std::size_t length);

bool
is_word_char(char32_t c);

bool
is_whitespace(char32_t c);

/// Decodes one code point starting at `pos`; advances `pos`. Input must be
/// valid UTF-8.
char32_t
decode_utf8(std::string_view s, std::size_t& pos);

void
append_utf8(std::string& out, char32_t cp);

}  // namespace provtrace
