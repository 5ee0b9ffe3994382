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

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "provtrace/error.h"

// Little-endian primitives for the on-disk index formats.
namespace provtrace::binio {

static_assert(std::endian::native == std::endian::little,
              "index serialization assumes a little-endian host");

template <typename T>
    requires std::is_arithmetic_v<T>
void
put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void
put_bytes(std::ostream& out, std::string_view bytes) {
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void
put_string(std::ostream& out, std::string_view s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    put_bytes(out, s);
}

template <typename T>
    requires std::is_arithmetic_v<T>
T
get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw FormatError("unexpected end of file");
    }
    return value;
}

inline std::string
get_bytes(std::istream& in, std::size_t n) {
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) {
        throw FormatError("unexpected end of file");
    }
    return s;
}

inline std::string
get_string(std::istream& in, std::size_t max_len = 1u << 20) {
    auto n = get<std::uint32_t>(in);
    if (n > max_len) {
        throw FormatError("string length out of range");
    }
    return get_bytes(in, n);
}

/// Reads `magic.size()` bytes and throws unless they match.
inline void
expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
    std::string got(magic.size(), '\0');
    in.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!in || got != magic) {
        throw FormatError(std::string(what) + ": bad magic, expected " + std::string(magic));
    }
}

}  // namespace provtrace::binio
