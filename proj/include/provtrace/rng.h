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
#include <random>

// Platform-independent draws. std::mt19937_64 is fully specified by the
// standard; the std distributions are not, so they are avoided wherever a
// result is persisted or compared across runs.
namespace provtrace::rng {

using Engine = std::mt19937_64;

inline std::uint64_t
splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent child seed for stream `index` of `seed`.
inline std::uint64_t
derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform in [0, 1) with 53 random bits.
inline double
uniform01(Engine& e) {
    return static_cast<double>(e() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n); n must be > 0. Rejection sampling, unbiased.
inline std::uint64_t
uniform_index(Engine& e, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t x = e();
    while (x >= limit) {
        x = e();
    }
    return x % n;
}

/// Standard normal via Box-Muller on uniform01 draws.
double
normal(Engine& e);

}  // namespace provtrace::rng
