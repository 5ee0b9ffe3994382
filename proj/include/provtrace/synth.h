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
#include <cstdint>
#include <vector>

#include "provtrace/collection.h"

// Generator for C-like code snippets with provenance metadata, used by the
// benchmarks and the end-to-end tests. Record i depends only on (seed, i), so
// the corpus of size N is a prefix of the corpus of size N + 1.
namespace provtrace::synth {

struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t min_tokens = 40;  // token counts are log-uniform in [min, max]
    std::size_t max_tokens = 1200;
    double comment_rate = 0.08;  // per statement
    std::size_t files_per_repo = 16;  // consecutive records share a repository
    double shared_name_rate = 0.7;  // identifiers taken from the repository pool
};

CorpusRecord
make_record(std::size_t index, const SynthConfig& cfg);

std::vector<CorpusRecord>
make_corpus(std::size_t count, const SynthConfig& cfg);

}  // namespace provtrace::synth
