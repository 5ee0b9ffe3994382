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
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "provtrace/collection.h"

namespace provtrace {

inline constexpr std::string_view kVersion = "0.1.0";

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int data = 2;
inline constexpr int internal = 3;
}  // namespace exit_code

/// Body shared by `provtrace trace` and POST /trace.
nlohmann::json
trace_response_json(const RankedResult& result);

/// Aligned-column rendering of a trace result.
std::string
trace_table(const RankedResult& result);

struct ServiceOptions {
    std::size_t max_code_bytes = 1u << 20;
    std::size_t max_candidates = 100000;
};

/**
 * Read-only HTTP front end for one loaded collection.
 *
 *   POST /trace   {"code": str, "candidates": int = 100, "top_k": int = 10}
 *   GET  /health  {"status": "ok", "version": str}
 *   GET  /stats   document count, configuration, index file sizes
 *
 * Malformed requests get 400, code over max_code_bytes gets 413; error
 * bodies are {"error": {"kind": str, "message": str}}.
 */
class TraceService {
public:
    TraceService(std::shared_ptr<const Collection> collection, ServiceOptions opts = {});
    ~TraceService();

    TraceService(const TraceService&) = delete;
    TraceService&
    operator=(const TraceService&) = delete;

    /// Binds host:port (port 0 picks a free one) and returns the port, or -1.
    int
    bind(const std::string& host, int port);

    /// Serves until stop(); call after bind().
    bool
    listen();

    void
    stop();

    void
    wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Entry point of the `provtrace` tool. Output goes to `out`, diagnostics
/// and structured errors to `err`; `in` feeds code read from stdin.
int
run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace provtrace
