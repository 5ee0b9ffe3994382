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
#include <httplib.h>

#include <limits>

#include "provtrace/cli.h"
#include "provtrace/error.h"

namespace provtrace {

namespace {

nlohmann::json
error_body(std::string_view kind, std::string_view message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

void
reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    // Parser messages can quote the offending bytes, which may not be UTF-8.
    res.set_content(body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
}

// Reads an optional positive integer field; throws std::invalid_argument.
std::size_t
count_field(const nlohmann::json& body, const char* key, std::size_t fallback, std::size_t min, std::size_t max) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null()) {
        return fallback;
    }
    if (!it->is_number_integer()) {
        throw std::invalid_argument(fmt::format("'{}' must be an integer", key));
    }
    auto v = it->get<std::int64_t>();
    if (v < static_cast<std::int64_t>(min) || v > static_cast<std::int64_t>(max)) {
        throw std::invalid_argument(fmt::format("'{}' must be in [{}, {}]", key, min, max));
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

struct TraceService::Impl {
    std::shared_ptr<const Collection> collection;
    ServiceOptions opts;
    httplib::Server server;

    void
    routes() {
        // Room for JSON escaping of a maximal code payload; anything larger is
        // refused by the server with 413 before it is buffered.
        server.set_payload_max_length(opts.max_code_bytes * 6 + 4096);

        server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            reply(res, 200, {{"status", "ok"}, {"version", kVersion}});
        });

        server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
            const auto& c = *collection;
            nlohmann::json sizes = nlohmann::json::object();
            if (auto files = c.manifest().find("files"); files != c.manifest().end()) {
                for (const auto& [name, entry] : files->items()) {
                    sizes[name] = entry.at("bytes");
                }
            }
            reply(res, 200,
                  {{"documents", c.size()},
                   {"graph_nodes", c.ann().size()},
                   {"zero_embedding", c.zero_embedding_ids().size()},
                   {"fingerprint_postings", c.moss().total_postings()},
                   {"config", to_json(c.config())},
                   {"index_bytes", sizes},
                   {"version", kVersion}});
        });

        server.Post("/trace", [this](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::exception& e) {
                reply(res, 400, error_body("bad_request", fmt::format("malformed JSON: {}", e.what())));
                return;
            }
            if (!body.is_object() || !body.contains("code") || !body["code"].is_string()) {
                reply(res, 400, error_body("bad_request", "body must be an object with a string 'code'"));
                return;
            }
            const auto& code = body["code"].get_ref<const std::string&>();
            if (code.size() > opts.max_code_bytes) {
                reply(res, 413,
                      error_body("too_large", fmt::format("code is {} bytes, limit is {}", code.size(),
                                                          opts.max_code_bytes)));
                return;
            }
            if (code.empty()) {
                reply(res, 400, error_body("bad_request", "'code' is empty"));
                return;
            }
            if (!is_valid_utf8(code)) {
                reply(res, 400, error_body("bad_request", "'code' is not valid UTF-8"));
                return;
            }
            std::size_t candidates = 0, top_k = 0;
            try {
                candidates = count_field(body, "candidates", 100, 1, opts.max_candidates);
                top_k = count_field(body, "top_k", 10, 0, opts.max_candidates);
            } catch (const std::invalid_argument& e) {
                reply(res, 400, error_body("bad_request", e.what()));
                return;
            }
            reply(res, 200, trace_response_json(collection->trace(code, candidates, top_k)));
        });

        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string what = "unknown error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                what = e.what();
            } catch (...) {
            }
            reply(res, 500, error_body("internal", what));
        });

        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                std::string kind = res.status == 413 ? "too_large" : res.status == 404 ? "not_found" : "http";
                res.set_content(error_body(kind, fmt::format("HTTP {}", res.status)).dump(), "application/json");
            }
        });
    }
};

TraceService::TraceService(std::shared_ptr<const Collection> collection, ServiceOptions opts)
    : impl_(std::make_unique<Impl>()) {
    impl_->collection = std::move(collection);
    impl_->opts = opts;
    impl_->routes();
}

TraceService::~TraceService() = default;

int
TraceService::bind(const std::string& host, int port) {
    if (port == 0) {
        return impl_->server.bind_to_any_port(host);
    }
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool
TraceService::listen() {
    return impl_->server.listen_after_bind();
}

void
TraceService::stop() {
    impl_->server.stop();
}

void
TraceService::wait_until_ready() const {
    impl_->server.wait_until_ready();
}

}  // namespace provtrace
