// Copyright 2026 The CIER Authors.
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

#include <cstdlib>
#include <string>

#include <httplib.h>

#include "cier/judge/judge.hpp"

namespace cier::judge {

Transport http_transport(const JudgeConfig& cfg) {
    const std::string& url = cfg.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("judge endpoint needs a scheme: " + url);
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ValidationError("unsupported judge endpoint scheme: " + scheme);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") throw ValidationError("https judge endpoints need a build with OpenSSL");
#endif
    const auto path_begin = url.find('/', scheme_end + 3);
    const std::string base = path_begin == std::string::npos ? url : url.substr(0, path_begin);
    const std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const auto timeout = std::chrono::duration<double>(cfg.timeout_s);
    const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);

    return [=](const std::string& body) -> std::string {
        httplib::Client client(base);
        client.set_connection_timeout(timeout_us);
        client.set_read_timeout(timeout_us);
        client.set_write_timeout(timeout_us);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) throw TransportError(base + path + ": " + httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300) {
            throw TransportError(base + path + ": HTTP " + std::to_string(res->status));
        }
        return res->body;
    };
}

}  // namespace cier::judge
