// HTTPS transport for the neighbor client, built on cpp-httplib with OpenSSL.
// Only the command-line tool includes this header.
#pragma once

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "sept/llm.hpp"

namespace sept {

inline Transport http_transport() {
    return [](const std::string& url, const std::string& body, const std::map<std::string, std::string>& headers,
              double timeout_seconds) -> std::string {
        const auto scheme_end = url.find("://");
        require(scheme_end != std::string::npos, ErrorKind::config, "endpoint '" + url + "' lacks a scheme");
        const auto path_begin = url.find('/', scheme_end + 3);
        const std::string origin = url.substr(0, path_begin);
        const std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

        httplib::Client client(origin);
        const auto secs = static_cast<time_t>(timeout_seconds);
        const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers h;
        std::string content_type = "application/json";
        for (const auto& [k, v] : headers) {
            if (k == "Content-Type") content_type = v;
            else h.emplace(k, v);
        }
        const auto res = client.Post(path, h, body, content_type);
        if (!res) fail(ErrorKind::network, "request to " + origin + " failed: " + httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300)
            fail(ErrorKind::network, "request to " + origin + " returned HTTP " + std::to_string(res->status));
        return res->body;
    };
}

}  // namespace sept
