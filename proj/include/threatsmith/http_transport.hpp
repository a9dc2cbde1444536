#pragma once

#include "threatsmith/vuln_source.hpp"

#include <httplib.h>

#include <chrono>
#include <string>

namespace threatsmith {

/// Transport over cpp-httplib. https URLs need CPPHTTPLIB_OPENSSL_SUPPORT.
class HttplibTransport : public Transport {
public:
    explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds{30})
        : timeout_(timeout) {}

    HttpResponse get(const std::string& url, const HttpHeaders& headers) override {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw NetworkFailure("not an absolute URL: " + url);
        const auto path_start = url.find('/', scheme_end + 3);
        const auto origin = url.substr(0, path_start);
        const auto path = path_start == std::string::npos ? std::string("/") : url.substr(path_start);

        httplib::Client client(origin);
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_follow_location(true);
        if (!client.is_valid()) throw NetworkFailure("cannot create client for " + origin);

        httplib::Headers h(headers.begin(), headers.end());
        auto result = client.Get(path, h);
        if (!result) throw NetworkFailure(origin + ": " + httplib::to_string(result.error()));
        return {result->status, result->body};
    }

private:
    std::chrono::seconds timeout_;
};

}  // namespace threatsmith
