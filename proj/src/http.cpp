#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "revmine/http.hpp"

#include <cstdlib>
#include <regex>

#include "revmine/errors.hpp"

namespace revmine::http {

namespace {

struct SplitUrl {
    std::string origin;
    std::string prefix;
};

SplitUrl split_url(const std::string& base_url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(base_url, m, re))
        throw ProviderUnreachable("malformed endpoint URL '" + base_url + "'");
    std::string prefix = m[2].matched ? m[2].str() : "";
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {m[1].str(), prefix};
}

}  // namespace

Response post_json(const std::string& base_url, const std::string& path, const std::string& body,
                   const Headers& headers, double timeout_seconds) {
    auto url = split_url(base_url);
    httplib::Client client(url.origin);
    auto secs = static_cast<time_t>(timeout_seconds);
    auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto result = client.Post(url.prefix + path, hdrs, body, "application/json");
    if (!result)
        throw ProviderUnreachable("POST " + base_url + path + " failed: " +
                                  httplib::to_string(result.error()));
    return {result->status, result->body};
}

Headers bearer_from_env(const std::string& env_var) {
    if (env_var.empty()) return {};
    const char* token = std::getenv(env_var.c_str());
    if (token == nullptr || *token == '\0') return {};
    return {{"Authorization", std::string("Bearer ") + token}};
}

}  // namespace revmine::http
