#pragma once

#include <string>
#include <utility>
#include <vector>

namespace revmine::http {

struct Response {
    int status = 0;
    std::string body;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

// POSTs a JSON body to `base_url` + `path`. `base_url` may carry a path
// prefix (e.g. "https://api.example.com/openai/v1"). Throws
// ProviderUnreachable on transport failure; HTTP error statuses are returned.
Response post_json(const std::string& base_url, const std::string& path, const std::string& body,
                   const Headers& headers, double timeout_seconds);

// "Authorization: Bearer <token>" from the named environment variable, or no
// header when the variable is unset or empty.
Headers bearer_from_env(const std::string& env_var);

}  // namespace revmine::http
