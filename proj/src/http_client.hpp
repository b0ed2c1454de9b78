#pragma once

#include <string>

#include "json.hpp"

namespace sdm::detail {

struct HttpTarget {
    std::string scheme_host_port;  // "https://api.example.com:443"
    std::string path_prefix;       // "/v1"
};

HttpTarget parse_base_url(const std::string& url);

/// POST a JSON body and return the parsed JSON response. Connection failures,
/// 429 and 5xx responses are retried up to retry_budget extra times; any
/// final failure throws Error(Provider).
nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const nlohmann::json& body, const std::string& api_key,
                         int retry_budget, double timeout_seconds);

}  // namespace sdm::detail
