#include "http_client.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"
#include "sdm/error.hpp"

namespace sdm::detail {

HttpTarget parse_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorKind::Config, "endpoint URL lacks a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    HttpTarget target;
    if (path_start == std::string::npos) {
        target.scheme_host_port = url;
    } else {
        target.scheme_host_port = url.substr(0, path_start);
        target.path_prefix = url.substr(path_start);
    }
    while (!target.path_prefix.empty() && target.path_prefix.back() == '/') {
        target.path_prefix.pop_back();
    }
    return target;
}

nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const nlohmann::json& body, const std::string& api_key,
                         int retry_budget, double timeout_seconds) {
    const HttpTarget target = parse_base_url(base_url);
    httplib::Client client(target.scheme_host_port);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(timeout_seconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    const std::string payload = body.dump();
    const std::string full_path = target.path_prefix + path;
    std::string last_error;
    for (int attempt = 0; attempt <= retry_budget; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100 << std::min(attempt, 6)));
        }
        auto res = client.Post(full_path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::Provider, std::string("malformed JSON response: ") + e.what());
            }
        }
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        if (res->status != 429 && res->status < 500) break;  // auth and request errors are final
    }
    throw Error(ErrorKind::Provider, base_url + path + ": " + last_error);
}

}  // namespace sdm::detail
