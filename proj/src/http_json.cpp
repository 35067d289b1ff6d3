#include "http_json.hpp"

#include <httplib.h>

namespace imagetalk::detail {

HttpEndpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || scheme_end == 0)
        throw Error(ErrorCode::invalid_argument, "endpoint URL needs a scheme: " + url, "endpoint_url");
    const auto host_start = scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    HttpEndpoint ep;
    ep.origin = url.substr(0, path_start);
    if (ep.origin.size() <= host_start)
        throw Error(ErrorCode::invalid_argument, "endpoint URL needs a host: " + url, "endpoint_url");
    if (path_start != std::string::npos) {
        ep.base_path = url.substr(path_start);
        while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
    }
    return ep;
}

json post_json(const HttpEndpoint& endpoint, const std::string& path, const json& body, int timeout_ms,
               const std::vector<std::pair<std::string, std::string>>& headers) {
    httplib::Client client(endpoint.origin);
    const time_t sec = timeout_ms / 1000;
    const time_t usec = (timeout_ms % 1000) * 1000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    const std::string target = endpoint.base_path + path;
    auto res = client.Post(target, hdrs, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout || err == httplib::Error::Write)
            throw Error(ErrorCode::backend_timeout,
                        "backend " + endpoint.origin + target + " timed out after " + std::to_string(timeout_ms) + " ms");
        throw Error(ErrorCode::backend_error, "backend " + endpoint.origin + target + ": " + httplib::to_string(err));
    }

    json payload;
    try {
        payload = json::parse(res->body);
    } catch (const json::exception&) {
        if (res->status < 200 || res->status >= 300)
            throw Error(ErrorCode::backend_error, "backend returned HTTP " + std::to_string(res->status));
        throw Error(ErrorCode::malformed_response, "backend response is not valid JSON");
    }
    if (payload.is_object() && payload.contains("error")) {
        const auto& e = payload["error"];
        throw Error(ErrorCode::backend_error, "backend error: " + (e.is_string() ? e.get<std::string>() : e.dump()));
    }
    if (res->status < 200 || res->status >= 300)
        throw Error(ErrorCode::backend_error, "backend returned HTTP " + std::to_string(res->status));
    if (!payload.is_object()) throw Error(ErrorCode::malformed_response, "backend response must be an object");
    return payload;
}

} // namespace imagetalk::detail
