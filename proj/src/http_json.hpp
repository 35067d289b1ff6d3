#pragma once

// Internal: JSON-over-HTTP POST used by the remote recognition and LLM
// backends.

#include "imagetalk/domain.hpp"

#include <string>
#include <utility>
#include <vector>

namespace imagetalk::detail {

struct HttpEndpoint {
    std::string origin;     // scheme://host[:port]
    std::string base_path;  // "" or "/prefix" without trailing slash
};

// Throws invalid_argument for URLs without scheme or host.
HttpEndpoint parse_endpoint(const std::string& url);

// POSTs `body` to endpoint + path. Transport timeouts map to backend_timeout,
// other transport failures and {error: ...} payloads / non-2xx statuses to
// backend_error, unparseable bodies to malformed_response.
json post_json(const HttpEndpoint& endpoint, const std::string& path, const json& body, int timeout_ms,
               const std::vector<std::pair<std::string, std::string>>& headers = {});

} // namespace imagetalk::detail
