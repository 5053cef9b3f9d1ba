#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bankaudit {

struct HttpResponse {
  int status = 0;
  std::string body;
};

// POSTs `body` as application/json to an absolute http(s) URL. Throws
// Error(InvalidArgument) for unparseable URLs and Error(IoFailure) when no
// response arrives; HTTP error statuses are returned, not thrown.
HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            std::chrono::milliseconds timeout);

std::string base64_encode(std::span<const std::byte> data);

}  // namespace bankaudit
