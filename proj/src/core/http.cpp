#include "bankaudit/core/http.hpp"

#include <httplib.h>
#include <openssl/evp.h>
#include <regex>

#include "bankaudit/core/error.hpp"

namespace bankaudit {

HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            std::chrono::milliseconds timeout) {
  static const std::regex re(R"(^(https?://[^/?#]+)([^#]*)$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, re)) fail(ErrorKind::InvalidArgument, "not an http(s) URL: '" + url + "'");
  const std::string origin = m[1];
  std::string path = m[2];
  if (path.empty()) path = "/";

  httplib::Client cli(origin);
  if (!cli.is_valid()) fail(ErrorKind::InvalidArgument, "unsupported URL: '" + url + "'");
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = cli.Post(path, h, body, "application/json");
  if (!res) fail(ErrorKind::IoFailure, "POST " + url + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

std::string base64_encode(std::span<const std::byte> data) {
  std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(data.data()), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace bankaudit
