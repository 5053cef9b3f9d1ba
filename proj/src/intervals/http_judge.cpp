#include "bankaudit/intervals/http_judge.hpp"

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/http.hpp"

namespace bankaudit::intervals {

using nlohmann::json;

HttpChatTransport::HttpChatTransport(std::string endpoint_url, std::string api_key, std::chrono::milliseconds timeout)
    : url_(std::move(endpoint_url)), api_key_(std::move(api_key)), timeout_(timeout) {}

HttpChatTransport HttpChatTransport::from_env(const JudgeConfig& cfg) {
  const char* key = std::getenv("AUDIT_LLM_API_KEY");
  return HttpChatTransport(cfg.endpoint_url, key ? key : "", cfg.timeout);
}

std::string HttpChatTransport::complete(const ChatRequest& req) {
  json content;
  if (req.image) {
    const std::string data_url = "data:" + req.image->mime_type + ";base64," + base64_encode(req.image->data);
    content = json::array({{{"type", "text"}, {"text", req.prompt}},
                           {{"type", "image_url"}, {"image_url", {{"url", data_url}}}}});
  } else {
    content = req.prompt;
  }
  const json body{{"model", req.model},
                  {"temperature", req.temperature},
                  {"messages", json::array({{{"role", "user"}, {"content", content}}})}};

  std::vector<std::pair<std::string, std::string>> headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);

  HttpResponse res;
  try {
    res = http_post_json(url_, body.dump(), headers, timeout_);
  } catch (const Error& e) {
    fail(ErrorKind::JudgeUnavailable, e.what());
  }
  if (res.status < 200 || res.status >= 300) {
    fail(ErrorKind::JudgeUnavailable, "judge endpoint returned HTTP " + std::to_string(res.status));
  }
  try {
    const auto doc = json::parse(res.body);
    const auto& msg = doc.at("choices").at(0).at("message").at("content");
    if (msg.is_string()) return msg.get<std::string>();
    // Some servers return content parts.
    std::string text;
    for (const auto& part : msg) {
      if (part.value("type", "") == "text") text += part.at("text").get<std::string>();
    }
    return text;
  } catch (const json::exception& e) {
    fail(ErrorKind::MalformedReply, std::string("judge response lacks choices[0].message.content: ") + e.what());
  }
}

}  // namespace bankaudit::intervals
