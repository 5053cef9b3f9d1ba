#pragma once

#include <chrono>
#include <string>

#include "bankaudit/intervals/judge.hpp"

namespace bankaudit::intervals {

// Chat-completion adapter: POSTs {model, temperature, messages} and reads
// choices[0].message.content. Images go in as a data URL content part.
class HttpChatTransport : public ChatTransport {
 public:
  HttpChatTransport(std::string endpoint_url, std::string api_key, std::chrono::milliseconds timeout);

  // Reads the key from AUDIT_LLM_API_KEY (may be unset for local servers).
  static HttpChatTransport from_env(const JudgeConfig& cfg);

  // Throws Error(JudgeUnavailable) on transport failure or non-2xx status and
  // Error(MalformedReply) when the body lacks a text completion.
  std::string complete(const ChatRequest& req) override;

 private:
  std::string url_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

}  // namespace bankaudit::intervals
