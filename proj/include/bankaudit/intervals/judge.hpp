#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bankaudit/intervals/interval.hpp"

namespace bankaudit::intervals {

enum class JudgeMode { text, vision };

std::string_view to_string(JudgeMode m) noexcept;
JudgeMode parse_judge_mode(std::string_view s);

struct JudgeConfig {
  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.1;
  int runs = 3;
  JudgeMode mode = JudgeMode::text;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  // Pause between consecutive requests of one derivation job.
  std::chrono::milliseconds request_delay{500};
};

// Text mode substitutes `category`; the vision template has no slot for it
// and is returned unchanged. Throws Error(InvalidArgument) on an empty category.
std::string build_prompt(std::string_view category, JudgeMode mode);

// Text mode: the first integer in the reply. Vision mode: the integer on the
// MAX_SIZE_CM line. Throws Error(NoInteger | NonPositive).
std::int64_t parse_judge_reply(std::string_view reply, JudgeMode mode);

struct ImageAttachment {
  std::string mime_type;
  std::vector<std::byte> data;
};

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.1;
  std::optional<ImageAttachment> image;
};

// Request text in, reply text out. Implementations signal failure by
// throwing; any exception counts as a failed attempt.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const ChatRequest& req) = 0;
};

struct DeriveOptions {
  std::optional<ImageAttachment> image;  // vision mode reference image
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
  // Called once per attempt with (run, attempt, reply or error text).
  std::function<void(int, int, const std::string&)> on_attempt;
};

// Issues cfg.runs independent queries, retrying each up to cfg.max_retries
// times. Throws Error(JudgeUnavailable) when retries run out on transport
// failures and Error(MalformedReply) when the last failure was an unusable reply.
PlausibleInterval derive_interval(const std::string& category, const JudgeConfig& cfg, ChatTransport& transport,
                                  const DeriveOptions& opts = {});

}  // namespace bankaudit::intervals
