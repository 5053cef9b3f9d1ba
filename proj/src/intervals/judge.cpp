#include "bankaudit/intervals/judge.hpp"

#include <cctype>
#include <charconv>
#include <thread>

#include "bankaudit/core/error.hpp"

namespace bankaudit::intervals {

namespace {

constexpr std::string_view kTextTemplate =
    "You are a precise database of physical object length dimensions.\n"
    "Respond ONLY with the maximum dimension (length, width, or height) of the\n"
    "given real-world object in centimeters.\n"
    "Provide a realistic, common value as an integer. Do not write any other words.\n"
    "\n"
    "Object: soda can\n"
    "Target Longest Dimension (centimeters): 12\n"
    "\n"
    "Object: car\n"
    "Target Longest Dimension (centimeters): 450\n"
    "\n"
    "Object: office chair\n"
    "Target Longest Dimension (centimeters): 110\n"
    "\n"
    "Object: standard king bed\n"
    "Target Longest Dimension (centimeters): 200\n"
    "\n"
    "Object: table\n"
    "Target Longest Dimension (centimeters): 150\n"
    "\n"
    "Object: shotgun\n"
    "Target Longest Dimension (centimeters): 100\n"
    "\n"
    "Object: {category_name}\n"
    "Target Longest Dimension (centimeters):";

constexpr std::string_view kVisionTemplate =
    "Analyze this image and provide:\n"
    "1. A brief description of the object shown (1–2 sentences).\n"
    "2. The realistic maximum dimension (length, width, or height — whichever\n"
    "   is largest) this object would have in the real world, in centimeters.\n"
    "\n"
    "Respond in this exact format:\n"
    "DESCRIPTION: [your description here]\n"
    "MAX_SIZE_CM: [integer number only]\n"
    "\n"
    "Examples of realistic sizes:\n"
    "- A soda can: 12 cm\n"
    "- A car: 450 cm\n"
    "- An office chair: 110 cm\n"
    "- A dining table: 150 cm\n"
    "- A smartphone: 16 cm\n"
    "- A house: 1000 cm\n"
    "- A person: 180 cm\n"
    "\n"
    "Be precise and realistic with the size estimation based on what the object actually is.";

constexpr std::string_view kPlaceholder = "{category_name}";

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// First run of digits, allowing 1,234 style groups and a leading minus.
std::int64_t first_integer(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && !is_digit(s[i])) ++i;
  if (i == s.size()) fail(ErrorKind::NoInteger, "no integer in reply '" + std::string(s.substr(0, 80)) + "'");
  const bool negative = i > 0 && s[i - 1] == '-' && (i == 1 || !is_alnum(s[i - 2]));
  std::string digits;
  std::size_t j = i;
  while (j < s.size() && is_digit(s[j])) digits += s[j++];
  while (j + 3 < s.size() && s[j] == ',' && is_digit(s[j + 1]) && is_digit(s[j + 2]) && is_digit(s[j + 3]) &&
         (j + 4 == s.size() || !is_digit(s[j + 4]))) {
    digits.append(s.substr(j + 1, 3));
    j += 4;
  }
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc{}) fail(ErrorKind::NoInteger, "integer out of range in reply");
  if (negative) v = -v;
  if (v <= 0) fail(ErrorKind::NonPositive, "judge estimate " + std::to_string(v) + " is not positive");
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '*' || s.front() == '#')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool iequals_prefix(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(JudgeMode m) noexcept { return m == JudgeMode::vision ? "vision" : "text"; }

JudgeMode parse_judge_mode(std::string_view s) {
  if (s == "text") return JudgeMode::text;
  if (s == "vision") return JudgeMode::vision;
  fail(ErrorKind::BadConfig, "mode must be text or vision, got '" + std::string(s) + "'");
}

std::string build_prompt(std::string_view category, JudgeMode mode) {
  if (category.empty()) fail(ErrorKind::InvalidArgument, "category name is empty");
  if (mode == JudgeMode::vision) return std::string(kVisionTemplate);
  std::string out(kTextTemplate);
  out.replace(out.find(kPlaceholder), kPlaceholder.size(), category);
  return out;
}

std::int64_t parse_judge_reply(std::string_view reply, JudgeMode mode) {
  if (mode == JudgeMode::text) return first_integer(reply);
  std::size_t start = 0;
  while (start <= reply.size()) {
    std::size_t end = reply.find('\n', start);
    if (end == std::string_view::npos) end = reply.size();
    std::string_view line = trim(reply.substr(start, end - start));
    if (iequals_prefix(line, "MAX_SIZE_CM")) {
      line.remove_prefix(11);
      while (!line.empty() && (line.front() == '*' || line.front() == ' ')) line.remove_prefix(1);
      if (!line.empty() && line.front() == ':') return first_integer(line.substr(1));
    }
    start = end + 1;
  }
  fail(ErrorKind::NoInteger, "reply has no MAX_SIZE_CM line");
}

PlausibleInterval derive_interval(const std::string& category, const JudgeConfig& cfg, ChatTransport& transport,
                                  const DeriveOptions& opts) {
  if (cfg.runs < 1) fail(ErrorKind::BadConfig, "runs must be at least 1");
  if (cfg.max_retries < 0) fail(ErrorKind::BadConfig, "max_retries must be non-negative");
  auto sleep = opts.sleep ? opts.sleep : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

  ChatRequest req;
  req.model = cfg.model_name;
  req.prompt = build_prompt(category, cfg.mode);
  req.temperature = cfg.temperature;
  if (cfg.mode == JudgeMode::vision) req.image = opts.image;

  std::vector<std::int64_t> estimates;
  bool first_request = true;
  for (int run = 0; run < cfg.runs; ++run) {
    bool last_malformed = false;
    std::string last_error;
    std::optional<std::int64_t> value;
    for (int attempt = 0; attempt <= cfg.max_retries && !value; ++attempt) {
      if (!first_request && cfg.request_delay.count() > 0) sleep(cfg.request_delay);
      first_request = false;
      std::string reply;
      try {
        reply = transport.complete(req);
      } catch (const Error& e) {
        last_malformed = e.kind() == ErrorKind::MalformedReply;
        last_error = e.what();
        if (opts.on_attempt) opts.on_attempt(run, attempt, last_error);
        continue;
      } catch (const std::exception& e) {
        last_malformed = false;
        last_error = e.what();
        if (opts.on_attempt) opts.on_attempt(run, attempt, last_error);
        continue;
      }
      if (opts.on_attempt) opts.on_attempt(run, attempt, reply);
      try {
        value = parse_judge_reply(reply, cfg.mode);
      } catch (const Error& e) {
        last_malformed = true;
        last_error = e.what();
      }
    }
    if (!value) {
      const std::string msg = "'" + category + "' run " + std::to_string(run + 1) + " failed after " +
                              std::to_string(cfg.max_retries + 1) + " attempts: " + last_error;
      fail(last_malformed ? ErrorKind::MalformedReply : ErrorKind::JudgeUnavailable, msg);
    }
    estimates.push_back(*value);
  }
  return interval_from_runs(estimates, category);
}

}  // namespace bankaudit::intervals
