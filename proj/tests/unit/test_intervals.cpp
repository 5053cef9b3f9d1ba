#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <deque>
#include <filesystem>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <random>
#include <thread>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/io.hpp"
#include "bankaudit/intervals/http_judge.hpp"
#include "bankaudit/intervals/interval.hpp"
#include "bankaudit/intervals/judge.hpp"

using namespace bankaudit;
using namespace bankaudit::intervals;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoFailure;
}

// Replays scripted replies; an empty optional throws a transport error.
class ScriptedTransport : public ChatTransport {
 public:
  explicit ScriptedTransport(std::deque<std::optional<std::string>> script) : script_(std::move(script)) {}
  std::string complete(const ChatRequest& req) override {
    requests.push_back(req);
    if (script_.empty()) throw std::runtime_error("script exhausted");
    auto next = script_.front();
    script_.pop_front();
    if (!next) throw std::runtime_error("connection refused");
    return *next;
  }
  std::vector<ChatRequest> requests;

 private:
  std::deque<std::optional<std::string>> script_;
};

JudgeConfig quick_config() {
  JudgeConfig cfg;
  cfg.model_name = "judge-test";
  cfg.request_delay = std::chrono::milliseconds(0);
  return cfg;
}

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("bankaudit_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("interval_from_runs examples") {
  const std::vector<std::int64_t> a{100, 110, 120};
  const auto iv = interval_from_runs(a, "dining chair");
  CHECK(iv.lower == 0.70);
  CHECK(iv.upper == 1.56);
  CHECK(iv.provenance == Provenance::judged);
  CHECK(iv.run_estimates_cm == a);

  const std::vector<std::int64_t> b{100, 100, 100};
  CHECK(interval_from_runs(b).lower == 0.70);
  CHECK(interval_from_runs(b).upper == 1.30);

  CHECK(kind_of([] { interval_from_runs(std::vector<std::int64_t>{0}); }) == ErrorKind::NonPositiveEstimate);
  CHECK(kind_of([] { interval_from_runs(std::vector<std::int64_t>{5, -1}); }) == ErrorKind::NonPositiveEstimate);
  CHECK(kind_of([] { interval_from_runs(std::vector<std::int64_t>{}); }) == ErrorKind::EmptyRuns);
}

TEST_CASE("interval_from_runs properties") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<std::int64_t> cm(1, 500000);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::int64_t> runs(1 + trial % 6);
    for (auto& r : runs) r = cm(rng);
    const auto iv = interval_from_runs(runs);

    // Per-run bands in meters, unioned directly.
    double lo = 1e300, hi = -1e300;
    for (auto r : runs) {
      lo = std::min(lo, 0.7 * (r / 100.0));
      hi = std::max(hi, 1.3 * (r / 100.0));
    }
    CHECK(iv.lower == doctest::Approx(lo).epsilon(1e-15));
    CHECK(iv.upper == doctest::Approx(hi).epsilon(1e-15));
    CHECK(iv.lower > 0.0);
    CHECK(iv.lower < iv.upper);
    CHECK(iv.half_width() == (iv.upper - iv.lower) / 2.0);

    auto shuffled = runs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto iv2 = interval_from_runs(shuffled);
    CHECK(iv2.lower == iv.lower);
    CHECK(iv2.upper == iv.upper);

    runs.push_back(cm(rng));
    const auto wider = interval_from_runs(runs);
    CHECK(wider.lower <= iv.lower);
    CHECK(wider.upper >= iv.upper);
  }
}

TEST_CASE("prompt templates match golden files") {
  const fs::path golden = fs::path(BANKAUDIT_TEST_DIR) / "golden";
  CHECK(build_prompt("dining chair", JudgeMode::text) == read_file_text(golden / "judge_text_dining_chair.txt"));
  CHECK(build_prompt("anything", JudgeMode::vision) == read_file_text(golden / "judge_vision.txt"));

  const auto p = build_prompt("dining chair", JudgeMode::text);
  const std::string tail = "Object: dining chair\nTarget Longest Dimension (centimeters):";
  CHECK(p.size() > tail.size());
  CHECK(p.substr(p.size() - tail.size()) == tail);
  CHECK(p.find("Object: car\nTarget Longest Dimension (centimeters): 450\n") != std::string::npos);
  CHECK(kind_of([] { build_prompt("", JudgeMode::text); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("parse_judge_reply") {
  CHECK(parse_judge_reply("DESCRIPTION: a chair\nMAX_SIZE_CM: 110", JudgeMode::vision) == 110);
  CHECK(parse_judge_reply(" 450 ", JudgeMode::text) == 450);
  CHECK(kind_of([] { parse_judge_reply("tall-ish", JudgeMode::text); }) == ErrorKind::NoInteger);
  CHECK(kind_of([] { parse_judge_reply("0", JudgeMode::text); }) == ErrorKind::NonPositive);
  CHECK(kind_of([] { parse_judge_reply("-12", JudgeMode::text); }) == ErrorKind::NonPositive);
  CHECK(parse_judge_reply("about 1,200 cm", JudgeMode::text) == 1200);
  CHECK(parse_judge_reply("12 or 14", JudgeMode::text) == 12);
  CHECK(parse_judge_reply("DESCRIPTION: a 3 seat sofa\r\n**MAX_SIZE_CM:** 215\r\n", JudgeMode::vision) == 215);
  CHECK(kind_of([] { parse_judge_reply("DESCRIPTION: 3 legs", JudgeMode::vision); }) == ErrorKind::NoInteger);
  CHECK(kind_of([] { parse_judge_reply("MAX_SIZE_CM: big", JudgeMode::vision); }) == ErrorKind::NoInteger);
  CHECK(kind_of([] { parse_judge_reply("99999999999999999999999", JudgeMode::text); }) == ErrorKind::NoInteger);
}

TEST_CASE("derive_interval with stub transports") {
  auto cfg = quick_config();
  SUBCASE("three runs") {
    ScriptedTransport t({"110", "100", "120"});
    const auto iv = derive_interval("dining chair", cfg, t);
    CHECK(iv.lower == 0.70);
    CHECK(iv.upper == 1.56);
    CHECK(iv.provenance == Provenance::judged);
    CHECK(iv.run_estimates_cm == std::vector<std::int64_t>{110, 100, 120});
    REQUIRE(t.requests.size() == 3);
    CHECK(t.requests[0].temperature == 0.1);
    CHECK(t.requests[0].model == "judge-test");
    CHECK(t.requests[0].prompt == build_prompt("dining chair", JudgeMode::text));
  }
  SUBCASE("same value thrice") {
    ScriptedTransport t({"100", "100", "100"});
    const auto iv = derive_interval("x", cfg, t);
    CHECK(iv.lower == 0.70);
    CHECK(iv.upper == 1.30);
  }
  SUBCASE("always erroring") {
    ScriptedTransport t({});
    CHECK(kind_of([&] { derive_interval("x", cfg, t); }) == ErrorKind::JudgeUnavailable);
    CHECK(t.requests.size() == 3);  // one run, 1 + max_retries attempts
  }
  SUBCASE("retries recover") {
    ScriptedTransport t({std::nullopt, "90", "no idea", "95", "100"});
    const auto iv = derive_interval("x", cfg, t);
    CHECK(iv.run_estimates_cm == std::vector<std::int64_t>{90, 95, 100});
    CHECK(t.requests.size() == 5);
  }
  SUBCASE("persistent garbage is a malformed reply") {
    ScriptedTransport t({"100", "hmm", "hmm", "hmm"});
    CHECK(kind_of([&] { derive_interval("x", cfg, t); }) == ErrorKind::MalformedReply);
  }
  SUBCASE("delay between requests") {
    cfg.request_delay = std::chrono::milliseconds(500);
    std::vector<long> sleeps;
    DeriveOptions opts;
    opts.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); };
    ScriptedTransport t({"1", std::nullopt, "2", "3"});
    derive_interval("x", cfg, t, opts);
    CHECK(sleeps == std::vector<long>{500, 500, 500});
  }
  SUBCASE("vision mode attaches the image") {
    cfg.mode = JudgeMode::vision;
    DeriveOptions opts;
    opts.image = ImageAttachment{"image/png", {std::byte{1}, std::byte{2}}};
    ScriptedTransport t({"MAX_SIZE_CM: 80", "MAX_SIZE_CM: 90", "MAX_SIZE_CM: 85"});
    const auto iv = derive_interval("lamp", cfg, t, opts);
    CHECK(iv.lower == 0.56);
    CHECK(iv.upper == 1.17);
    REQUIRE(t.requests[0].image.has_value());
    CHECK(t.requests[0].image->data.size() == 2);
  }
  SUBCASE("config validation") {
    cfg.runs = 0;
    ScriptedTransport t({"1"});
    CHECK(kind_of([&] { derive_interval("x", cfg, t); }) == ErrorKind::BadConfig);
  }
}

TEST_CASE("interval files") {
  const auto bundled = load_interval_file(fs::path(BANKAUDIT_DATA_DIR) / "intervals" / "categories.json");
  REQUIRE(bundled.entries.size() == 9);
  const auto* seating = bundled.find("Seating");
  REQUIRE(seating != nullptr);
  CHECK(seating->lower == 0.6);
  CHECK(seating->upper == 1.1);
  CHECK(seating->provenance == Provenance::manual);
  CHECK_FALSE(seating->axis.has_value());
  CHECK(bundled.find("Tableware")->lower == 0.05);
  CHECK(bundled.find("Architecture")->upper == 100.0);

  IntervalFile f;
  f.entries["chair"] = interval_from_runs(std::vector<std::int64_t>{110, 100, 120}, "chair");
  f.entries["rug"] = manual_interval("rug", 0.001, 0.03);
  auto pole = manual_interval("pole", 1.0, 4.0);
  pole.axis = MeasureAxis::max_extent;
  f.entries["pole"] = pole;
  const auto back = parse_interval_file(dump_interval_file(f));
  REQUIRE(back.entries.size() == 3);
  CHECK(back.find("chair")->lower == 0.70);
  CHECK(back.find("chair")->run_estimates_cm == std::vector<std::int64_t>{110, 100, 120});
  CHECK(back.find("pole")->axis == MeasureAxis::max_extent);
  CHECK_FALSE(back.find("rug")->axis.has_value());
  CHECK(dump_interval_file(back) == dump_interval_file(f));

  CHECK(kind_of([] { parse_interval_file("{"); }) == ErrorKind::BadIntervalFile);
  CHECK(kind_of([] { parse_interval_file(R"({"version":2,"entries":[]})"); }) == ErrorKind::BadIntervalFile);
  CHECK(kind_of([] {
          parse_interval_file(
              R"({"version":1,"entries":[{"category":"a","lower_m":2,"upper_m":1,"provenance":"manual"}]})");
        }) == ErrorKind::BadIntervalFile);
  CHECK(kind_of([] {
          parse_interval_file(
              R"({"version":1,"entries":[{"category":"a","lower_m":0.7,"upper_m":1.2,"provenance":"judged","run_estimates_cm":[100]}]})");
        }) == ErrorKind::BadIntervalFile);
  CHECK(kind_of([] {
          parse_interval_file(R"({"version":1,"entries":[{"category":"a","lower_m":1,"upper_m":2,"provenance":"manual"},
{"category":"a","lower_m":1,"upper_m":2,"provenance":"manual"}]})");
        }) == ErrorKind::BadIntervalFile);
}

TEST_CASE("interval cache is write-once per key") {
  const auto dir = temp_dir("cache");
  const auto path = dir / "intervals.json";
  {
    IntervalCache cache(path);
    cache.claim("chair", false);
    CHECK(kind_of([&] { cache.claim("chair", false); }) == ErrorKind::ConcurrentWrite);
    cache.commit(interval_from_runs(std::vector<std::int64_t>{100}, "chair"));
    CHECK(kind_of([&] { cache.claim("chair", true); }) == ErrorKind::ConcurrentWrite);
    cache.save();
  }
  IntervalCache reopened(path);
  REQUIRE(reopened.get("chair").has_value());
  CHECK(reopened.get("chair")->upper == 1.30);
  CHECK(kind_of([&] { reopened.claim("chair", false); }) == ErrorKind::ConcurrentWrite);
  reopened.claim("chair", true);
  reopened.commit(interval_from_runs(std::vector<std::int64_t>{200}, "chair"));

  // Another process holding the lock file.
  auto lock = path;
  lock += ".lock";
  write_file_text(lock, "");
  CHECK(kind_of([&] { reopened.save(); }) == ErrorKind::ConcurrentWrite);
  fs::remove(lock);
  reopened.save();
  CHECK(IntervalCache(path).get("chair")->upper == 2.60);

  // Concurrent claims from threads: exactly one wins.
  IntervalCache shared(dir / "other.json");
  std::atomic<int> wins{0}, conflicts{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      try {
        shared.claim("lamp", false);
        ++wins;
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConcurrentWrite) ++conflicts;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(wins == 1);
  CHECK(conflicts == 7);
  fs::remove_all(dir);
}

TEST_CASE("HTTP chat-completion adapter against a local server") {
  httplib::Server svr;
  std::atomic<int> hits{0};
  nlohmann::json last_body;
  std::string last_auth;
  svr.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    last_body = nlohmann::json::parse(req.body);
    last_auth = req.get_header_value("Authorization");
    const std::string prompt = last_body["messages"][0]["content"].is_string()
                                   ? last_body["messages"][0]["content"].get<std::string>()
                                   : last_body["messages"][0]["content"][0]["text"].get<std::string>();
    nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "110"}}}}}}};
    if (prompt.find("Object: broken\n") != std::string::npos) {
      res.set_content("{\"oops\":1}", "application/json");
    } else if (prompt.find("Object: down\n") != std::string::npos) {
      res.status = 503;
    } else {
      res.set_content(reply.dump(), "application/json");
    }
  });
  const int port = svr.bind_to_any_port("127.0.0.1");
  std::thread th([&] { svr.listen_after_bind(); });
  svr.wait_until_ready();

  const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  HttpChatTransport t(url, "secret", std::chrono::milliseconds(5000));
  auto cfg = quick_config();
  cfg.runs = 3;
  CHECK(t.complete({"m", build_prompt("chair", JudgeMode::text), 0.1, std::nullopt}) == "110");
  CHECK(last_auth == "Bearer secret");
  CHECK(last_body["temperature"] == 0.1);
  CHECK(last_body["model"] == "m");

  const auto iv = derive_interval("chair", cfg, t);
  CHECK(iv.lower == 0.77);
  CHECK(iv.upper == 1.43);

  CHECK(t.complete({"m", "p", 0.1, ImageAttachment{"image/png", {std::byte{0xFF}, std::byte{0x00}}}}) == "110");
  CHECK(last_body["messages"][0]["content"][1]["image_url"]["url"] == "data:image/png;base64,/wA=");

  CHECK(kind_of([&] { t.complete({"m", build_prompt("broken", JudgeMode::text), 0.1, std::nullopt}); }) ==
        ErrorKind::MalformedReply);
  CHECK(kind_of([&] { t.complete({"m", build_prompt("down", JudgeMode::text), 0.1, std::nullopt}); }) ==
        ErrorKind::JudgeUnavailable);
  CHECK(kind_of([&] { derive_interval("down", cfg, t); }) == ErrorKind::JudgeUnavailable);
  CHECK(kind_of([&] { derive_interval("broken", cfg, t); }) == ErrorKind::MalformedReply);

  svr.stop();
  th.join();

  HttpChatTransport dead(url, "", std::chrono::milliseconds(300));
  CHECK(kind_of([&] { dead.complete({"m", "p", 0.1, std::nullopt}); }) == ErrorKind::JudgeUnavailable);
  HttpChatTransport bad("ftp://example", "", std::chrono::milliseconds(300));
  CHECK(kind_of([&] { bad.complete({"m", "p", 0.1, std::nullopt}); }) == ErrorKind::JudgeUnavailable);
}
