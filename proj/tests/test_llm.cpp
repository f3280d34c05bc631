#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <thread>

#include "segrec/align.hpp"
#include "segrec/errors.hpp"
#include "segrec/io.hpp"
#include "segrec/llm.hpp"
#include "segrec/simulate.hpp"
#include "segrec/stats.hpp"

#include <httplib.h>

using namespace segrec;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("segrec_llm_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("build_segmentation_prompt carries the three parts in order") {
  const std::string story = "Tom ran home.";
  const std::string prompt = llm::build_segmentation_prompt(story);
  CHECK(prompt.rfind("An event is an ongoing coherent situation.", 0) == 0);
  const auto story_pos = prompt.find(story);
  REQUIRE(story_pos != std::string::npos);
  const auto reiter_pos =
      prompt.find("This is a word-for-word copy of the same story that is segmented into "
                  "large event units:");
  REQUIRE(reiter_pos != std::string::npos);
  CHECK(story_pos < reiter_pos);
  CHECK(prompt.find("This is the story:") < story_pos);
  CHECK_THROWS_AS(llm::build_segmentation_prompt(""), ValidationError);

  SUBCASE("narrative substring is byte-identical for arbitrary texts") {
    stats::RngStream rng(1, 0);
    for (int trial = 0; trial < 50; ++trial) {
      const std::string text =
          sim::synthetic_narrative_text(5 + static_cast<int>(rng.uniform_int(60)),
                                        rng.next_u64());
      const std::string p = llm::build_segmentation_prompt(text);
      const std::string kInstrEnd = "This is the story:\n";
      const auto start = p.find(kInstrEnd) + kInstrEnd.size();
      const auto end = p.rfind("\nThis is a word-for-word copy");
      CHECK(p.substr(start, end - start) == text);
    }
  }
}

TEST_CASE("mock backend echoes ground truth and caches deterministically") {
  const auto narr = corpus::Narrative::from_text(
      "story1", "t", sim::synthetic_narrative_text(120, 99));
  llm::MockChatConfig mock;
  mock.ground_truth["story1"] = {30, 61, 95};
  mock.seed = 7;
  auto backend = std::make_shared<llm::MockChatBackend>(mock);
  const fs::path cache = fresh_dir("cache1");
  llm::Gateway gw(backend, cache);

  llm::SegmentationRequest req;
  req.narrative_id = "story1";
  req.model_id = "mock-model";
  req.temperature = 0.5;
  req.instance_index = 3;

  const auto rec1 = gw.complete(req, narr.text);
  CHECK_FALSE(rec1.retrieved_from_cache);
  const auto outcome = align::extract_boundaries(narr, rec1.raw_text);
  CHECK(outcome.boundaries == std::vector<int>{30, 61, 95});
  CHECK(outcome.coverage == doctest::Approx(1.0));

  SUBCASE("second identical call hits the cache byte-for-byte") {
    const auto rec2 = gw.complete(req, narr.text);
    CHECK(rec2.retrieved_from_cache);
    CHECK(rec2.raw_text == rec1.raw_text);
  }
  SUBCASE("distinct instance indices never share a cache key") {
    const std::string prompt = llm::build_segmentation_prompt(narr.text);
    const auto k3 = llm::Gateway::cache_key("m", prompt, 0.5, 3);
    const auto k4 = llm::Gateway::cache_key("m", prompt, 0.5, 4);
    CHECK(k3 != k4);
  }
}

TEST_CASE("mock corruption is seeded and reproducible") {
  const auto narr = corpus::Narrative::from_text(
      "s", "t", sim::synthetic_narrative_text(200, 4));
  llm::MockChatConfig mock;
  mock.ground_truth["s"] = {50, 100, 150};
  mock.substitution_rate = 0.1;
  mock.segment_drop_rate = 0.25;
  mock.seed = 11;
  llm::MockChatBackend b1(mock), b2(mock);
  llm::SegmentationRequest req;
  req.narrative_id = "s";
  req.model_id = "m";
  const std::string prompt = llm::build_segmentation_prompt(narr.text);
  CHECK(b1.complete(req, prompt) == b2.complete(req, prompt));
  req.instance_index = 1;
  CHECK(b1.complete(req, prompt) != b2.complete({.narrative_id = "s", .model_id = "m"}, prompt));
}

namespace {

// Fails selected instances once, then succeeds; counts backend hits.
class FlakyBackend : public llm::ChatBackend {
 public:
  FlakyBackend(std::shared_ptr<llm::ChatBackend> inner, std::set<int> fail_once)
      : inner_(std::move(inner)), fail_once_(std::move(fail_once)) {}
  std::string complete(const llm::SegmentationRequest& req,
                       const std::string& prompt) override {
    ++calls_;
    if (fail_once_.erase(req.instance_index) > 0) {
      throw TransportError("injected failure for instance " +
                           std::to_string(req.instance_index));
    }
    return inner_->complete(req, prompt);
  }
  int calls() const { return calls_; }

 private:
  std::shared_ptr<llm::ChatBackend> inner_;
  std::set<int> fail_once_;
  std::atomic<int> calls_{0};
};

}  // namespace

TEST_CASE("re-run after partial failure only refetches the failed indices") {
  const auto narr = corpus::Narrative::from_text(
      "story3", "t", sim::synthetic_narrative_text(60, 8));
  llm::MockChatConfig mock;
  mock.auto_events = 4;
  auto flaky = std::make_shared<FlakyBackend>(std::make_shared<llm::MockChatBackend>(mock),
                                              std::set<int>{2, 5});
  llm::Gateway gw(flaky, fresh_dir("cache_flaky"));
  CHECK_THROWS_AS(gw.run_instances(narr, "m", 0.0, 8, /*parallelism=*/1), TransportError);
  const int calls_after_failure = flaky->calls();
  CHECK(calls_after_failure == 8);

  const auto recs = gw.run_instances(narr, "m", 0.0, 8, /*parallelism=*/1);
  REQUIRE(recs.size() == 8);
  // Only instances 2 and 5 hit the backend again; the rest came from cache.
  CHECK(flaky->calls() == calls_after_failure + 2);
  for (int i = 0; i < 8; ++i) {
    CHECK(recs[static_cast<std::size_t>(i)].retrieved_from_cache == (i != 2 && i != 5));
  }
}

TEST_CASE("run_instances returns records ordered by instance index") {
  const auto narr = corpus::Narrative::from_text(
      "story2", "t", sim::synthetic_narrative_text(80, 5));
  llm::MockChatConfig mock;
  mock.auto_events = 5;
  auto backend = std::make_shared<llm::MockChatBackend>(mock);
  llm::Gateway gw(backend, fresh_dir("cache2"));
  const auto recs = gw.run_instances(narr, "mock-model", 0.0, 20, /*parallelism=*/8);
  REQUIRE(recs.size() == 20);
  for (int i = 0; i < 20; ++i) {
    CHECK(recs[static_cast<std::size_t>(i)].request.instance_index == i);
    CHECK(recs[static_cast<std::size_t>(i)].raw_text == recs[0].raw_text);
  }
  SUBCASE("n = 1 gives a singleton") {
    const auto one = gw.run_instances(narr, "mock-model", 0.0, 1);
    CHECK(one.size() == 1);
  }
}

TEST_CASE("http backend: success, retry, 4xx and truncation") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const std::string prompt = body["messages"][0]["content"].get<std::string>();
    nlohmann::json reply;
    if (prompt.find("retry-me") != std::string::npos && ++hits < 3) {
      res.status = 503;
      res.set_content("busy", "text/plain");
      return;
    }
    std::string finish = "stop";
    if (prompt.find("truncate-me") != std::string::npos) finish = "length";
    reply["model"] = body["model"];
    reply["choices"] = nlohmann::json::array(
        {{{"message", {{"role", "assistant"}, {"content", "line one\nline two"}}},
          {"finish_reason", finish}}});
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/v1/bad/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
    res.set_content("{\"error\":{\"message\":\"bad key\"}}", "application/json");
  });

  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string base = "http://127.0.0.1:" + std::to_string(port) + "/v1";

  llm::RetryPolicy fast;
  fast.max_attempts = 5;
  fast.initial_delay = std::chrono::milliseconds(1);

  llm::SegmentationRequest req;
  req.model_id = "test-model";
  req.narrative_id = "n";

  SUBCASE("clean completion") {
    llm::HttpChatBackend backend(base, "", fast);
    const std::string text =
        backend.complete(req, llm::build_segmentation_prompt("plain story."));
    CHECK(text == "line one\nline two");
  }
  SUBCASE("transient 503 is retried until success") {
    hits = 0;
    llm::HttpChatBackend backend(base, "", fast);
    const std::string text =
        backend.complete(req, llm::build_segmentation_prompt("retry-me story."));
    CHECK(text == "line one\nline two");
    CHECK(hits >= 3);
  }
  SUBCASE("HTTP 401 raises ConfigError without retries") {
    llm::HttpChatBackend backend(base + "/bad", "", fast);
    CHECK_THROWS_AS(backend.complete(req, llm::build_segmentation_prompt("x.")), ConfigError);
  }
  SUBCASE("finish_reason length raises TruncationError with the partial text") {
    llm::HttpChatBackend backend(base, "", fast);
    try {
      backend.complete(req, llm::build_segmentation_prompt("truncate-me story."));
      FAIL("expected TruncationError");
    } catch (const TruncationError& ex) {
      CHECK(ex.partial_text() == "line one\nline two");
    }
  }
  SUBCASE("unreachable port exhausts retries with TransportError") {
    llm::RetryPolicy two;
    two.max_attempts = 2;
    two.initial_delay = std::chrono::milliseconds(1);
    llm::HttpChatBackend backend("http://127.0.0.1:1/v1", "", two);
    CHECK_THROWS_AS(backend.complete(req, llm::build_segmentation_prompt("x.")), TransportError);
  }

  server.stop();
  server_thread.join();
}
