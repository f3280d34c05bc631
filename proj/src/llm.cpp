#include "segrec/llm.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "segrec/errors.hpp"
#include "segrec/io.hpp"
#include "segrec/stats.hpp"

// httplib last: it drags in system headers whose macros collide with Eigen.
#include <httplib.h>

namespace segrec::llm {

namespace {

using nlohmann::json;

constexpr const char* kInstruction =
    "An event is an ongoing coherent situation. The following story needs to be "
    "copied and segmented into large events. Copy the following story word-for-word "
    "and start a new line whenever one event ends, and another begins. This is the "
    "story:";
constexpr const char* kReiteration =
    "This is a word-for-word copy of the same story that is segmented into large "
    "event units:";

struct ParsedUrl {
  std::string scheme_host_port;  // what httplib::Client takes
  std::string path_prefix;       // anything after host:port
};

ParsedUrl parse_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("base_url must include a scheme: " + base_url);
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl p;
  if (path_start == std::string::npos) {
    p.scheme_host_port = base_url;
  } else {
    p.scheme_host_port = base_url.substr(0, path_start);
    p.path_prefix = base_url.substr(path_start);
    while (!p.path_prefix.empty() && p.path_prefix.back() == '/') p.path_prefix.pop_back();
  }
  return p;
}

bool is_transient_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::string build_segmentation_prompt(const std::string& narrative_text) {
  if (narrative_text.empty()) {
    throw ValidationError("narrative text must be non-empty");
  }
  std::string prompt;
  prompt.reserve(narrative_text.size() + 512);
  prompt += kInstruction;
  prompt += '\n';
  prompt += narrative_text;
  prompt += '\n';
  prompt += kReiteration;
  return prompt;
}

HttpChatBackend::HttpChatBackend(std::string base_url, std::string api_key_env,
                                 RetryPolicy retry)
    : base_url_(std::move(base_url)), api_key_env_(std::move(api_key_env)), retry_(retry) {}

std::string HttpChatBackend::complete(const SegmentationRequest& request,
                                      const std::string& prompt) {
  const ParsedUrl url = parse_base_url(base_url_);
  json body;
  body["model"] = request.model_id;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!api_key_env_.empty()) {
    if (const char* key = std::getenv(api_key_env_.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  // Jitter stream seeded from the request identity: reproducible schedules,
  // distinct across instances.
  stats::RngStream jitter(io::fnv1a64(request.narrative_id + "|" + request.model_id),
                          static_cast<std::uint64_t>(request.instance_index));

  std::string last_error;
  for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
    if (attempt > 0) {
      double delay_ms = static_cast<double>(retry_.initial_delay.count()) *
                        std::pow(retry_.multiplier, attempt - 1);
      if (retry_.jitter) delay_ms *= 0.5 + jitter.uniform();
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(delay_ms)));
    }
    httplib::Client client(url.scheme_host_port);
    client.set_read_timeout(300, 0);
    client.set_connection_timeout(30, 0);
    auto res = client.Post(url.path_prefix + "/chat/completions", headers, payload,
                           "application/json");
    if (!res) {
      last_error = "connection error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 400) {
      if (is_transient_status(res->status)) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      throw ConfigError("chat/completions returned HTTP " + std::to_string(res->status) +
                        ": " + res->body);
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception& ex) {
      last_error = std::string("bad JSON in response: ") + ex.what();
      continue;
    }
    if (!reply.contains("choices") || reply["choices"].empty()) {
      last_error = "response has no choices";
      continue;
    }
    const json& choice = reply["choices"][0];
    std::string text;
    if (choice.contains("message") && choice["message"].contains("content") &&
        !choice["message"]["content"].is_null()) {
      text = choice["message"]["content"].get<std::string>();
    }
    const std::string finish = choice.value("finish_reason", "");
    if (finish == "length") {
      throw TruncationError("completion truncated (finish_reason=length)", text);
    }
    if (text.empty()) {
      last_error = "empty completion text";
      continue;
    }
    return text;
  }
  throw TransportError("chat/completions failed after " + std::to_string(retry_.max_attempts) +
                       " attempts; last error: " + last_error);
}

std::vector<int> MockChatBackend::ground_truth_for(const corpus::Narrative& narrative) const {
  if (auto it = config_.ground_truth.find(narrative.id); it != config_.ground_truth.end()) {
    return it->second;
  }
  // Derive: spread boundaries over the tokens that follow sentence ends.
  std::vector<int> candidates;
  for (const corpus::Token& t : narrative.tokens) {
    if (t.is_sentence_end && t.index + 1 < narrative.token_count()) {
      candidates.push_back(t.index + 1);
    }
  }
  if (candidates.empty()) {
    for (int i = 1; i < narrative.token_count(); ++i) candidates.push_back(i);
  }
  const int n_boundaries = std::max(0, std::min(config_.auto_events - 1,
                                                static_cast<int>(candidates.size())));
  std::vector<int> gt;
  for (int k = 1; k <= n_boundaries; ++k) {
    const std::size_t pick =
        static_cast<std::size_t>(static_cast<long>(k) * static_cast<long>(candidates.size()) /
                                 (n_boundaries + 1));
    gt.push_back(candidates[std::min(pick, candidates.size() - 1)]);
  }
  std::sort(gt.begin(), gt.end());
  gt.erase(std::unique(gt.begin(), gt.end()), gt.end());
  return gt;
}

std::string MockChatBackend::complete(const SegmentationRequest& request,
                                      const std::string& prompt) {
  const std::string instruction = std::string(kInstruction) + "\n";
  const std::string reiteration = std::string("\n") + kReiteration;
  if (prompt.size() < instruction.size() + reiteration.size() ||
      prompt.compare(0, instruction.size(), instruction) != 0 ||
      prompt.compare(prompt.size() - reiteration.size(), reiteration.size(), reiteration) != 0) {
    throw ValidationError("mock backend: prompt does not carry the expected frame");
  }
  const std::string story =
      prompt.substr(instruction.size(), prompt.size() - instruction.size() - reiteration.size());
  const corpus::Narrative narr =
      corpus::Narrative::from_text(request.narrative_id, request.narrative_id, story);

  std::vector<int> boundaries = ground_truth_for(narr);

  const std::uint64_t stream_id =
      io::fnv1a64(request.narrative_id + "|" + request.model_id) ^
      stats::splitmix64(static_cast<std::uint64_t>(request.instance_index)) ^
      std::bit_cast<std::uint64_t>(request.temperature);
  stats::RngStream rng(config_.seed, stream_id);

  const double jitter_sd = config_.boundary_jitter_sd * request.temperature;
  if (jitter_sd > 0.0) {
    for (int& b : boundaries) {
      const long off = std::lround(rng.normal() * jitter_sd);
      b = static_cast<int>(std::clamp<long>(b + off, 1, narr.token_count() - 1));
    }
    std::sort(boundaries.begin(), boundaries.end());
    boundaries.erase(std::unique(boundaries.begin(), boundaries.end()), boundaries.end());
  }

  // Segment token ranges, then apply segment drops and token substitutions.
  std::vector<std::pair<int, int>> spans;
  int start = 0;
  for (int b : boundaries) {
    spans.emplace_back(start, b);
    start = b;
  }
  spans.emplace_back(start, narr.token_count());

  std::ostringstream out;
  bool first_segment = true;
  for (const auto& [s, e] : spans) {
    const bool drop =
        config_.segment_drop_rate > 0.0 && rng.uniform() < config_.segment_drop_rate;
    if (drop) continue;
    if (!first_segment) out << '\n';
    first_segment = false;
    for (int i = s; i < e; ++i) {
      if (i > s) out << ' ';
      if (config_.substitution_rate > 0.0 && rng.uniform() < config_.substitution_rate) {
        static const char* kLetters = "abcdefghijklmnopqrstuvwxyz";
        std::string noise = "zq";
        for (int k = 0; k < 5; ++k) noise.push_back(kLetters[rng.uniform_int(26)]);
        out << noise;
      } else {
        out << narr.tokens[static_cast<std::size_t>(i)].surface;
      }
    }
  }
  return out.str();
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend,
                 std::optional<std::filesystem::path> cache_dir)
    : backend_(std::move(backend)), cache_dir_(std::move(cache_dir)) {}

std::string Gateway::cache_key(const std::string& model_id, const std::string& prompt,
                               double temperature, int instance_index) {
  std::string material;
  material.reserve(prompt.size() + 64);
  material += model_id;
  material += '\x1f';
  material += io::fmt_exact(temperature);
  material += '\x1f';
  material += std::to_string(instance_index);
  material += '\x1f';
  material += prompt;
  return io::sha256_hex(material);
}

CompletionRecord Gateway::complete(const SegmentationRequest& request,
                                   const std::string& narrative_text) {
  const std::string prompt = build_segmentation_prompt(narrative_text);
  const std::string key =
      cache_key(request.model_id, prompt, request.temperature, request.instance_index);

  CompletionRecord record;
  record.request = request;
  record.timestamp = std::chrono::system_clock::now();

  if (cache_dir_) {
    const std::filesystem::path file = *cache_dir_ / (key + ".txt");
    if (std::filesystem::exists(file)) {
      record.raw_text = io::read_text_file(file);
      record.retrieved_from_cache = true;
      return record;
    }
  }

  record.raw_text = backend_->complete(request, prompt);
  if (record.raw_text.empty()) {
    throw TransportError("backend returned empty completion");
  }
  if (cache_dir_) {
    io::write_file_atomic(*cache_dir_ / (key + ".txt"), record.raw_text);
  }
  return record;
}

std::vector<CompletionRecord> Gateway::run_instances(const corpus::Narrative& narrative,
                                                     const std::string& model_id,
                                                     double temperature, int n_instances,
                                                     int parallelism) {
  if (n_instances < 1) {
    throw ValidationError("n_instances must be >= 1");
  }
  std::vector<std::optional<CompletionRecord>> slots(static_cast<std::size_t>(n_instances));
  std::vector<std::string> failures(static_cast<std::size_t>(n_instances));
  std::atomic<int> next{0};

  auto worker = [&]() {
    for (;;) {
      const int idx = next.fetch_add(1);
      if (idx >= n_instances) return;
      SegmentationRequest req;
      req.narrative_id = narrative.id;
      req.model_id = model_id;
      req.temperature = temperature;
      req.instance_index = idx;
      try {
        slots[static_cast<std::size_t>(idx)] = complete(req, narrative.text);
      } catch (const std::exception& ex) {
        failures[static_cast<std::size_t>(idx)] = ex.what();
      }
    }
  };

  const int n_threads = std::max(1, std::min(parallelism, n_instances));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  std::string failed_list;
  for (int i = 0; i < n_instances; ++i) {
    if (!slots[static_cast<std::size_t>(i)]) {
      if (!failed_list.empty()) failed_list += ", ";
      failed_list += std::to_string(i) + " (" + failures[static_cast<std::size_t>(i)] + ")";
    }
  }
  if (!failed_list.empty()) {
    throw TransportError("instances failed: " + failed_list);
  }
  std::vector<CompletionRecord> out;
  out.reserve(static_cast<std::size_t>(n_instances));
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace segrec::llm
