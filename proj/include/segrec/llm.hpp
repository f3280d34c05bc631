#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "segrec/corpus.hpp"

namespace segrec::llm {

struct SegmentationRequest {
  std::string narrative_id;
  std::string model_id;
  double temperature = 0.0;          // in [0, 1]
  int instance_index = 0;
  int max_output_tokens = 4096;
};

struct CompletionRecord {
  SegmentationRequest request;
  std::string raw_text;
  bool retrieved_from_cache = false;
  std::chrono::system_clock::time_point timestamp;
};

/// The instruction paragraph, the story verbatim, then the reiteration line,
/// each separated by a single newline. Throws ValidationError on empty input.
std::string build_segmentation_prompt(const std::string& narrative_text);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const SegmentationRequest& request,
                               const std::string& prompt) = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_delay{1000};
  double multiplier = 2.0;
  bool jitter = true;
};

/// OpenAI-compatible chat backend: POST {base_url}/chat/completions with
/// {model, messages, temperature, max_tokens}. Transient failures (connection
/// errors, 408/429/5xx) are retried with jittered exponential backoff; other
/// 4xx raise ConfigError immediately; finish_reason "length" raises
/// TruncationError carrying the partial text.
class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(std::string base_url, std::string api_key_env,
                  RetryPolicy retry = {});
  std::string complete(const SegmentationRequest& request,
                       const std::string& prompt) override;

 private:
  std::string base_url_;
  std::string api_key_env_;
  RetryPolicy retry_;
};

/// Offline backend. Recovers the story from the prompt, chooses ground-truth
/// boundaries (explicit per narrative, else derived from sentence ends), and
/// emits the story with a newline at each boundary, optionally corrupted:
/// per-token substitution, whole-segment drops, and boundary jitter, all
/// seeded per (narrative, model, temperature, instance). Boundary jitter is
/// scaled by the request temperature, so temperature 0 reproduces the ground
/// truth exactly and higher temperatures scatter boundaries more.
struct MockChatConfig {
  std::map<std::string, std::vector<int>> ground_truth;  // narrative_id -> indices
  int auto_events = 12;           // used when no explicit ground truth is given
  double substitution_rate = 0.0;
  double segment_drop_rate = 0.0;
  double boundary_jitter_sd = 0.0;
  std::uint64_t seed = 0;
};

class MockChatBackend : public ChatBackend {
 public:
  explicit MockChatBackend(MockChatConfig config) : config_(std::move(config)) {}
  std::string complete(const SegmentationRequest& request,
                       const std::string& prompt) override;

  /// The boundary set the mock would target for this narrative.
  std::vector<int> ground_truth_for(const corpus::Narrative& narrative) const;

 private:
  MockChatConfig config_;
};

/// Completion orchestration: disk cache in front of a backend.
/// Cache key = SHA-256 of (model_id, prompt, temperature, instance_index);
/// one file per key, written atomically.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatBackend> backend,
          std::optional<std::filesystem::path> cache_dir);

  static std::string cache_key(const std::string& model_id, const std::string& prompt,
                               double temperature, int instance_index);

  CompletionRecord complete(const SegmentationRequest& request,
                            const std::string& narrative_text);

  /// Runs instance_index 0..n-1, up to `parallelism` requests in flight.
  /// Output is ordered by instance_index. If any instance fails after
  /// retries, throws TransportError listing the failed indices; successful
  /// instances remain cached.
  std::vector<CompletionRecord> run_instances(const corpus::Narrative& narrative,
                                              const std::string& model_id,
                                              double temperature, int n_instances,
                                              int parallelism = 4);

 private:
  std::shared_ptr<ChatBackend> backend_;
  std::optional<std::filesystem::path> cache_dir_;
};

}  // namespace segrec::llm
