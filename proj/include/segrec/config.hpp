#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace segrec::config {

/// Minimal TOML subset: [section] / [section.sub] headers, `key = value`
/// pairs, strings, booleans, integers, floats, flat arrays, # comments.
/// Keys are returned dotted ("llm.temperatures").
using TomlValue = std::variant<std::string, bool, std::int64_t, double,
                               std::vector<std::string>, std::vector<double>>;
std::map<std::string, TomlValue> parse_toml(const std::string& content);

enum class BackendKind { kHttp, kMock };

struct RetryConfig {
  int max_attempts = 5;
  int initial_delay_ms = 1000;
};

struct LlmConfig {
  BackendKind backend = BackendKind::kMock;
  std::string base_url = "http://127.0.0.1:8080/v1";
  std::string api_key_env = "SEGREC_API_KEY";
  std::string model_id = "gpt-4";
  std::vector<double> temperatures = {0.0, 0.5, 1.0};
  int n_instances = 20;
  int max_output_tokens = 4096;
  int parallelism = 4;
  RetryConfig retry;
  // Mock corruption model.
  double mock_substitution_rate = 0.0;
  double mock_segment_drop_rate = 0.0;
  double mock_boundary_jitter_sd = 0.0;
  int mock_auto_events = 12;
  std::map<std::string, std::vector<int>> mock_ground_truth;  // narrative_id -> indices
};

struct EmbeddingConfig {
  BackendKind backend = BackendKind::kMock;
  std::string base_url = "http://127.0.0.1:8080/v1";
  std::string api_key_env = "SEGREC_API_KEY";
  std::string model_id = "mock-embed";
  int mock_dim = 64;
};

struct PipelineConfig {
  std::vector<std::string> narrative_paths;
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  int tolerance = 0;            // +- k boundary matching window
  int group_size = 10;
  int consistency_iterations = 100;
  int split_half_iterations = 10000;
  std::string rating_scale = "tenths";    // or "ninths"
  std::string baseline_mode = "average";  // or "pool"
  LlmConfig llm;
  EmbeddingConfig embedding;
  // Optional input files used by subcommands.
  std::string annotations_path;
  std::string ratings_path;
  std::string recalls_path;
  std::string human_scores_path;
};

PipelineConfig default_config();
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical serialization of the resolved config; its SHA-256 prefix is the
/// config hash stamped into every emitted artifact.
std::string canonical_string(const PipelineConfig& cfg);
std::string config_hash(const PipelineConfig& cfg);

}  // namespace segrec::config
