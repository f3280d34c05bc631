#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace segrec::embed {

/// One event's text. owner_id is the narrative id, or
/// "<participant>::<narrative>" for recall segments.
struct SegmentRecord {
  std::string owner_id;
  int event_index = 0;
  std::string text;
};

struct EmbeddingVector {
  std::string owner_id;
  int event_index = 0;
  std::string model_id;
  Eigen::VectorXd values;
};

class EmbedBackend {
 public:
  virtual ~EmbedBackend() = default;
  virtual std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts,
                                             const std::string& model_id) = 0;
};

/// POST {base_url}/embeddings with {model, input:[texts]}; API key read from
/// the named environment variable; transient failures retried with backoff.
class HttpEmbedBackend : public EmbedBackend {
 public:
  HttpEmbedBackend(std::string base_url, std::string api_key_env, int max_attempts = 5,
                   int initial_delay_ms = 1000);
  std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts,
                                     const std::string& model_id) override;

 private:
  std::string base_url_;
  std::string api_key_env_;
  int max_attempts_;
  int initial_delay_ms_;
};

/// Deterministic offline embeddings: each normalized token hashes to a fixed
/// random direction and a segment embeds as the L2-normalized token sum, so
/// texts sharing words land near each other. Reproducible from (seed, dim).
class MockEmbedBackend : public EmbedBackend {
 public:
  MockEmbedBackend(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts,
                                     const std::string& model_id) override;

 private:
  int dim_;
  std::uint64_t seed_;
};

/// One vector per segment, order preserving, cached on disk by
/// (model_id, sha256(text)) when a cache directory is given. Dimension
/// mismatches and constant vectors raise IntegrityError.
std::vector<EmbeddingVector> embed_texts(const std::vector<SegmentRecord>& segments,
                                         const std::string& model_id, EmbedBackend& backend,
                                         const std::optional<std::filesystem::path>& cache_dir);

/// JSONL, one object per line:
/// {"owner_id": ..., "event_index": ..., "model_id": ..., "values": [...]}.
/// Malformed lines raise ParseError with the line number; duplicate segment
/// refs or mixed dimensions raise IntegrityError. Round-trips bit exactly.
std::vector<EmbeddingVector> import_vectors(const std::filesystem::path& path);
void export_vectors(const std::filesystem::path& path,
                    const std::vector<EmbeddingVector>& vectors);

}  // namespace segrec::embed
