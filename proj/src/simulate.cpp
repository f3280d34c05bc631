#include "segrec/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "segrec/errors.hpp"
#include "segrec/io.hpp"
#include "segrec/stats.hpp"

namespace segrec::sim {

std::vector<corpus::HumanAnnotation> simulate_cohort(const SyntheticCohortSpec& spec,
                                                     int token_count,
                                                     const std::string& narrative_id) {
  for (int b : spec.ground_truth) {
    if (b <= 0 || b >= token_count) {
      throw ValidationError("ground-truth boundary " + std::to_string(b) + " out of range");
    }
  }
  std::vector<corpus::HumanAnnotation> cohort;
  cohort.reserve(static_cast<std::size_t>(spec.n_participants));
  for (int p = 0; p < spec.n_participants; ++p) {
    stats::RngStream rng(spec.seed, static_cast<std::uint64_t>(p));
    corpus::HumanAnnotation a;
    a.narrative_id = narrative_id;
    {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "sim%03d", p);
      a.participant_id = buf;
    }
    for (int b : spec.ground_truth) {
      if (spec.miss_rate > 0.0 && rng.uniform() < spec.miss_rate) continue;
      int idx = b;
      if (spec.jitter_sd > 0.0) {
        const long off = std::lround(rng.normal() * spec.jitter_sd);
        idx = static_cast<int>(std::clamp<long>(b + off, 1, token_count - 1));
      }
      a.boundaries.push_back(idx);
    }
    if (spec.false_alarm_rate > 0.0) {
      for (int i = 1; i < token_count; ++i) {
        if (rng.uniform() < spec.false_alarm_rate) a.boundaries.push_back(i);
      }
    }
    std::sort(a.boundaries.begin(), a.boundaries.end());
    a.boundaries.erase(std::unique(a.boundaries.begin(), a.boundaries.end()),
                       a.boundaries.end());
    cohort.push_back(std::move(a));
  }
  return cohort;
}

std::vector<embed::EmbeddingVector> simulate_recall_vectors(
    const std::vector<embed::EmbeddingVector>& narrative_vecs, double noise_sd,
    RecallOrder order, std::uint64_t seed, const std::string& owner_id) {
  if (noise_sd < 0.0) {
    throw ValidationError("noise_sd must be >= 0");
  }
  const int n = static_cast<int>(narrative_vecs.size());
  std::vector<int> positions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i;
  stats::RngStream rng(seed, io::fnv1a64(owner_id));
  if (order == RecallOrder::kReversed) {
    std::reverse(positions.begin(), positions.end());
  } else if (order == RecallOrder::kPermuted) {
    rng.shuffle(positions);
  }
  std::vector<embed::EmbeddingVector> out;
  out.reserve(narrative_vecs.size());
  for (int i = 0; i < n; ++i) {
    const embed::EmbeddingVector& src = narrative_vecs[static_cast<std::size_t>(positions[i])];
    embed::EmbeddingVector v;
    v.owner_id = owner_id;
    v.event_index = i;
    v.model_id = src.model_id;
    v.values = src.values;
    if (noise_sd > 0.0) {
      for (Eigen::Index d = 0; d < v.values.size(); ++d) {
        v.values[d] += rng.normal() * noise_sd;
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

// Small fixed vocabulary; repeats on purpose so alignment sees realistic
// duplicate tokens.
const char* kVocabulary[] = {
    "the",     "a",       "garden",  "river",   "morning", "walked",  "quietly", "house",
    "dog",     "letter",  "found",   "under",   "old",     "bridge",  "market",  "voices",
    "carried", "wind",    "stone",   "path",    "evening", "lantern", "door",    "opened",
    "slowly",  "child",   "laughed", "rain",    "began",   "fields",  "turned",  "gold",
    "story",   "mother",  "told",    "night",   "fire",    "burned",  "low",     "train",
    "arrived", "station", "empty",   "street",  "waited",  "song",    "ended",   "silence",
    "returned","summer",  "faded",   "grass",   "tall",    "brother", "ran",     "ahead",
    "clouds",  "gathered","distant", "hills",   "kettle",  "whistled","kitchen", "warm",
};
constexpr int kVocabularySize = static_cast<int>(sizeof(kVocabulary) / sizeof(kVocabulary[0]));

}  // namespace

std::string synthetic_narrative_text(int target_tokens, std::uint64_t seed) {
  if (target_tokens < 1) {
    throw ValidationError("target_tokens must be >= 1");
  }
  stats::RngStream rng(seed, 0x6e617272ULL);  // fixed stream: one text per seed
  std::ostringstream out;
  int produced = 0;
  bool first = true;
  while (produced < target_tokens) {
    int len = 5 + static_cast<int>(rng.uniform_int(10));
    len = std::min(len, target_tokens - produced);
    for (int i = 0; i < len; ++i) {
      if (!first) out << ' ';
      first = false;
      out << kVocabulary[rng.uniform_int(kVocabularySize)];
      if (i == len - 1) out << '.';
    }
    produced += len;
  }
  return out.str();
}

std::string degrade_text(const std::vector<corpus::Token>& tokens, int begin, int end,
                         double retention, std::uint64_t seed, std::uint64_t stream) {
  stats::RngStream rng(seed, stream);
  std::ostringstream out;
  bool first = true;
  for (int i = begin; i < end; ++i) {
    if (rng.uniform() >= retention) continue;
    if (!first) out << ' ';
    first = false;
    out << tokens[static_cast<std::size_t>(i)].surface;
  }
  return out.str();
}

}  // namespace segrec::sim
