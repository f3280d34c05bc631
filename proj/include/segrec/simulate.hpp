#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segrec/corpus.hpp"
#include "segrec/embed.hpp"

namespace segrec::sim {

struct SyntheticCohortSpec {
  std::vector<int> ground_truth;  // boundary indices, each in (0, token_count)
  int n_participants = 20;
  double jitter_sd = 0.0;         // tokens
  double miss_rate = 0.0;
  double false_alarm_rate = 0.0;  // per token
  std::uint64_t seed = 0;
};

/// Per participant: each ground-truth boundary kept with probability
/// 1 - miss_rate, offset by a rounded zero-mean Gaussian (sd = jitter_sd,
/// clamped into (0, token_count), collisions deduped); false alarms added
/// per token. Fully determined by (seed, participant index).
std::vector<corpus::HumanAnnotation> simulate_cohort(const SyntheticCohortSpec& spec,
                                                     int token_count,
                                                     const std::string& narrative_id);

enum class RecallOrder { kOriginal, kReversed, kPermuted };

/// Narrative vectors reordered per `order` plus elementwise Gaussian noise.
std::vector<embed::EmbeddingVector> simulate_recall_vectors(
    const std::vector<embed::EmbeddingVector>& narrative_vecs, double noise_sd,
    RecallOrder order, std::uint64_t seed, const std::string& owner_id);

/// Seeded narrative-shaped word soup: sentences of 5-14 words drawn from a
/// fixed vocabulary, terminal punctuation attached, roughly target_tokens
/// long. Used by tests and the simulate subcommand.
std::string synthetic_narrative_text(int target_tokens, std::uint64_t seed);

/// A recall rendition of an event span: each word kept with probability
/// `retention`, in order. Returns the surviving words joined by spaces
/// (possibly empty).
std::string degrade_text(const std::vector<corpus::Token>& tokens, int begin, int end,
                         double retention, std::uint64_t seed, std::uint64_t stream);

}  // namespace segrec::sim
