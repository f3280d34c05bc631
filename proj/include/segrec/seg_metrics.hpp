#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "segrec/corpus.hpp"
#include "segrec/stats.hpp"

namespace segrec::metrics {

/// Binary word-level series: values[i] = 1 iff a boundary lies just prior to
/// token i. values[0] is always 0.
struct BoundarySeries {
  std::string narrative_id;
  std::string source_id;
  Eigen::VectorXd values;
};

struct MeanSeries {
  std::string narrative_id;
  std::string group_id;
  Eigen::VectorXd values;
  int group_size = 0;
};

struct AgreementScore {
  std::string source_id;
  std::string narrative_id;
  std::optional<double> value;  // nullopt = undefined (constant series)
};

enum class BoundaryKind { kShared, kDistinct };

struct BoundaryClassification {
  int token_index = 0;
  BoundaryKind kind = BoundaryKind::kDistinct;
  double human_proportion = 0.0;
};

struct ConsistencyIteration {
  int iteration = 0;
  std::optional<double> prop_human_human;
  std::optional<double> prop_human_llm;
  int n_events_human = 0;  // min peak count in the human/human comparison
  int n_events_llm = 0;    // min peak count in the human/LLM comparison
};

struct NormativeBoundaries {
  std::string narrative_id;
  int n = 0;
  std::vector<int> indices;
  bool flagged = false;  // fewer positive positions than n
};

/// Throws ValidationError on indices outside (0, token_count).
Eigen::VectorXd to_series(const std::vector<int>& boundaries, int token_count);

double boundaries_per_1000(int boundary_count, int token_count);

Eigen::VectorXd mean_series(const std::vector<BoundarySeries>& group);

/// Leave-one-out point-biserial agreement: each member's binary series
/// against the mean series of the remaining members.
std::vector<AgreementScore> loo_agreement(const std::vector<BoundarySeries>& group);

std::optional<double> cross_agreement(const BoundarySeries& human, const MeanSeries& group_mean);

/// Human-marked indices classified shared (>= 1 LLM instance marks the same
/// index, within an optional +-tolerance window) or distinct.
std::vector<BoundaryClassification> classify_shared_distinct(
    const std::vector<BoundarySeries>& human_group,
    const std::vector<BoundarySeries>& llm_group, int tolerance = 0);

/// Peaks of an averaged series: values[i] > 0, strictly above the left
/// neighbour, not below the right one (borders count as 0). Of a plateau of
/// equal positive values only the first index qualifies.
std::vector<int> find_peaks(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Seeded permutation test over group splits; per iteration the humans are
/// split into main/comparison groups of g and g LLM instances are sampled,
/// peak sets are intersected, and each proportion is normalized by the
/// smaller peak count. Iterations derive independent RNG streams from
/// (seed, iteration).
std::vector<ConsistencyIteration> between_group_consistency(
    const std::vector<BoundarySeries>& humans, const std::vector<BoundarySeries>& llms,
    int group_size, int iterations, std::uint64_t seed, int tolerance = 0);

/// Top-n positions by mean proportion where n is the mean per-instance
/// boundary count rounded half away from zero; ties prefer earlier indices.
NormativeBoundaries normative_boundaries(const std::vector<BoundarySeries>& instances);

/// One non-boundary mark per event span: the sentence-end index nearest the
/// span midpoint that is not itself a normative boundary. Spans with no
/// eligible index are skipped (reported through `skipped_spans` when given).
std::vector<int> select_non_boundaries(const NormativeBoundaries& normative,
                                       const std::vector<int>& sentence_ends,
                                       int token_count,
                                       std::vector<std::pair<int, int>>* skipped_spans = nullptr);

enum class RatingScaleMode {
  kConfidenceTenths,  // sign * confidence / 10 (default)
  kConfidenceNinths,  // sign * (confidence - 1) / 9
};

/// Signed confidence scaled into [-1, 1]. Throws ValidationError when the
/// confidence is outside [1, 10].
double scale_rating(const corpus::RatingRecord& record,
                    RatingScaleMode mode = RatingScaleMode::kConfidenceTenths);

struct ParticipantRatingMeans {
  std::string participant_id;
  std::optional<double> boundary_mean;
  std::optional<double> non_boundary_mean;
};

struct RatingSummary {
  std::vector<ParticipantRatingMeans> per_participant;
  std::optional<stats::TTestResult> t_boundary_vs_zero;      // nullopt = degenerate
  std::optional<stats::TTestResult> t_non_boundary_vs_zero;
  std::optional<stats::TTestResult> t_between_conditions;    // Welch
  int n_boundary_participants = 0;
  int n_non_boundary_participants = 0;
};

/// mark_kinds: (narrative_id, token index) -> true when the mark is a
/// normative boundary, false for a non-boundary control.
RatingSummary rating_summary(const std::vector<corpus::RatingRecord>& records,
                             const std::map<std::pair<std::string, int>, bool>& mark_kinds,
                             RatingScaleMode mode = RatingScaleMode::kConfidenceTenths);

}  // namespace segrec::metrics
