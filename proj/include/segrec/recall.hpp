#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "segrec/embed.hpp"

namespace segrec::recall {

/// Entry (i, j) = Spearman rank correlation of a[i].values with b[j].values.
/// Constant vectors raise IntegrityError naming the segment.
Eigen::MatrixXd similarity_matrix(const std::vector<embed::EmbeddingVector>& a,
                                  const std::vector<embed::EmbeddingVector>& b);

/// Center-aligned bilinear interpolation with the mapping
/// src = (dst + 0.5) * (in / out) - 0.5, coordinates clamped to [0, in-1].
/// The mapping is normative for this project so all emitters agree.
Eigen::MatrixXd resize_bilinear(const Eigen::Ref<const Eigen::MatrixXd>& in, int rows, int cols);

inline Eigen::MatrixXd resize_square(const Eigen::Ref<const Eigen::MatrixXd>& in, int n) {
  return resize_bilinear(in, n, n);
}

struct IntersubjectScore {
  std::string participant_id;
  double diag_mean = 0.0;
  double rev_diag_mean = 0.0;
  int n_pairs = 0;
};

/// For each ordered participant pair (p, q): recall x recall similarity,
/// resized to n_events x n_events; diagonal and anti-diagonal means averaged
/// over p's pairs. Participants with fewer than 2 recall events are excluded
/// (ids reported through `excluded` when given).
std::vector<IntersubjectScore> intersubject_agreement(
    const std::map<std::string, std::vector<embed::EmbeddingVector>>& recalls_by_participant,
    int n_events, std::vector<std::string>* excluded = nullptr);

struct RecallReport {
  std::string participant_id;
  std::string narrative_id;
  std::string model_id;
  std::vector<double> per_event_scores;  // one per narrative event
  double mean_score = 0.0;
  std::optional<double> baseline_mean;
};

/// Narrative x recall similarity, resized square to the narrative event
/// count; the row maximum is that event's recall score.
RecallReport event_recall_scores(const std::vector<embed::EmbeddingVector>& narrative_vecs,
                                 const std::vector<embed::EmbeddingVector>& recall_vecs);

enum class BaselineMode {
  kAverage,  // mean of per-narrative mean scores (default)
  kPool,     // mean over all events pooled across unrelated narratives
};

/// Recall scored against unrelated narratives; the floor for genuine recall.
double baseline_score(const std::vector<embed::EmbeddingVector>& recall_vecs,
                      const std::vector<std::vector<embed::EmbeddingVector>>& other_narratives,
                      BaselineMode mode = BaselineMode::kAverage);

/// Within each model group: (x - mean) / sd. Throws DomainError naming the
/// group on zero variance.
std::map<std::string, std::vector<double>> standardize_by_model(
    const std::map<std::string, std::vector<double>>& scores_by_model);

struct SplitHalfResult {
  double rho_mean = 0.0;       // mean split-half correlation (defined iterations)
  double rho_sb = 0.0;         // Spearman-Brown corrected rho_mean
  double p_value = 1.0;        // calibrated permutation p (see split_half docs)
  double p_mean_vs_null = 1.0; // rho_mean ranked among nulls (reported, conservative)
  int iterations = 0;
  double null_mean = 0.0;
  double null_sd = 0.0;
  int n_undefined = 0;         // iterations with an undefined correlation
  bool dropped_participant = false;  // odd cohort, one left out per split
};

/// Split-half consistency between automated and human per-event scores.
/// Per seeded iteration the participants split into two equal halves; half 1
/// gives an actual Spearman correlation, half 2 with one side shuffled gives
/// a null correlation. rho_mean averages the actual correlations and feeds
/// the Spearman-Brown correction. p_value ranks a single held-out actual
/// draw (iteration 0) among the nulls with the add-one estimator, which is
/// the exchangeable comparison with a calibrated false-positive rate;
/// p_mean_vs_null ranks rho_mean itself and is reported alongside.
SplitHalfResult split_half(const std::vector<double>& auto_scores,
                           const std::vector<double>& human_scores,
                           const std::vector<std::string>& participant_ids, int iterations,
                           std::uint64_t seed);

struct RegressionResult {
  double beta = 0.0;
  std::optional<double> t_statistic;  // nullopt when |beta| == 1 (exact fit)
  std::optional<double> p_value;
  int n = 0;
  bool exact_fit = false;
};

/// OLS of human on auto for z-scored inputs; beta then equals Pearson r.
RegressionResult standardized_regression(const std::vector<double>& auto_z,
                                         const std::vector<double>& human_z);

}  // namespace segrec::recall
