#include "segrec/seg_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "segrec/errors.hpp"

namespace segrec::metrics {

Eigen::VectorXd to_series(const std::vector<int>& boundaries, int token_count) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(token_count);
  for (int b : boundaries) {
    if (b <= 0 || b >= token_count) {
      throw ValidationError("boundary index " + std::to_string(b) + " outside (0, " +
                            std::to_string(token_count) + ")");
    }
    v[b] = 1.0;
  }
  return v;
}

double boundaries_per_1000(int boundary_count, int token_count) {
  if (token_count <= 0) {
    throw ValidationError("token_count must be positive");
  }
  return 1000.0 * static_cast<double>(boundary_count) / static_cast<double>(token_count);
}

Eigen::VectorXd mean_series(const std::vector<BoundarySeries>& group) {
  if (group.empty()) {
    throw ValidationError("mean_series on empty group");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(group.front().values.size());
  for (const BoundarySeries& s : group) {
    if (s.values.size() != sum.size()) {
      throw ValidationError("series length mismatch in group");
    }
    sum += s.values;
  }
  return sum / static_cast<double>(group.size());
}

std::vector<AgreementScore> loo_agreement(const std::vector<BoundarySeries>& group) {
  if (group.size() < 2) {
    throw ValidationError("loo_agreement needs at least 2 series");
  }
  Eigen::VectorXd total = Eigen::VectorXd::Zero(group.front().values.size());
  for (const BoundarySeries& s : group) {
    if (s.values.size() != total.size()) {
      throw ValidationError("series length mismatch in group");
    }
    total += s.values;
  }
  std::vector<AgreementScore> out;
  out.reserve(group.size());
  const double n_others = static_cast<double>(group.size() - 1);
  for (const BoundarySeries& s : group) {
    Eigen::VectorXd others_mean = (total - s.values) / n_others;
    AgreementScore score;
    score.source_id = s.source_id;
    score.narrative_id = s.narrative_id;
    score.value = stats::point_biserial(s.values, others_mean);
    out.push_back(std::move(score));
  }
  return out;
}

std::optional<double> cross_agreement(const BoundarySeries& human, const MeanSeries& group_mean) {
  if (human.values.size() != group_mean.values.size()) {
    throw ValidationError("series length mismatch");
  }
  return stats::point_biserial(human.values, group_mean.values);
}

namespace {

std::vector<int> marked_indices(const std::vector<BoundarySeries>& group) {
  if (group.empty()) return {};
  const Eigen::Index n = group.front().values.size();
  std::vector<int> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const BoundarySeries& s : group) {
      if (s.values[i] > 0.0) {
        out.push_back(static_cast<int>(i));
        break;
      }
    }
  }
  return out;
}

bool any_within(const std::vector<int>& sorted, int idx, int tolerance) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), idx - tolerance);
  return it != sorted.end() && *it <= idx + tolerance;
}

// One-to-one matches between two sorted peak lists with an index tolerance;
// equals plain set intersection at tolerance 0.
int matched_count(const std::vector<int>& a, const std::vector<int>& b, int tolerance) {
  int count = 0;
  std::size_t j = 0;
  for (int x : a) {
    while (j < b.size() && b[j] < x - tolerance) ++j;
    if (j < b.size() && b[j] <= x + tolerance) {
      ++count;
      ++j;
    }
  }
  return count;
}

}  // namespace

std::vector<BoundaryClassification> classify_shared_distinct(
    const std::vector<BoundarySeries>& human_group,
    const std::vector<BoundarySeries>& llm_group, int tolerance) {
  if (human_group.empty()) {
    throw ValidationError("classify_shared_distinct: empty human group");
  }
  const Eigen::VectorXd human_mean = mean_series(human_group);
  const std::vector<int> llm_marks = marked_indices(llm_group);
  std::vector<BoundaryClassification> out;
  for (int idx : marked_indices(human_group)) {
    BoundaryClassification c;
    c.token_index = idx;
    c.kind = any_within(llm_marks, idx, tolerance) ? BoundaryKind::kShared
                                                   : BoundaryKind::kDistinct;
    c.human_proportion = human_mean[idx];
    out.push_back(c);
  }
  return out;
}

std::vector<int> find_peaks(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const Eigen::Index n = values.size();
  std::vector<int> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = values[i];
    if (v <= 0.0) continue;
    const double prev = i > 0 ? values[i - 1] : 0.0;
    const double next = i + 1 < n ? values[i + 1] : 0.0;
    if (v > prev && v >= next) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<ConsistencyIteration> between_group_consistency(
    const std::vector<BoundarySeries>& humans, const std::vector<BoundarySeries>& llms,
    int group_size, int iterations, std::uint64_t seed, int tolerance) {
  const int g = group_size;
  if (static_cast<int>(humans.size()) < 2 * g) {
    throw ValidationError("between_group_consistency: need at least 2*group_size humans");
  }
  if (static_cast<int>(llms.size()) < g) {
    throw ValidationError("between_group_consistency: need at least group_size LLM instances");
  }

  auto group_peaks = [&](const std::vector<BoundarySeries>& pool,
                         const std::vector<int>& members) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(pool.front().values.size());
    for (int m : members) sum += pool[static_cast<std::size_t>(m)].values;
    sum /= static_cast<double>(members.size());
    return find_peaks(sum);
  };

  std::vector<ConsistencyIteration> out;
  out.reserve(static_cast<std::size_t>(iterations));
  for (int it = 0; it < iterations; ++it) {
    stats::RngStream rng(seed, static_cast<std::uint64_t>(it));
    std::vector<int> order(humans.size());
    for (std::size_t i = 0; i < humans.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    const std::vector<int> main_group(order.begin(), order.begin() + g);
    const std::vector<int> comparison_group(order.begin() + g, order.begin() + 2 * g);
    const std::vector<int> llm_group =
        rng.sample_without_replacement(static_cast<int>(llms.size()), g);

    const std::vector<int> main_peaks = group_peaks(humans, main_group);
    const std::vector<int> comp_peaks = group_peaks(humans, comparison_group);
    const std::vector<int> llm_peaks = group_peaks(llms, llm_group);

    ConsistencyIteration rec;
    rec.iteration = it;
    rec.n_events_human = static_cast<int>(std::min(main_peaks.size(), comp_peaks.size()));
    rec.n_events_llm = static_cast<int>(std::min(main_peaks.size(), llm_peaks.size()));
    if (rec.n_events_human > 0) {
      rec.prop_human_human = static_cast<double>(matched_count(main_peaks, comp_peaks, tolerance)) /
                             static_cast<double>(rec.n_events_human);
    }
    if (rec.n_events_llm > 0) {
      rec.prop_human_llm = static_cast<double>(matched_count(main_peaks, llm_peaks, tolerance)) /
                           static_cast<double>(rec.n_events_llm);
    }
    out.push_back(rec);
  }
  return out;
}

NormativeBoundaries normative_boundaries(const std::vector<BoundarySeries>& instances) {
  if (instances.empty()) {
    throw ValidationError("normative_boundaries: no instances");
  }
  double count_sum = 0.0;
  for (const BoundarySeries& s : instances) count_sum += s.values.sum();
  const double mean_count = count_sum / static_cast<double>(instances.size());
  const int n = static_cast<int>(std::llround(mean_count));  // half away from zero

  const Eigen::VectorXd mean = mean_series(instances);
  std::vector<int> positive;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (mean[i] > 0.0) positive.push_back(static_cast<int>(i));
  }
  std::stable_sort(positive.begin(), positive.end(), [&](int a, int b) {
    if (mean[a] != mean[b]) return mean[a] > mean[b];
    return a < b;
  });

  NormativeBoundaries out;
  out.narrative_id = instances.front().narrative_id;
  out.n = n;
  if (static_cast<int>(positive.size()) < n) {
    out.flagged = true;
    out.indices = positive;
  } else {
    out.indices.assign(positive.begin(), positive.begin() + n);
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

std::vector<int> select_non_boundaries(const NormativeBoundaries& normative,
                                       const std::vector<int>& sentence_ends,
                                       int token_count,
                                       std::vector<std::pair<int, int>>* skipped_spans) {
  std::set<int> normative_set(normative.indices.begin(), normative.indices.end());
  std::vector<int> ends_sorted = sentence_ends;
  std::sort(ends_sorted.begin(), ends_sorted.end());

  std::vector<std::pair<int, int>> spans;
  int start = 0;
  for (int b : normative.indices) {
    spans.emplace_back(start, b);
    start = b;
  }
  spans.emplace_back(start, token_count);

  std::vector<int> picks;
  for (const auto& [s, e] : spans) {
    if (e <= s) continue;
    const int mid = (s + e) / 2;
    int best = -1;
    int best_dist = token_count + 1;
    for (int idx : ends_sorted) {
      if (idx < s) continue;
      if (idx >= e) break;
      if (normative_set.count(idx)) continue;
      const int dist = std::abs(idx - mid);
      if (dist < best_dist) {  // ties keep the earlier index
        best_dist = dist;
        best = idx;
      }
    }
    if (best >= 0) {
      picks.push_back(best);
    } else if (skipped_spans) {
      skipped_spans->emplace_back(s, e);
    }
  }
  std::sort(picks.begin(), picks.end());
  picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
  return picks;
}

double scale_rating(const corpus::RatingRecord& record, RatingScaleMode mode) {
  if (record.confidence < 1 || record.confidence > 10) {
    throw ValidationError("confidence " + std::to_string(record.confidence) +
                          " outside [1,10]");
  }
  const double sign = record.judged_boundary ? 1.0 : -1.0;
  if (mode == RatingScaleMode::kConfidenceNinths) {
    return sign * static_cast<double>(record.confidence - 1) / 9.0;
  }
  return sign * static_cast<double>(record.confidence) / 10.0;
}

RatingSummary rating_summary(const std::vector<corpus::RatingRecord>& records,
                             const std::map<std::pair<std::string, int>, bool>& mark_kinds,
                             RatingScaleMode mode) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_participant;
  for (const corpus::RatingRecord& r : records) {
    auto it = mark_kinds.find({r.narrative_id, r.mark_token_index});
    if (it == mark_kinds.end()) {
      throw ValidationError("rating at unmarked location: narrative " + r.narrative_id +
                            ", index " + std::to_string(r.mark_token_index));
    }
    auto& bucket = by_participant[r.participant_id];
    (it->second ? bucket.first : bucket.second).push_back(scale_rating(r, mode));
  }
  if (by_participant.size() < 2) {
    throw ValidationError("rating_summary needs at least 2 participants");
  }

  RatingSummary summary;
  std::vector<double> boundary_means;
  std::vector<double> non_boundary_means;
  for (const auto& [pid, bucket] : by_participant) {
    ParticipantRatingMeans row;
    row.participant_id = pid;
    if (!bucket.first.empty()) {
      row.boundary_mean = stats::mean(bucket.first);
      boundary_means.push_back(*row.boundary_mean);
    }
    if (!bucket.second.empty()) {
      row.non_boundary_mean = stats::mean(bucket.second);
      non_boundary_means.push_back(*row.non_boundary_mean);
    }
    summary.per_participant.push_back(std::move(row));
  }
  summary.n_boundary_participants = static_cast<int>(boundary_means.size());
  summary.n_non_boundary_participants = static_cast<int>(non_boundary_means.size());
  if (boundary_means.size() >= 2) {
    summary.t_boundary_vs_zero = stats::t_one_sample(boundary_means, 0.0);
  }
  if (non_boundary_means.size() >= 2) {
    summary.t_non_boundary_vs_zero = stats::t_one_sample(non_boundary_means, 0.0);
  }
  if (boundary_means.size() >= 2 && non_boundary_means.size() >= 2) {
    summary.t_between_conditions = stats::t_two_sample_welch(boundary_means, non_boundary_means);
  }
  return summary;
}

}  // namespace segrec::metrics
