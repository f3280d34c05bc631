#include "segrec/recall.hpp"

#include <algorithm>
#include <cmath>

#include "segrec/errors.hpp"
#include "segrec/stats.hpp"

namespace segrec::recall {

Eigen::MatrixXd similarity_matrix(const std::vector<embed::EmbeddingVector>& a,
                                  const std::vector<embed::EmbeddingVector>& b) {
  if (a.empty() || b.empty()) {
    throw ValidationError("similarity_matrix: empty vector list");
  }
  const Eigen::Index dim = a.front().values.size();
  if (dim < 2) {
    throw ValidationError("similarity_matrix: vectors need dim >= 2");
  }
  auto ranks_of = [&](const std::vector<embed::EmbeddingVector>& vs) {
    std::vector<Eigen::VectorXd> ranks;
    ranks.reserve(vs.size());
    for (const embed::EmbeddingVector& v : vs) {
      if (v.values.size() != dim) {
        throw IntegrityError("similarity_matrix: dimension mismatch at segment " + v.owner_id +
                             "[" + std::to_string(v.event_index) + "]");
      }
      if (v.values.maxCoeff() == v.values.minCoeff()) {
        throw IntegrityError("similarity_matrix: constant vector at segment " + v.owner_id +
                             "[" + std::to_string(v.event_index) + "]");
      }
      ranks.push_back(stats::average_ranks(v.values));
    }
    return ranks;
  };
  const std::vector<Eigen::VectorXd> ra = ranks_of(a);
  const std::vector<Eigen::VectorXd> rb = ranks_of(b);

  Eigen::MatrixXd m(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::optional<double> r = stats::pearson(ra[i], rb[j]);
      if (!r) {
        // Constant ranks only happen for all-tied vectors, rejected above.
        throw IntegrityError("similarity_matrix: undefined entry");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *r;
    }
  }
  return m;
}

Eigen::MatrixXd resize_bilinear(const Eigen::Ref<const Eigen::MatrixXd>& in, int rows, int cols) {
  if (in.size() == 0) {
    throw ValidationError("resize_bilinear: empty input");
  }
  if (rows < 1 || cols < 1) {
    throw ValidationError("resize_bilinear: output shape must be at least 1x1");
  }
  const Eigen::Index in_rows = in.rows();
  const Eigen::Index in_cols = in.cols();
  Eigen::MatrixXd out(rows, cols);

  auto src_coord = [](Eigen::Index dst, Eigen::Index out_n, Eigen::Index in_n) {
    double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(in_n) /
                   static_cast<double>(out_n) -
               0.5;
    return std::clamp(s, 0.0, static_cast<double>(in_n - 1));
  };

  for (Eigen::Index r = 0; r < rows; ++r) {
    const double sy = src_coord(r, rows, in_rows);
    const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(sy));
    const Eigen::Index y1 = std::min(y0 + 1, in_rows - 1);
    const double fy = sy - static_cast<double>(y0);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double sx = src_coord(c, cols, in_cols);
      const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(sx));
      const Eigen::Index x1 = std::min(x0 + 1, in_cols - 1);
      const double fx = sx - static_cast<double>(x0);
      out(r, c) = (1.0 - fy) * ((1.0 - fx) * in(y0, x0) + fx * in(y0, x1)) +
                  fy * ((1.0 - fx) * in(y1, x0) + fx * in(y1, x1));
    }
  }
  return out;
}

std::vector<IntersubjectScore> intersubject_agreement(
    const std::map<std::string, std::vector<embed::EmbeddingVector>>& recalls_by_participant,
    int n_events, std::vector<std::string>* excluded) {
  std::vector<std::string> kept;
  for (const auto& [pid, vecs] : recalls_by_participant) {
    if (vecs.size() >= 2) {
      kept.push_back(pid);
    } else if (excluded) {
      excluded->push_back(pid);
    }
  }
  if (kept.size() < 2) {
    throw ValidationError("intersubject_agreement needs at least 2 eligible participants");
  }

  std::vector<IntersubjectScore> out;
  for (const std::string& p : kept) {
    IntersubjectScore score;
    score.participant_id = p;
    double diag_sum = 0.0;
    double rev_sum = 0.0;
    for (const std::string& q : kept) {
      if (q == p) continue;
      const Eigen::MatrixXd m = resize_square(
          similarity_matrix(recalls_by_participant.at(p), recalls_by_participant.at(q)),
          n_events);
      double d = 0.0;
      double r = 0.0;
      for (int i = 0; i < n_events; ++i) {
        d += m(i, i);
        r += m(i, n_events - 1 - i);
      }
      diag_sum += d / n_events;
      rev_sum += r / n_events;
      ++score.n_pairs;
    }
    score.diag_mean = diag_sum / score.n_pairs;
    score.rev_diag_mean = rev_sum / score.n_pairs;
    out.push_back(std::move(score));
  }
  return out;
}

RecallReport event_recall_scores(const std::vector<embed::EmbeddingVector>& narrative_vecs,
                                 const std::vector<embed::EmbeddingVector>& recall_vecs) {
  if (narrative_vecs.empty() || recall_vecs.empty()) {
    throw ValidationError("event_recall_scores: need at least one event on each side");
  }
  const int n = static_cast<int>(narrative_vecs.size());
  const Eigen::MatrixXd m = resize_square(similarity_matrix(narrative_vecs, recall_vecs), n);
  RecallReport report;
  report.narrative_id = narrative_vecs.front().owner_id;
  report.participant_id = recall_vecs.front().owner_id;
  report.model_id = narrative_vecs.front().model_id;
  report.per_event_scores.reserve(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double row_max = m.row(i).maxCoeff();
    report.per_event_scores.push_back(row_max);
    sum += row_max;
  }
  report.mean_score = sum / n;
  return report;
}

double baseline_score(const std::vector<embed::EmbeddingVector>& recall_vecs,
                      const std::vector<std::vector<embed::EmbeddingVector>>& other_narratives,
                      BaselineMode mode) {
  if (other_narratives.empty()) {
    throw ValidationError("baseline_score: need at least one unrelated narrative");
  }
  if (mode == BaselineMode::kAverage) {
    double sum = 0.0;
    for (const auto& narr : other_narratives) {
      sum += event_recall_scores(narr, recall_vecs).mean_score;
    }
    return sum / static_cast<double>(other_narratives.size());
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& narr : other_narratives) {
    const RecallReport r = event_recall_scores(narr, recall_vecs);
    for (double s : r.per_event_scores) {
      sum += s;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

std::map<std::string, std::vector<double>> standardize_by_model(
    const std::map<std::string, std::vector<double>>& scores_by_model) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [model, scores] : scores_by_model) {
    try {
      out[model] = stats::zscore(scores);
    } catch (const DomainError&) {
      throw DomainError("standardize_by_model: group '" + model +
                        "' has zero variance or too few scores");
    }
  }
  return out;
}

SplitHalfResult split_half(const std::vector<double>& auto_scores,
                           const std::vector<double>& human_scores,
                           const std::vector<std::string>& participant_ids, int iterations,
                           std::uint64_t seed) {
  if (auto_scores.size() != human_scores.size() ||
      auto_scores.size() != participant_ids.size()) {
    throw ValidationError("split_half: input lengths differ");
  }
  // Participant blocks in sorted id order so results do not depend on row
  // order in input files.
  std::map<std::string, std::vector<std::size_t>> blocks;
  for (std::size_t i = 0; i < participant_ids.size(); ++i) {
    blocks[participant_ids[i]].push_back(i);
  }
  if (blocks.size() < 4) {
    throw ValidationError("split_half needs at least 4 participants");
  }
  std::vector<std::vector<std::size_t>> participant_rows;
  participant_rows.reserve(blocks.size());
  for (auto& [pid, rows] : blocks) participant_rows.push_back(std::move(rows));

  const int n_participants = static_cast<int>(participant_rows.size());
  const int half = n_participants / 2;

  SplitHalfResult result;
  result.iterations = iterations;
  result.dropped_participant = (n_participants % 2) != 0;

  auto gather = [&](const std::vector<int>& members, const std::vector<double>& source) {
    std::vector<double> vals;
    for (int m : members) {
      for (std::size_t row : participant_rows[static_cast<std::size_t>(m)]) {
        vals.push_back(source[row]);
      }
    }
    return vals;
  };
  auto spearman_of = [](const std::vector<double>& x, const std::vector<double>& y) {
    const Eigen::Map<const Eigen::VectorXd> vx(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::Map<const Eigen::VectorXd> vy(y.data(), static_cast<Eigen::Index>(y.size()));
    return stats::spearman(vx, vy);
  };

  std::vector<double> actuals;
  std::vector<double> nulls;
  actuals.reserve(static_cast<std::size_t>(iterations));
  nulls.reserve(static_cast<std::size_t>(iterations));

  for (int it = 0; it < iterations; ++it) {
    stats::RngStream rng(seed, static_cast<std::uint64_t>(it));
    std::vector<int> order(static_cast<std::size_t>(n_participants));
    for (int i = 0; i < n_participants; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    const std::vector<int> half1(order.begin(), order.begin() + half);
    const std::vector<int> half2(order.begin() + half, order.begin() + 2 * half);

    const std::optional<double> actual =
        spearman_of(gather(half1, auto_scores), gather(half1, human_scores));
    std::vector<double> h2_auto = gather(half2, auto_scores);
    std::vector<double> h2_human = gather(half2, human_scores);
    rng.shuffle(h2_human);
    const std::optional<double> null = spearman_of(h2_auto, h2_human);

    if (actual) {
      actuals.push_back(*actual);
    } else {
      ++result.n_undefined;
    }
    if (null) {
      nulls.push_back(*null);
    } else {
      ++result.n_undefined;
    }
  }

  if (actuals.empty() || nulls.empty()) {
    throw DomainError("split_half: every iteration produced an undefined correlation");
  }
  result.rho_mean = stats::mean(actuals);
  result.rho_sb = stats::spearman_brown(result.rho_mean);
  result.p_value = stats::permutation_p(actuals.front(), nulls);
  result.p_mean_vs_null = stats::permutation_p(result.rho_mean, nulls);
  result.null_mean = stats::mean(nulls);
  result.null_sd = nulls.size() >= 2 ? stats::stddev(nulls) : 0.0;
  return result;
}

RegressionResult standardized_regression(const std::vector<double>& auto_z,
                                         const std::vector<double>& human_z) {
  const std::size_t n = auto_z.size();
  if (n != human_z.size() || n < 3) {
    throw ValidationError("standardized_regression: need equal lengths >= 3");
  }
  const double mx = stats::mean(auto_z);
  const double my = stats::mean(human_z);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (auto_z[i] - mx) * (human_z[i] - my);
    sxx += (auto_z[i] - mx) * (auto_z[i] - mx);
  }
  if (sxx == 0.0) {
    throw DomainError("standardized_regression: predictor has zero variance");
  }
  RegressionResult r;
  r.n = static_cast<int>(n);
  r.beta = sxy / sxx;
  const double denom = 1.0 - r.beta * r.beta;
  if (denom <= 0.0) {
    r.exact_fit = true;
    return r;
  }
  const double df = static_cast<double>(n - 2);
  r.t_statistic = r.beta * std::sqrt(df / denom);
  r.p_value = stats::student_t_two_sided_p(*r.t_statistic, df);
  return r;
}

}  // namespace segrec::recall
