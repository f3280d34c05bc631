#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace segrec::stats {

// ---------------------------------------------------------------------------
// Seedable RNG.
//
// Generator: PCG32 (O'Neill's pcg32, 64-bit state / 32-bit output) seeded
// through splitmix64 so that (master_seed, stream_id) pins the whole draw
// sequence on every platform. Distinct stream_ids give independent streams.
// The generator choice is part of the output contract: permutation results
// in reports are reproducible from (seed, config) alone.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound); rejection sampling, unbiased. bound > 0.
  std::uint64_t uniform_int(std::uint64_t bound);

  /// Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal();

  /// Fisher-Yates shuffle driven by uniform_int.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct values from {0, ..., n-1}, order randomized.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

// ---------------------------------------------------------------------------
// Correlations. Undefined results (constant input) are nullopt, never NaN.
// ---------------------------------------------------------------------------

std::optional<double> pearson(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& y);

/// Average ranks, 1-based; ties get the mean of the ranks they span.
Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& x);

std::optional<double> spearman(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y);

/// Point-biserial = Pearson with one dichotomous variable. `binary` must
/// contain both 0 and 1 for the result to be defined.
std::optional<double> point_biserial(const Eigen::Ref<const Eigen::VectorXd>& binary,
                                     const Eigen::Ref<const Eigen::VectorXd>& y);

// ---------------------------------------------------------------------------
// Student-t machinery and tests.
// ---------------------------------------------------------------------------

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Two-sided p for a Student-t statistic with (possibly fractional) df.
double student_t_two_sided_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// nullopt marks the degenerate case (zero variance).
std::optional<TTestResult> t_one_sample(const std::vector<double>& x, double mu0);
std::optional<TTestResult> t_two_sample_welch(const std::vector<double>& x,
                                              const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Permutation utilities and score transforms.
// ---------------------------------------------------------------------------

/// One-sided (greater) Monte Carlo p with the add-one estimator:
/// (1 + #{null >= observed}) / (1 + |null|). Ties count toward the numerator.
double permutation_p(double observed, const std::vector<double>& null_samples);

/// Spearman-Brown half-to-full reliability correction 2r/(1+r); rho must be > -1.
double spearman_brown(double rho);

/// (x - mean) / sd with the n-1 denominator; throws DomainError on zero variance.
Eigen::VectorXd zscore(const Eigen::Ref<const Eigen::VectorXd>& x);
std::vector<double> zscore(const std::vector<double>& x);

double mean(const std::vector<double>& x);
/// Sample standard deviation (n-1 denominator).
double stddev(const std::vector<double>& x);

}  // namespace segrec::stats
