#include "segrec/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "segrec/errors.hpp"

namespace segrec::stats {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id) {
  const std::uint64_t initstate = splitmix64(master_seed ^ splitmix64(stream_id));
  const std::uint64_t initseq = splitmix64(stream_id + 0xda3e39cb94b95bdbULL);
  state_ = 0;
  inc_ = (initseq << 1) | 1u;
  next_u32();
  state_ += initstate;
  next_u32();
}

std::uint32_t RngStream::next_u32() {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18) ^ old) >> 27);
  const std::uint32_t rot = static_cast<std::uint32_t>(old >> 59);
  return (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31));
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_int(std::uint64_t bound) {
  // Threshold rejection keeps the draw unbiased for any bound.
  const std::uint64_t threshold = (-bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double RngStream::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  shuffle(idx);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

std::optional<double> pearson(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const Eigen::ArrayXd xc = x.array() - x.mean();
  const Eigen::ArrayXd yc = y.array() - y.mean();
  const double sxx = (xc * xc).sum();
  const double syy = (yc * yc).sum();
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return (xc * yc).sum() / std::sqrt(sxx * syy);
}

Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    // 1-based ranks i+1 ... j+1 averaged over the tie run.
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const Eigen::VectorXd rx = average_ranks(x);
  const Eigen::VectorXd ry = average_ranks(y);
  return pearson(rx, ry);
}

std::optional<double> point_biserial(const Eigen::Ref<const Eigen::VectorXd>& binary,
                                     const Eigen::Ref<const Eigen::VectorXd>& y) {
  return pearson(binary, y);
}

namespace {

// Lentz's continued fraction for the incomplete beta (Numerical Recipes form).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3.0e-16;
  constexpr double kFpMin = 1.0e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw DomainError("incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (df <= 0.0) throw DomainError("student_t_two_sided_p: df must be positive");
  const double x = df / (df + t * t);
  return incomplete_beta(0.5 * df, 0.5, x);
}

std::optional<TTestResult> t_one_sample(const std::vector<double>& x, double mu0) {
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double m = mean(x);
  const double sd = stddev(x);
  if (sd == 0.0) return std::nullopt;
  TTestResult r;
  r.t = (m - mu0) / (sd / std::sqrt(static_cast<double>(n)));
  r.df = static_cast<double>(n - 1);
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

std::optional<TTestResult> t_two_sample_welch(const std::vector<double>& x,
                                              const std::vector<double>& y) {
  const std::size_t nx = x.size();
  const std::size_t ny = y.size();
  if (nx < 2 || ny < 2) return std::nullopt;
  const double mx = mean(x);
  const double my = mean(y);
  const double vx = stddev(x) * stddev(x);
  const double vy = stddev(y) * stddev(y);
  const double sx = vx / static_cast<double>(nx);
  const double sy = vy / static_cast<double>(ny);
  if (sx + sy == 0.0) return std::nullopt;
  TTestResult r;
  r.t = (mx - my) / std::sqrt(sx + sy);
  r.df = (sx + sy) * (sx + sy) /
         (sx * sx / static_cast<double>(nx - 1) + sy * sy / static_cast<double>(ny - 1));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

double permutation_p(double observed, const std::vector<double>& null_samples) {
  std::size_t count = 0;
  for (double v : null_samples) {
    if (v >= observed) ++count;
  }
  return static_cast<double>(1 + count) / static_cast<double>(1 + null_samples.size());
}

double spearman_brown(double rho) {
  if (rho <= -1.0) throw DomainError("spearman_brown: rho must be > -1");
  return 2.0 * rho / (1.0 + rho);
}

Eigen::VectorXd zscore(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  if (n < 2) throw DomainError("zscore: need at least 2 values");
  const double m = x.mean();
  const Eigen::ArrayXd c = x.array() - m;
  const double sd = std::sqrt((c * c).sum() / static_cast<double>(n - 1));
  if (sd == 0.0) throw DomainError("zscore: zero variance");
  return (c / sd).matrix();
}

std::vector<double> zscore(const std::vector<double>& x) {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd z = zscore(Eigen::Ref<const Eigen::VectorXd>(v));
  return std::vector<double>(z.data(), z.data() + z.size());
}

double mean(const std::vector<double>& x) {
  if (x.empty()) throw DomainError("mean of empty vector");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("stddev: need at least 2 values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace segrec::stats
