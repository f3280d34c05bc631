#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "segrec/corpus.hpp"

// Test-only reference implementations, kept independent of the library code
// they check.
namespace oracle {

inline std::vector<segrec::corpus::Token> tokens_of(const std::vector<std::string>& words) {
  std::string text;
  for (const std::string& w : words) {
    if (!text.empty()) text += ' ';
    text += w;
  }
  return segrec::corpus::tokenize(text);
}

// Plain full-matrix Needleman-Wunsch score, match=+2 / mismatch=-1 / gap=-1
// over normalized tokens. Score only; no traceback.
inline long nw_score(const std::vector<segrec::corpus::Token>& a,
                     const std::vector<segrec::corpus::Token>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::vector<long>> s(n + 1, std::vector<long>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) s[i][0] = -static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) s[0][j] = -static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const long diag =
          s[i - 1][j - 1] + (a[i - 1].normalized == b[j - 1].normalized ? 2 : -1);
      s[i][j] = std::max({diag, s[i - 1][j] - 1, s[i][j - 1] - 1});
    }
  }
  return s[n][m];
}

// Exhaustive search over monotone matchings: the largest number of
// equal-token pairs strictly increasing in both coordinates.
inline int max_monotone_matches(const std::vector<segrec::corpus::Token>& a,
                                const std::vector<segrec::corpus::Token>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::vector<int>> best(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      best[i][j] = std::max(best[i - 1][j], best[i][j - 1]);
      if (a[i - 1].normalized == b[j - 1].normalized) {
        best[i][j] = std::max(best[i][j], best[i - 1][j - 1] + 1);
      }
    }
  }
  return best[n][m];
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline std::vector<double> ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = 1.0 + 0.5 * (i + j);
    i = j + 1;
  }
  return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

// Bilinear resize evaluated straight from the stated mapping, cell by cell.
inline Eigen::MatrixXd resize(const Eigen::MatrixXd& in, int rows, int cols) {
  Eigen::MatrixXd out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    double sy = (r + 0.5) * static_cast<double>(in.rows()) / rows - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(in.rows() - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min<int>(y0 + 1, static_cast<int>(in.rows()) - 1);
    for (int c = 0; c < cols; ++c) {
      double sx = (c + 0.5) * static_cast<double>(in.cols()) / cols - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(in.cols() - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min<int>(x0 + 1, static_cast<int>(in.cols()) - 1);
      const double fy = sy - y0;
      const double fx = sx - x0;
      out(r, c) = (1 - fy) * ((1 - fx) * in(y0, x0) + fx * in(y0, x1)) +
                  fy * ((1 - fx) * in(y1, x0) + fx * in(y1, x1));
    }
  }
  return out;
}

}  // namespace oracle
