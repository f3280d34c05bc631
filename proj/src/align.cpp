#include "segrec/align.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "segrec/errors.hpp"
#include "segrec/io.hpp"

namespace segrec::align {

namespace {

constexpr long kMatch = 2;
constexpr long kMismatch = -1;
constexpr long kGap = -1;
constexpr long kNegInf = std::numeric_limits<long>::min() / 4;

// Tokens match on normalized equality; punctuation-only tokens (empty
// normalized form) fall back to surface equality so "(" never matches ")".
bool tokens_match(const corpus::Token& a, const corpus::Token& b) {
  if (a.normalized.empty() && b.normalized.empty()) return a.surface == b.surface;
  return a.normalized == b.normalized;
}

long sub_score(const corpus::Token& a, const corpus::Token& b) {
  return tokens_match(a, b) ? kMatch : kMismatch;
}

// Banded score table: row i holds columns [lo(i), hi(i)]. With a band wide
// enough to cover the whole rectangle this degenerates to the exact full DP.
class ScoreTable {
 public:
  ScoreTable(int n, int m, int band) : n_(n), m_(m), lo_(n + 1), offset_(n + 1) {
    std::size_t total = 0;
    for (int i = 0; i <= n; ++i) {
      const int center = n == 0 ? 0 : static_cast<int>(static_cast<long>(i) * m / n);
      lo_[i] = std::max(0, center - band);
      hi_.push_back(std::min(m, center + band));
      offset_[i] = total;
      total += static_cast<std::size_t>(hi_[i] - lo_[i] + 1);
    }
    cells_.assign(total, kNegInf);
  }

  bool in_band(int i, int j) const { return j >= lo_[i] && j <= hi_[i]; }
  long get(int i, int j) const {
    if (i < 0 || j < 0 || !in_band(i, j)) return kNegInf;
    return cells_[offset_[i] + static_cast<std::size_t>(j - lo_[i])];
  }
  void set(int i, int j, long v) { cells_[offset_[i] + static_cast<std::size_t>(j - lo_[i])] = v; }
  int lo(int i) const { return lo_[i]; }
  int hi(int i) const { return hi_[i]; }

 private:
  int n_;
  int m_;
  std::vector<int> lo_;
  std::vector<int> hi_;
  std::vector<std::size_t> offset_;
  std::vector<long> cells_;
};

}  // namespace

AlignmentResult align_tokens(const std::vector<corpus::Token>& source,
                             const std::vector<corpus::Token>& output,
                             int band_threshold, int min_band) {
  const int n = static_cast<int>(source.size());
  const int m = static_cast<int>(output.size());
  AlignmentResult result;
  if (m == 0) {
    result.score = static_cast<long>(n) * kGap;
    return result;
  }
  if (n == 0) {
    result.score = static_cast<long>(m) * kGap;
    return result;
  }

  const int longest = std::max(n, m);
  int band = longest;  // full rectangle
  if (longest > band_threshold) {
    band = std::max(min_band, (longest + 9) / 10);
  }
  // The band must also absorb the length difference or the end cell is
  // unreachable.
  band = std::min(longest, band + std::abs(n - m));

  ScoreTable s(n, m, band);
  s.set(0, 0, 0);
  for (int j = 1; j <= s.hi(0); ++j) s.set(0, j, static_cast<long>(j) * kGap);
  for (int i = 1; i <= n; ++i) {
    for (int j = s.lo(i); j <= s.hi(i); ++j) {
      if (j == 0) {
        s.set(i, 0, static_cast<long>(i) * kGap);
        continue;
      }
      long best = s.get(i - 1, j - 1);
      if (best > kNegInf) best += sub_score(source[i - 1], output[j - 1]);
      const long up = s.get(i - 1, j);
      if (up > kNegInf) best = std::max(best, up + kGap);
      const long left = s.get(i, j - 1);
      if (left > kNegInf) best = std::max(best, left + kGap);
      s.set(i, j, best);
    }
  }
  result.score = s.get(n, m);

  // Traceback by recomputation. Preferring gap moves (up, then left) over the
  // diagonal on ties pushes matches toward earlier indices.
  int i = n;
  int j = m;
  std::vector<std::pair<int, int>> rev;
  while (i > 0 || j > 0) {
    const long here = s.get(i, j);
    if (i > 0 && s.get(i - 1, j) != kNegInf && s.get(i - 1, j) + kGap == here) {
      --i;
      continue;
    }
    if (j > 0 && s.get(i, j - 1) != kNegInf && s.get(i, j - 1) + kGap == here) {
      --j;
      continue;
    }
    // Must be the diagonal now.
    --i;
    --j;
    if (tokens_match(source[i], output[j])) {
      rev.emplace_back(i, j);
    }
  }
  result.pairs.assign(rev.rbegin(), rev.rend());
  result.coverage = static_cast<double>(result.pairs.size()) / static_cast<double>(m);
  return result;
}

ExtractionOutcome extract_boundaries(const corpus::Narrative& source,
                                     const std::string& raw_text,
                                     double coverage_threshold) {
  const bool has_alnum = std::any_of(raw_text.begin(), raw_text.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  });
  if (!has_alnum) {
    throw ExtractionError("completion has no alphanumeric content");
  }

  struct Segment {
    int tok_begin = 0;
    int tok_end = 0;  // exclusive
  };
  std::vector<corpus::Token> out_tokens;
  std::vector<Segment> segments;
  for (const std::string& line : io::split(raw_text, '\n')) {
    std::vector<corpus::Token> toks = corpus::tokenize(line);
    if (toks.empty()) continue;  // blank lines do not open segments
    Segment seg;
    seg.tok_begin = static_cast<int>(out_tokens.size());
    for (corpus::Token& t : toks) {
      t.index = static_cast<int>(out_tokens.size());
      out_tokens.push_back(std::move(t));
    }
    seg.tok_end = static_cast<int>(out_tokens.size());
    segments.push_back(seg);
  }
  if (segments.empty()) {
    throw ExtractionError("completion has no segments");
  }

  const AlignmentResult ar = align_tokens(source.tokens, out_tokens);
  std::vector<int> src_of(out_tokens.size(), -1);
  for (const auto& [si, oi] : ar.pairs) src_of[static_cast<std::size_t>(oi)] = si;

  ExtractionOutcome outcome;
  outcome.n_segments_in_output = static_cast<int>(segments.size());
  const double source_coverage =
      static_cast<double>(ar.pairs.size()) / static_cast<double>(source.token_count());
  outcome.coverage = std::min(ar.coverage, source_coverage);

  std::vector<std::string> reasons;
  auto add_reason = [&](const std::string& r) {
    if (std::find(reasons.begin(), reasons.end(), r) == reasons.end()) reasons.push_back(r);
  };

  auto segment_has_match = [&](const Segment& seg) {
    for (int j = seg.tok_begin; j < seg.tok_end; ++j) {
      if (src_of[static_cast<std::size_t>(j)] >= 0) return true;
    }
    return false;
  };

  for (std::size_t si = 0; si < segments.size(); ++si) {
    if (!segment_has_match(segments[si])) {
      outcome.flagged = true;
      add_reason("segment unaligned");
    }
  }

  for (std::size_t si = 1; si < segments.size(); ++si) {
    const Segment& seg = segments[si];
    const Segment& prev = segments[si - 1];
    int boundary = -1;
    if (src_of[static_cast<std::size_t>(seg.tok_begin)] >= 0) {
      boundary = src_of[static_cast<std::size_t>(seg.tok_begin)];
    } else {
      for (int j = prev.tok_end - 1; j >= prev.tok_begin; --j) {
        if (src_of[static_cast<std::size_t>(j)] >= 0) {
          boundary = src_of[static_cast<std::size_t>(j)] + 1;  // gap rule
          break;
        }
      }
      if (boundary < 0) {
        for (int j = seg.tok_begin; j < seg.tok_end; ++j) {
          if (src_of[static_cast<std::size_t>(j)] >= 0) {
            boundary = src_of[static_cast<std::size_t>(j)];
            break;
          }
        }
      }
    }
    if (boundary < 0) continue;  // already flagged as unaligned
    if (boundary <= 0) continue;  // nothing precedes token 0
    if (boundary >= source.token_count()) {
      outcome.flagged = true;
      add_reason("boundary past narrative end");
      continue;
    }
    outcome.boundaries.push_back(boundary);
  }

  std::sort(outcome.boundaries.begin(), outcome.boundaries.end());
  outcome.boundaries.erase(std::unique(outcome.boundaries.begin(), outcome.boundaries.end()),
                           outcome.boundaries.end());

  if (source_coverage < coverage_threshold) {
    outcome.flagged = true;
    add_reason("segment unaligned");  // a stretch of source has no counterpart
  }
  if (ar.coverage < coverage_threshold) {
    outcome.flagged = true;
    add_reason("coverage below threshold");
  }
  for (std::size_t k = 0; k < reasons.size(); ++k) {
    if (k > 0) outcome.reason += "; ";
    outcome.reason += reasons[k];
  }
  return outcome;
}

}  // namespace segrec::align
