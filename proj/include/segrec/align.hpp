#pragma once

#include <string>
#include <utility>
#include <vector>

#include "segrec/corpus.hpp"

namespace segrec::align {

/// Matched (source index, output index) pairs from a global token alignment,
/// strictly increasing in both coordinates. A pair is recorded only for
/// normalized-token equality; mismatched columns are not pairs.
/// coverage = |pairs| / |output tokens|.
struct AlignmentResult {
  std::vector<std::pair<int, int>> pairs;
  double coverage = 0.0;
  long score = 0;
};

/// Global alignment with match=+2 (normalized equality), mismatch=-1, gap=-1.
/// Ties are broken so matches land as early as possible in the source.
/// Inputs beyond `band_threshold` tokens use a banded DP (width = 10% of the
/// longer side, at least `min_band`); narratives of ~1500 words take the
/// exact full DP.
AlignmentResult align_tokens(const std::vector<corpus::Token>& source,
                             const std::vector<corpus::Token>& output,
                             int band_threshold = 5000, int min_band = 32);

struct ExtractionOutcome {
  std::vector<int> boundaries;  // sorted, unique, each in (0, token_count)
  int n_segments_in_output = 0;
  /// min(matched/|output|, matched/|source|): low when the copy hallucinates
  /// extra text and when it drops source text.
  double coverage = 0.0;
  bool flagged = false;
  std::string reason;
};

/// Recovers boundary indices on the source narrative from a segmented copy.
/// raw_text is split on newlines into segments (whitespace-only segments are
/// skipped); tokens of the concatenation are aligned to the source. For each
/// segment after the first the boundary is the source index of its first
/// matched token; if that token is unmatched, the gap rule applies: one past
/// the previous segment's last matched source index, falling back to the
/// segment's first matched token. Flags when coverage < threshold or any
/// segment aligns no token at all.
ExtractionOutcome extract_boundaries(const corpus::Narrative& source,
                                     const std::string& raw_text,
                                     double coverage_threshold = 0.8);

}  // namespace segrec::align
