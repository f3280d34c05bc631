#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace segrec::corpus {

/// One whitespace-delimited token. `surface` is verbatim (punctuation
/// attached); `normalized` is casefolded with edge punctuation stripped and
/// exists only for alignment, never for indexing.
struct Token {
  std::string surface;
  std::string normalized;
  int index = 0;
  bool is_sentence_end = false;
};

struct Narrative {
  std::string id;
  std::string title;
  std::string text;
  std::vector<Token> tokens;

  int token_count() const { return static_cast<int>(tokens.size()); }

  static Narrative from_text(std::string id, std::string title, std::string text);
  /// UTF-8 plain text file; id = filename stem.
  static Narrative from_file(const std::filesystem::path& path);
};

/// Splits on maximal whitespace runs; total function, empty input allowed.
std::vector<Token> tokenize(std::string_view text);

/// Indices i where tokens[i] ends a sentence ('.', '!' or '?', optionally
/// followed by closing quotes/brackets). Abbreviations are accepted false
/// positives; marks only need to land near sentence ends.
std::vector<int> detect_sentence_ends(const std::vector<Token>& tokens);

/// Boundary indices are "just prior to" a token, so index 0 is never valid.
struct HumanAnnotation {
  std::string participant_id;
  std::string narrative_id;
  std::vector<int> boundaries;  // sorted, unique, each in (0, token_count)
};

struct RatingRecord {
  std::string participant_id;
  std::string narrative_id;
  int mark_token_index = 0;
  bool judged_boundary = false;
  int confidence = 1;  // in [1, 10]
};

/// CSV with header `participant_id,narrative_id,boundaries`; boundaries are
/// semicolon-separated 0-based token indices. Rows for other narratives are
/// ignored. Throws ParseError with the row number on malformed input and
/// ValidationError naming participant and index on out-of-range boundaries.
std::vector<HumanAnnotation> ingest_human_annotations(const std::filesystem::path& path,
                                                      const Narrative& narrative);

/// CSV with header
/// `participant_id,narrative_id,mark_token_index,judged_boundary,confidence`.
std::vector<RatingRecord> ingest_ratings(const std::filesystem::path& path,
                                         const Narrative& narrative);

}  // namespace segrec::corpus
