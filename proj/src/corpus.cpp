#include "segrec/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "segrec/errors.hpp"
#include "segrec/io.hpp"

namespace segrec::corpus {

namespace {

bool is_ascii_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_edge_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

std::string normalize_token(std::string_view surface) {
  size_t b = 0;
  size_t e = surface.size();
  while (b < e && is_edge_punct(surface[b])) ++b;
  while (e > b && is_edge_punct(surface[e - 1])) --e;
  std::string out;
  out.reserve(e - b);
  for (size_t i = b; i < e; ++i) {
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(surface[i]))));
  }
  return out;
}

// Strips trailing closing quotes/brackets, including the common UTF-8 curly
// quotes, then checks for terminal punctuation.
bool ends_sentence(std::string_view surface) {
  static const std::vector<std::string_view> kClosers = {
      "\"", "'", ")", "]", "}", "’", "”", "»"};
  std::string_view s = surface;
  bool stripped = true;
  while (stripped && !s.empty()) {
    stripped = false;
    for (std::string_view c : kClosers) {
      if (s.size() >= c.size() && s.substr(s.size() - c.size()) == c) {
        s.remove_suffix(c.size());
        stripped = true;
        break;
      }
    }
  }
  if (s.empty()) return false;
  const char last = s.back();
  return last == '.' || last == '!' || last == '?';
}

int parse_int_field(const std::string& field, size_t row, const char* what) {
  const std::string t = segrec::io::trim(field);
  int value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError("row " + std::to_string(row) + ": bad " + what + " '" + field + "'");
  }
  return value;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    if (i >= text.size()) break;
    size_t j = i;
    while (j < text.size() && !is_ascii_space(text[j])) ++j;
    Token t;
    t.surface = std::string(text.substr(i, j - i));
    t.normalized = normalize_token(t.surface);
    t.index = static_cast<int>(tokens.size());
    t.is_sentence_end = ends_sentence(t.surface);
    tokens.push_back(std::move(t));
    i = j;
  }
  return tokens;
}

std::vector<int> detect_sentence_ends(const std::vector<Token>& tokens) {
  std::vector<int> out;
  for (const Token& t : tokens) {
    if (t.is_sentence_end) out.push_back(t.index);
  }
  return out;
}

Narrative Narrative::from_text(std::string id, std::string title, std::string text) {
  Narrative n;
  n.id = std::move(id);
  n.title = std::move(title);
  n.tokens = tokenize(text);
  n.text = std::move(text);
  return n;
}

Narrative Narrative::from_file(const std::filesystem::path& path) {
  std::string text = segrec::io::read_text_file(path);
  return from_text(path.stem().string(), path.stem().string(), std::move(text));
}

std::vector<HumanAnnotation> ingest_human_annotations(const std::filesystem::path& path,
                                                      const Narrative& narrative) {
  const std::string content = segrec::io::read_text_file(path);
  std::vector<std::string> lines = segrec::io::split(content, '\n');
  if (lines.empty() || segrec::io::trim(lines[0]) != "participant_id,narrative_id,boundaries") {
    throw ParseError(path.string() + ": expected header participant_id,narrative_id,boundaries");
  }
  std::vector<HumanAnnotation> out;
  for (size_t row = 1; row < lines.size(); ++row) {
    const std::string line = segrec::io::trim(lines[row]);
    if (line.empty()) continue;
    std::vector<std::string> fields = segrec::io::split_csv_row(line);
    if (fields.size() != 3) {
      throw ParseError(path.string() + ": row " + std::to_string(row + 1) +
                       ": expected 3 fields, got " + std::to_string(fields.size()));
    }
    if (segrec::io::trim(fields[1]) != narrative.id) continue;
    HumanAnnotation a;
    a.participant_id = segrec::io::trim(fields[0]);
    a.narrative_id = narrative.id;
    const std::string bfield = segrec::io::trim(fields[2]);
    if (!bfield.empty()) {
      for (const std::string& part : segrec::io::split(bfield, ';')) {
        const int idx = parse_int_field(part, row + 1, "boundary index");
        if (idx <= 0 || idx >= narrative.token_count()) {
          throw ValidationError("participant " + a.participant_id + ": boundary index " +
                                std::to_string(idx) + " outside (0, " +
                                std::to_string(narrative.token_count()) + ")");
        }
        a.boundaries.push_back(idx);
      }
    }
    std::sort(a.boundaries.begin(), a.boundaries.end());
    a.boundaries.erase(std::unique(a.boundaries.begin(), a.boundaries.end()),
                       a.boundaries.end());
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<RatingRecord> ingest_ratings(const std::filesystem::path& path,
                                         const Narrative& narrative) {
  const std::string content = segrec::io::read_text_file(path);
  std::vector<std::string> lines = segrec::io::split(content, '\n');
  const std::string kHeader =
      "participant_id,narrative_id,mark_token_index,judged_boundary,confidence";
  if (lines.empty() || segrec::io::trim(lines[0]) != kHeader) {
    throw ParseError(path.string() + ": expected header " + kHeader);
  }
  std::vector<RatingRecord> out;
  for (size_t row = 1; row < lines.size(); ++row) {
    const std::string line = segrec::io::trim(lines[row]);
    if (line.empty()) continue;
    std::vector<std::string> fields = segrec::io::split_csv_row(line);
    if (fields.size() != 5) {
      throw ParseError(path.string() + ": row " + std::to_string(row + 1) +
                       ": expected 5 fields, got " + std::to_string(fields.size()));
    }
    if (segrec::io::trim(fields[1]) != narrative.id) continue;
    RatingRecord r;
    r.participant_id = segrec::io::trim(fields[0]);
    r.narrative_id = narrative.id;
    r.mark_token_index = parse_int_field(fields[2], row + 1, "mark_token_index");
    const std::string jb = segrec::io::trim(fields[3]);
    if (jb == "true") {
      r.judged_boundary = true;
    } else if (jb == "false") {
      r.judged_boundary = false;
    } else {
      throw ParseError(path.string() + ": row " + std::to_string(row + 1) +
                       ": judged_boundary must be true or false");
    }
    r.confidence = parse_int_field(fields[4], row + 1, "confidence");
    if (r.confidence < 1 || r.confidence > 10) {
      throw ValidationError("participant " + r.participant_id + ": confidence " +
                            std::to_string(r.confidence) + " outside [1,10]");
    }
    if (r.mark_token_index < 0 || r.mark_token_index >= narrative.token_count()) {
      throw ValidationError("participant " + r.participant_id + ": mark index " +
                            std::to_string(r.mark_token_index) + " out of range");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace segrec::corpus
