#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace segrec::io {

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a sibling temp file + rename so readers never see partial content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

/// FNV-1a, used for deriving RNG stream ids from string keys.
std::uint64_t fnv1a64(std::string_view data);

std::string trim(std::string_view s);

/// Plain comma split; the project's CSV formats never quote fields.
std::vector<std::string> split_csv_row(std::string_view line);

std::vector<std::string> split(std::string_view s, char sep);

/// Doubles at 9 significant digits (CSV contract) and 6 (SVG contract).
std::string fmt_g9(double v);
std::string fmt_g6(double v);

/// Shortest round-trip representation, for hashing/config canonicalization.
std::string fmt_exact(double v);

}  // namespace segrec::io
