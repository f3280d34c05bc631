#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace segrec::report {

/// Stamp written as the first line of every CSV ("# ...") and as a comment in
/// SVGs; JSON artifacts carry the same fields in "_meta".
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
};

std::string provenance_line(const Provenance& p);

/// CSV cell values are pre-formatted strings; numeric columns should be
/// rendered with io::fmt_g9 to honor the 9-significant-digit contract.
class CsvWriter {
 public:
  CsvWriter(Provenance prov, std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  void write(const std::filesystem::path& path) const;

 private:
  Provenance prov_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct BarGroup {
  std::string label;
  double mean = 0.0;
  double whisker = 0.0;  // symmetric error bar half-length (0 = none)
};

/// Bar chart with error whiskers, y starting at min(0, data floor).
void write_bar_chart_svg(const std::filesystem::path& path, const Provenance& prov,
                         const std::string& title, const std::vector<BarGroup>& bars,
                         const std::string& y_label);

/// Heatmap with a fixed blue-white-red diverging map over [-1, 1].
void write_heatmap_svg(const std::filesystem::path& path, const Provenance& prov,
                       const std::string& title,
                       const Eigen::Ref<const Eigen::MatrixXd>& values);

}  // namespace segrec::report
