#include "segrec/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "segrec/errors.hpp"
#include "segrec/io.hpp"

namespace segrec::report {

std::string provenance_line(const Provenance& p) {
  return "# generator=segrec " + p.version + " config=" + p.config_hash +
         " seed=" + std::to_string(p.seed);
}

CsvWriter::CsvWriter(Provenance prov, std::vector<std::string> header)
    : prov_(std::move(prov)), header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw ValidationError("CSV row width " + std::to_string(cells.size()) +
                          " does not match header width " + std::to_string(header_.size()));
  }
  rows_.push_back(std::move(cells));
}

void CsvWriter::write(const std::filesystem::path& path) const {
  std::ostringstream out;
  out << provenance_line(prov_) << '\n';
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i > 0) out << ',';
    out << header_[i];
  }
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  io::write_file_atomic(path, out.str());
}

namespace {

std::string g6(double v) { return io::fmt_g6(v); }

// Fixed diverging map: -1 -> blue, 0 -> white, +1 -> red.
std::string diverging_color(double v) {
  const double x = std::clamp(v, -1.0, 1.0);
  int r, g, b;
  if (x < 0) {
    r = static_cast<int>(std::lround(255 * (1.0 + x)));
    g = static_cast<int>(std::lround(255 * (1.0 + x)));
    b = 255;
  } else {
    r = 255;
    g = static_cast<int>(std::lround(255 * (1.0 - x)));
    b = static_cast<int>(std::lround(255 * (1.0 - x)));
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

void write_bar_chart_svg(const std::filesystem::path& path, const Provenance& prov,
                         const std::string& title, const std::vector<BarGroup>& bars,
                         const std::string& y_label) {
  if (bars.empty()) {
    throw ValidationError("bar chart needs at least one bar");
  }
  const double width = 120.0 + 70.0 * static_cast<double>(bars.size());
  const double height = 320.0;
  const double plot_left = 70.0;
  const double plot_top = 50.0;
  const double plot_bottom = height - 60.0;

  double lo = 0.0;
  double hi = 0.0;
  for (const BarGroup& b : bars) {
    lo = std::min(lo, b.mean - b.whisker);
    hi = std::max(hi, b.mean + b.whisker);
  }
  if (hi == lo) hi = lo + 1.0;
  hi += 0.05 * (hi - lo);

  auto y_of = [&](double v) {
    return plot_bottom - (v - lo) / (hi - lo) * (plot_bottom - plot_top);
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g6(width) << "\" height=\""
    << g6(height) << "\">\n";
  s << "<!-- " << provenance_line(prov).substr(2) << " -->\n";
  s << "<text x=\"" << g6(width / 2) << "\" y=\"24\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  s << "<text x=\"16\" y=\"" << g6((plot_top + plot_bottom) / 2)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
    << g6((plot_top + plot_bottom) / 2) << ")\">" << y_label << "</text>\n";
  s << "<line x1=\"" << g6(plot_left) << "\" y1=\"" << g6(plot_top) << "\" x2=\""
    << g6(plot_left) << "\" y2=\"" << g6(plot_bottom) << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << g6(plot_left) << "\" y1=\"" << g6(y_of(0.0)) << "\" x2=\""
    << g6(width - 20.0) << "\" y2=\"" << g6(y_of(0.0)) << "\" stroke=\"black\"/>\n";

  for (std::size_t i = 0; i < bars.size(); ++i) {
    const BarGroup& b = bars[i];
    const double cx = plot_left + 35.0 + 70.0 * static_cast<double>(i);
    const double bw = 44.0;
    const double y0 = y_of(std::max(0.0, std::min(b.mean, 0.0)));
    const double y_top = y_of(std::max(b.mean, 0.0));
    const double bar_h = std::fabs(y_of(b.mean) - y_of(0.0));
    s << "<rect x=\"" << g6(cx - bw / 2) << "\" y=\"" << g6(b.mean >= 0 ? y_top : y0)
      << "\" width=\"" << g6(bw) << "\" height=\"" << g6(bar_h)
      << "\" fill=\"#6688cc\" stroke=\"black\"/>\n";
    if (b.whisker > 0.0) {
      const double wy1 = y_of(b.mean - b.whisker);
      const double wy2 = y_of(b.mean + b.whisker);
      s << "<line x1=\"" << g6(cx) << "\" y1=\"" << g6(wy1) << "\" x2=\"" << g6(cx)
        << "\" y2=\"" << g6(wy2) << "\" stroke=\"black\"/>\n";
      s << "<line x1=\"" << g6(cx - 8) << "\" y1=\"" << g6(wy1) << "\" x2=\"" << g6(cx + 8)
        << "\" y2=\"" << g6(wy1) << "\" stroke=\"black\"/>\n";
      s << "<line x1=\"" << g6(cx - 8) << "\" y1=\"" << g6(wy2) << "\" x2=\"" << g6(cx + 8)
        << "\" y2=\"" << g6(wy2) << "\" stroke=\"black\"/>\n";
    }
    s << "<text x=\"" << g6(cx) << "\" y=\"" << g6(plot_bottom + 18)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << b.label
      << "</text>\n";
  }
  // Axis extremes.
  s << "<text x=\"" << g6(plot_left - 6) << "\" y=\"" << g6(y_of(hi) + 4)
    << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << g6(hi)
    << "</text>\n";
  s << "<text x=\"" << g6(plot_left - 6) << "\" y=\"" << g6(y_of(lo) + 4)
    << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << g6(lo)
    << "</text>\n";
  s << "</svg>\n";
  io::write_file_atomic(path, s.str());
}

void write_heatmap_svg(const std::filesystem::path& path, const Provenance& prov,
                       const std::string& title,
                       const Eigen::Ref<const Eigen::MatrixXd>& values) {
  if (values.size() == 0) {
    throw ValidationError("heatmap needs a non-empty matrix");
  }
  const Eigen::Index rows = values.rows();
  const Eigen::Index cols = values.cols();
  const double cell = std::max(6.0, std::min(28.0, 360.0 / static_cast<double>(std::max(rows, cols))));
  const double left = 40.0;
  const double top = 50.0;
  const double width = left + cell * static_cast<double>(cols) + 30.0;
  const double height = top + cell * static_cast<double>(rows) + 30.0;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g6(width) << "\" height=\""
    << g6(height) << "\">\n";
  s << "<!-- " << provenance_line(prov).substr(2) << " -->\n";
  s << "<text x=\"" << g6(width / 2) << "\" y=\"24\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      s << "<rect x=\"" << g6(left + cell * static_cast<double>(c)) << "\" y=\""
        << g6(top + cell * static_cast<double>(r)) << "\" width=\"" << g6(cell)
        << "\" height=\"" << g6(cell) << "\" fill=\"" << diverging_color(values(r, c))
        << "\"/>\n";
    }
  }
  s << "<rect x=\"" << g6(left) << "\" y=\"" << g6(top) << "\" width=\""
    << g6(cell * static_cast<double>(cols)) << "\" height=\""
    << g6(cell * static_cast<double>(rows)) << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "</svg>\n";
  io::write_file_atomic(path, s.str());
}

}  // namespace segrec::report
