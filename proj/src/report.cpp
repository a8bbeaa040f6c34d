#include "divgauge/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "divgauge/errors.hpp"

namespace divgauge {

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path, std::ios::binary) {
  if (!out_) throw IoError("cannot write " + path.string());
  columns_ = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  out_ << header << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw FormatError("CSV row has the wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw IoError("CSV write failed");
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

void write_line_chart_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<SvgSeries>& series,
                          std::optional<double> reference) {
  constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (reference && std::isfinite(*reference)) {
    y0 = std::min(y0, *reference);
    y1 = std::max(y1, *reference);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
      << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kLeft << "\" y=\"" << kH - kBottom + 16 << "\">" << fixed(x0) << "</text>\n";
  out << "<text x=\"" << kLeft + pw << "\" y=\"" << kH - kBottom + 16 << "\" text-anchor=\"end\">" << fixed(x1)
      << "</text>\n";
  out << "<text x=\"" << kLeft - 4 << "\" y=\"" << kTop + ph << "\" text-anchor=\"end\">" << fixed(y0) << "</text>\n";
  out << "<text x=\"" << kLeft - 4 << "\" y=\"" << kTop + 10 << "\" text-anchor=\"end\">" << fixed(y1) << "</text>\n";
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">" << escape_xml(x_label)
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
  if (reference && std::isfinite(*reference)) {
    out << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(*reference) << "\" y2=\""
        << py(*reference) << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    out << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(k);
    out << "<line x1=\"" << kW - kRight + 12 << "\" x2=\"" << kW - kRight + 32 << "\" y1=\"" << ly - 4 << "\" y2=\""
        << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kW - kRight + 36 << "\" y=\"" << ly << "\">" << escape_xml(s.name) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("SVG write failed");
}

void Manifest::write(const std::filesystem::path& dir, const std::string& experiment) const {
  std::ofstream out(dir / "MANIFEST", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "MANIFEST").string());
  out << "experiment " << experiment << '\n';
  out << "status " << (partial() ? "partial" : "complete") << '\n';
  for (const auto& f : files_) out << "file " << std::filesystem::relative(f, dir).generic_string() << '\n';
  for (const auto& r : failures_) out << "failed " << r << '\n';
}

}  // namespace divgauge
