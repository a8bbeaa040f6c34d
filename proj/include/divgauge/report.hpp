#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace divgauge {

// Shortest round-trip text for a double; empty for NaN.
std::string format_number(double v);

// Comma-separated output with a fixed header and '\n' line endings.
class CsvWriter {
 public:
  // IoError when the file cannot be created.
  CsvWriter(const std::filesystem::path& path, const std::string& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal line chart: one polyline per series, optional dashed horizontal
// reference line, axis ranges printed at the corners.
void write_line_chart_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<SvgSeries>& series,
                          std::optional<double> reference = std::nullopt);

// Index of written artifacts plus a completion status; partial runs list
// the reasons.
class Manifest {
 public:
  void add(const std::filesystem::path& file) { files_.push_back(file); }
  void note_failure(const std::string& reason) { failures_.push_back(reason); }
  bool partial() const { return !failures_.empty(); }
  const std::vector<std::filesystem::path>& files() const { return files_; }
  // Writes dir/MANIFEST with paths relative to dir.
  void write(const std::filesystem::path& dir, const std::string& experiment) const;

 private:
  std::vector<std::filesystem::path> files_;
  std::vector<std::string> failures_;
};

}  // namespace divgauge
