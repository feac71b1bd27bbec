#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace perc::cli {

inline constexpr int kSchemaVersion = 1;

// Shortest round-trippable text for a double; "inf"/"-inf"/"nan" otherwise.
std::string num(double v);
std::string num(long long v);
inline std::string num(int v) { return num(static_cast<long long>(v)); }
inline std::string num(std::size_t v) { return num(static_cast<long long>(v)); }

// CSV with a fixed header whose first column is schema_version.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Static SVG line chart; log axes drop nonpositive points.
std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series, bool logx, bool logy);

}  // namespace perc::cli
