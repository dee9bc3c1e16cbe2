#pragma once

#include <string>
#include <vector>

#include "kklflow/measure.hpp"

namespace kklflow {

/// Shortest decimal form that round-trips the double exactly.
std::string format_double(double v);

/// Point-cloud CSV with header "x0,...,x{d-1},weight".
void save_point_cloud(const std::string& path, const DiscreteMeasure& m);

/// Loads and validates a point cloud (weight normalization included).
/// Throws std::runtime_error with the offending line number on parse errors.
DiscreteMeasure load_point_cloud(const std::string& path);

/// Minimal CSV table writer: one header row, then data rows.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);
  void add_row(const std::vector<std::string>& cells);
  void write(const std::string& path) const;
  std::string to_string() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text_file(const std::string& path, const std::string& content);

}  // namespace kklflow
