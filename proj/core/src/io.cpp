#include "kklflow/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kklflow {

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

void save_point_cloud(const std::string& path, const DiscreteMeasure& m) {
  m.validate();
  std::ostringstream os;
  for (int j = 0; j < m.dim(); ++j) os << "x" << j << ",";
  os << "weight\n";
  for (int i = 0; i < m.size(); ++i) {
    for (int j = 0; j < m.dim(); ++j) os << format_double(m.points(i, j)) << ",";
    os << format_double(m.weights(i)) << "\n";
  }
  write_text_file(path, os.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& why) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + why);
}

}  // namespace

DiscreteMeasure load_point_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open point cloud: " + path);
  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, "empty file");

  auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "weight")
    parse_fail(path, 1, "expected header x0,...,weight");
  const int d = static_cast<int>(header.size()) - 1;
  for (int j = 0; j < d; ++j)
    if (header[j] != "x" + std::to_string(j))
      parse_fail(path, 1, "expected column x" + std::to_string(j));

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != d + 1) parse_fail(path, line_no, "wrong cell count");
    std::vector<double> row(d + 1);
    for (int j = 0; j <= d; ++j) {
      char* end = nullptr;
      row[j] = std::strtod(cells[j].c_str(), &end);
      if (end == cells[j].c_str() || *end != '\0')
        parse_fail(path, line_no, "cannot parse number '" + cells[j] + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) parse_fail(path, line_no, "no data rows");

  Eigen::MatrixXd pts(rows.size(), d);
  Eigen::VectorXd w(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < d; ++j) pts(i, j) = rows[i][j];
    w(i) = rows[i][d];
  }
  double total = w.sum();
  if (std::abs(total - 1.0) > 1e-9)
    throw std::runtime_error(path + ": weights are not normalized (sum = " +
                             format_double(total) + ")");
  // renormalize only when needed so exact files round-trip bitwise
  if (std::abs(total - 1.0) > 1e-12) w /= total;
  return DiscreteMeasure::weighted(std::move(pts), std::move(w));
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size())
    throw std::invalid_argument("CsvWriter: row width does not match the header");
  rows_.push_back(cells);
}

std::string CsvWriter::to_string() const {
  std::ostringstream os;
  for (std::size_t j = 0; j < columns_.size(); ++j)
    os << columns_[j] << (j + 1 < columns_.size() ? "," : "\n");
  for (const auto& row : rows_)
    for (std::size_t j = 0; j < row.size(); ++j) os << row[j] << (j + 1 < row.size() ? "," : "\n");
  return os.str();
}

void CsvWriter::write(const std::string& path) const { write_text_file(path, to_string()); }

}  // namespace kklflow
