#include "ggreg/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace ggreg::io {

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  (void)ec;
  return std::string(buffer, ptr);
}

Matrix read_csv(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  long line_number = 0;
  bool skipped = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (skip_header && !skipped) {
      skipped = true;
      continue;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<double> row;
    std::size_t start = 0;
    long column = 0;
    while (true) {
      ++column;
      const std::size_t comma = line.find(',', start);
      const std::size_t end = comma == std::string::npos ? line.size() : comma;
      // Trim surrounding spaces.
      std::size_t a = start, b = end;
      while (a < b && line[a] == ' ') ++a;
      while (b > a && line[b - 1] == ' ') --b;
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(line.data() + a, line.data() + b, value);
      if (ec != std::errc() || ptr != line.data() + b || a == b) {
        throw CsvError(path + ": row " + std::to_string(line_number) +
                       ", column " + std::to_string(column) +
                       ": not a number: '" + line.substr(start, end - start) +
                       "'");
      }
      row.push_back(value);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw CsvError(path + ": row " + std::to_string(line_number) + " has " +
                     std::to_string(row.size()) + " columns, expected " +
                     std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError(path + ": no data rows");

  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
  }
  return m;
}

void write_csv(const std::string& path, const Matrix& m) {
  std::ostringstream out;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  write_file(path, out.str());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace ggreg::io
