#pragma once

#include <string>

#include "ggreg/common.hpp"

namespace ggreg::io {

struct CsvError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

/// Comma-separated, '.' decimal, no header (set skip_header to drop one
/// leading line). Throws CsvError naming the offending row/column.
Matrix read_csv(const std::string& path, bool skip_header = false);

/// Writes with shortest-round-trip formatting so parse(write(m)) == m.
void write_csv(const std::string& path, const Matrix& m);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace ggreg::io
