#pragma once

#include "gvssb/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace gvssb {

/// Parsed CSV file: header row plus string cells, RFC-4180 quoting rules.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Eigen::Index ncol() const { return static_cast<Eigen::Index>(header.size()); }
  Eigen::Index nrow() const { return static_cast<Eigen::Index>(rows.size()); }
  Eigen::Index col_index(const std::string& name) const;  ///< -1 if absent
};

/// Reads a CSV file with a mandatory header row. Handles quoted fields,
/// embedded commas/quotes/newlines, and CRLF line endings. Throws on
/// ragged rows or unterminated quotes, naming the offending line.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::istream& in, const std::string& origin = "<stream>");

/// All cells parsed as doubles. Throws naming row, column, and cell text
/// on any non-numeric cell.
Mat csv_to_matrix(const CsvTable& table, const std::string& origin = "<csv>");

/// Single-column table as a vector.
Vec csv_to_vector(const CsvTable& table, const std::string& origin = "<csv>");

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

/// Quotes a field iff it contains a comma, quote, or newline.
std::string csv_escape(const std::string& field);

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace gvssb
