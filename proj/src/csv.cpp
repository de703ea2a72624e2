#include "gvssb/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace gvssb {

Eigen::Index CsvTable::col_index(const std::string& name) const {
  for (Eigen::Index i = 0; i < ncol(); ++i)
    if (header[i] == name) return i;
  return -1;
}

namespace {

// One record, consuming the trailing newline; returns false at EOF with no data.
bool read_record(std::istream& in, std::vector<std::string>& fields, long& line_no,
                 const std::string& origin) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  std::string cur;
  bool quoted = false;
  for (;; c = in.get()) {
    if (quoted) {
      if (c == EOF)
        throw std::runtime_error(origin + ": unterminated quoted field starting near line " +
                                 std::to_string(line_no));
      if (c == '"') {
        int next = in.peek();
        if (next == '"') {
          in.get();
          cur += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_no;
        cur += static_cast<char>(c);
      }
      continue;
    }
    if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      ++line_no;
      break;
    } else if (c == '\n' || c == EOF) {
      if (c == '\n') ++line_no;
      break;
    } else {
      cur += static_cast<char>(c);
    }
  }
  fields.push_back(std::move(cur));
  return true;
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& origin) {
  CsvTable t;
  long line_no = 1;
  if (!read_record(in, t.header, line_no, origin))
    throw std::runtime_error(origin + ": empty file, header row required");
  std::vector<std::string> fields;
  while (read_record(in, fields, line_no, origin)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != t.header.size())
      throw std::runtime_error(origin + ": row " + std::to_string(t.rows.size() + 2) + " has " +
                               std::to_string(fields.size()) + " fields, header has " +
                               std::to_string(t.header.size()));
    t.rows.push_back(fields);
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_csv(in, path);
}

namespace {

double parse_cell(const std::string& cell, size_t row, size_t col, const std::string& origin) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, x);
  if (ec != std::errc{} || ptr != e)
    throw std::runtime_error(origin + ": row " + std::to_string(row + 2) + " column " +
                             std::to_string(col + 1) + ": not a number: \"" + cell + "\"");
  return x;
}

}  // namespace

Mat csv_to_matrix(const CsvTable& table, const std::string& origin) {
  Mat X(table.nrow(), table.ncol());
  for (Eigen::Index r = 0; r < table.nrow(); ++r)
    for (Eigen::Index c = 0; c < table.ncol(); ++c)
      X(r, c) = parse_cell(table.rows[r][c], r, c, origin);
  return X;
}

Vec csv_to_vector(const CsvTable& table, const std::string& origin) {
  if (table.ncol() != 1)
    throw std::runtime_error(origin + ": expected a single column, found " +
                             std::to_string(table.ncol()));
  Vec y(table.nrow());
  for (Eigen::Index r = 0; r < table.nrow(); ++r)
    y[r] = parse_cell(table.rows[r][0], r, 0, origin);
  return y;
}

std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << csv_escape(header[i]);
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_escape(row[i]);
    out << "\n";
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(out, header, rows);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gvssb
