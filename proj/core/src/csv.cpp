#include "rwl/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <sstream>

#include "rwl/errors.hpp"

namespace rwl {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(std::string_view s) {
  const std::string tmp(s);
  if (tmp.empty()) throw InvalidArgument("expected a number, got an empty string");
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) throw InvalidArgument("not a number: '" + tmp + "'");
  return value;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& columns)
    : out_(out), columns_(columns.size()) {
  out_ << "# schema=" << kCsvSchemaVersion << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(std::string_view s) {
  if (in_row_ > 0) out_ << ',';
  out_ << s;
  ++in_row_;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw InvalidArgument("CSV row has " + std::to_string(in_row_) + " cells, expected " +
                          std::to_string(columns_));
  out_ << '\n';
  in_row_ = 0;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw InvalidArgument("CSV has no column '" + std::string(name) + "'");
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# schema=", 0) == 0) table.schema = std::stoi(line.substr(9));
      continue;
    }
    if (table.columns.empty()) {
      table.columns = split(line);
    } else {
      table.rows.push_back(split(line));
    }
  }
  return table;
}

}  // namespace rwl
