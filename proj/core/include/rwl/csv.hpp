#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rwl {

// Shortest lossless text form: printf "%.17g".
std::string format_double(double x);

// Whole-string strtod; throws InvalidArgument on trailing garbage.
double parse_double(std::string_view s);

inline constexpr int kCsvSchemaVersion = 1;

// Minimal CSV emitter: a "# schema=N" comment line, a header row, then rows of
// pre-formatted cells. Cells are written verbatim (no quoting); callers keep
// them free of commas.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& columns);

  CsvWriter& cell(std::string_view s);
  CsvWriter& cell(double x) { return cell(format_double(x)); }
  CsvWriter& cell(long long x) { return cell(std::to_string(x)); }
  CsvWriter& cell(unsigned long long x) { return cell(std::to_string(x)); }
  CsvWriter& cell(unsigned long x) { return cell(std::to_string(x)); }
  CsvWriter& cell(unsigned x) { return cell(std::to_string(x)); }
  CsvWriter& cell(int x) { return cell(std::to_string(x)); }
  void end_row();

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

struct CsvTable {
  int schema = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  // Index of a column; throws InvalidArgument when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);

}  // namespace rwl
