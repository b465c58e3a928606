#pragma once

#include <concepts>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rwl {

// Sectioned key-value text:
//
//   # comment
//   [experiment]
//   name = fig3b_desk
//   [strategy weight]
//   kind = weight_rw
//
// A section header is a kind plus an optional label. Keys are unique within a
// section. Comments are whole lines starting with '#' or ';'.
struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string kind;
  std::string label;
  std::vector<ConfigEntry> entries;
  int line = 0;

  const std::string* find(std::string_view key) const;
  void set(std::string_view key, std::string value);
  // "kind" or "kind label".
  std::string title() const;
};

class ConfigDocument {
 public:
  // Throws ValidationError naming the offending line(s).
  static ConfigDocument parse(std::istream& in);
  static ConfigDocument parse_string(std::string_view text);

  void write(std::ostream& out) const;
  std::string to_string() const;

  ConfigSection* find(std::string_view kind, std::string_view label = {});
  const ConfigSection* find(std::string_view kind, std::string_view label = {}) const;
  ConfigSection& get_or_add(std::string_view kind, std::string_view label = {});

  std::vector<ConfigSection> sections;
};

// Typed access to one section. Conversion failures and unknown keys are
// appended to a shared error list as "section.key: message" instead of
// throwing, so a whole document can be checked in one pass.
class FieldReader {
 public:
  FieldReader(const ConfigSection& section, std::vector<std::string>& errors);

  bool has(std::string_view key) const { return section_.find(key) != nullptr; }

  void read(std::string_view key, std::string& out);
  void read(std::string_view key, double& out);
  void read(std::string_view key, bool& out);
  void read(std::string_view key, int& out);
  template <std::unsigned_integral U>
  void read(std::string_view key, U& out) {
    std::uint64_t tmp = out;
    read_u64(key, tmp);
    out = static_cast<U>(tmp);
  }
  void read(std::string_view key, std::optional<double>& out);
  // Comma or whitespace separated; integer lists also accept "a..b".
  void read(std::string_view key, std::vector<double>& out);
  void read(std::string_view key, std::vector<std::uint64_t>& out);

  // Reads `key` as a string and passes it through `parse`; a thrown exception
  // becomes an error entry.
  template <class T, class Parse>
  void read_enum(std::string_view key, T& out, Parse parse) {
    const std::string* v = lookup(key);
    if (!v) return;
    try {
      out = parse(*v);
    } catch (const std::exception& e) {
      fail(key, e.what());
    }
  }

  void fail(std::string_view key, std::string_view message);
  // Reports every key that was never read.
  void reject_unknown();

 private:
  void read_u64(std::string_view key, std::uint64_t& out);
  const std::string* lookup(std::string_view key);

  const ConfigSection& section_;
  std::vector<std::string>& errors_;
  std::set<std::string, std::less<>> used_;
};

bool parse_bool(std::string_view s);
std::vector<std::string> split_list(std::string_view s);
std::vector<std::uint64_t> parse_u64_list(std::string_view s);
std::vector<double> parse_double_list(std::string_view s);

}  // namespace rwl
