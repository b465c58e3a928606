#include "rwl/config.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>

#include "rwl/csv.hpp"
#include "rwl/errors.hpp"

namespace rwl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::uint64_t parse_u64(std::string_view s) {
  s = trim(s);
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw InvalidArgument("not a non-negative integer: '" + std::string(s) + "'");
  std::uint64_t v = 0;
  for (char c : s) {
    const auto digit = static_cast<std::uint64_t>(c - '0');
    if (v > (UINT64_MAX - digit) / 10) throw InvalidArgument("integer out of range: '" + std::string(s) + "'");
    v = v * 10 + digit;
  }
  return v;
}

}  // namespace

const std::string* ConfigSection::find(std::string_view key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e.value;
  return nullptr;
}

void ConfigSection::set(std::string_view key, std::string value) {
  for (auto& e : entries)
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  entries.push_back({std::string(key), std::move(value), 0});
}

std::string ConfigSection::title() const { return label.empty() ? kind : kind + " " + label; }

ConfigDocument ConfigDocument::parse(std::istream& in) {
  ConfigDocument doc;
  std::vector<std::string> errors;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back(where + "unterminated section header");
        continue;
      }
      const std::string_view inner = trim(line.substr(1, line.size() - 2));
      const auto space = inner.find_first_of(" \t");
      ConfigSection sec;
      sec.kind = std::string(inner.substr(0, space));
      if (space != std::string_view::npos) sec.label = std::string(trim(inner.substr(space)));
      sec.line = line_no;
      if (sec.kind.empty()) {
        errors.push_back(where + "empty section name");
        continue;
      }
      if (doc.find(sec.kind, sec.label)) {
        errors.push_back(where + "duplicate section [" + sec.title() + "]");
        continue;
      }
      doc.sections.push_back(std::move(sec));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back(where + "expected 'key = value'");
      continue;
    }
    if (doc.sections.empty()) {
      errors.push_back(where + "key outside of any section");
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) {
      errors.push_back(where + "empty key");
      continue;
    }
    ConfigSection& sec = doc.sections.back();
    if (sec.find(key)) {
      errors.push_back(where + "duplicate key '" + key + "' in [" + sec.title() + "]");
      continue;
    }
    sec.entries.push_back({key, std::string(trim(line.substr(eq + 1))), line_no});
  }
  if (!errors.empty()) {
    std::string msg = "config parse error";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  return doc;
}

ConfigDocument ConfigDocument::parse_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

void ConfigDocument::write(std::ostream& out) const {
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i) out << '\n';
    out << '[' << sections[i].title() << "]\n";
    for (const auto& e : sections[i].entries) out << e.key << " = " << e.value << '\n';
  }
}

std::string ConfigDocument::to_string() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

ConfigSection* ConfigDocument::find(std::string_view kind, std::string_view label) {
  for (auto& s : sections)
    if (s.kind == kind && s.label == label) return &s;
  return nullptr;
}

const ConfigSection* ConfigDocument::find(std::string_view kind, std::string_view label) const {
  for (const auto& s : sections)
    if (s.kind == kind && s.label == label) return &s;
  return nullptr;
}

ConfigSection& ConfigDocument::get_or_add(std::string_view kind, std::string_view label) {
  if (ConfigSection* s = find(kind, label)) return *s;
  sections.push_back({std::string(kind), std::string(label), {}, 0});
  return sections.back();
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw InvalidArgument("not a boolean: '" + std::string(s) + "'");
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> items;
  std::string cur;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) items.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) items.push_back(std::move(cur));
  return items;
}

std::vector<std::uint64_t> parse_u64_list(std::string_view s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_u64(item));
      continue;
    }
    const std::uint64_t lo = parse_u64(std::string_view(item).substr(0, dots));
    const std::uint64_t hi = parse_u64(std::string_view(item).substr(dots + 2));
    if (hi < lo) throw InvalidArgument("empty range '" + item + "'");
    if (hi - lo > 1'000'000) throw InvalidArgument("range too long: '" + item + "'");
    for (std::uint64_t v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

std::vector<double> parse_double_list(std::string_view s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(item));
  return out;
}

FieldReader::FieldReader(const ConfigSection& section, std::vector<std::string>& errors)
    : section_(section), errors_(errors) {}

const std::string* FieldReader::lookup(std::string_view key) {
  used_.insert(std::string(key));
  return section_.find(key);
}

void FieldReader::fail(std::string_view key, std::string_view message) {
  errors_.push_back(section_.title() + "." + std::string(key) + ": " + std::string(message));
}

void FieldReader::reject_unknown() {
  for (const auto& e : section_.entries)
    if (!used_.contains(e.key)) fail(e.key, "unknown key");
}

void FieldReader::read(std::string_view key, std::string& out) {
  if (const std::string* v = lookup(key)) out = *v;
}

void FieldReader::read(std::string_view key, double& out) {
  read_enum(key, out, [](const std::string& s) { return parse_double(s); });
}

void FieldReader::read(std::string_view key, bool& out) {
  read_enum(key, out, [](const std::string& s) { return parse_bool(s); });
}

void FieldReader::read(std::string_view key, int& out) {
  read_enum(key, out, [](const std::string& s) {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw InvalidArgument("not an integer: '" + s + "'");
    return v;
  });
}

void FieldReader::read_u64(std::string_view key, std::uint64_t& out) {
  read_enum(key, out, [](const std::string& s) { return parse_u64(s); });
}

void FieldReader::read(std::string_view key, std::optional<double>& out) {
  const std::string* v = lookup(key);
  if (!v) return;
  if (*v == "auto" || v->empty()) {
    out.reset();
    return;
  }
  try {
    out = parse_double(*v);
  } catch (const std::exception& e) {
    fail(key, e.what());
  }
}

void FieldReader::read(std::string_view key, std::vector<double>& out) {
  read_enum(key, out, [](const std::string& s) { return parse_double_list(s); });
}

void FieldReader::read(std::string_view key, std::vector<std::uint64_t>& out) {
  read_enum(key, out, [](const std::string& s) { return parse_u64_list(s); });
}

}  // namespace rwl
