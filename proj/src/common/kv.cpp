#include "meshmotion/common/kv.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "meshmotion/errors.hpp"

namespace meshmotion::kv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

double parse_double(std::string_view text, std::string_view context) {
  const std::string s(trim(text));
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError(std::string(context) + ": expected a number, got '" + s + "'");
  return v;
}

long parse_long(std::string_view text, std::string_view context) {
  const std::string_view s = trim(text);
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(std::string(context) + ": expected an integer, got '" + std::string(s) + "'");
  return v;
}

void Document::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void Document::set(std::string key, double value) { set(std::move(key), format_double(value)); }
void Document::set(std::string key, long value) { set(std::move(key), std::to_string(value)); }

bool Document::contains(std::string_view key) const { return get(key).has_value(); }

std::optional<std::string> Document::get(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string Document::require(std::string_view key) const {
  auto v = get(key);
  if (!v) throw ConfigError("missing key: " + std::string(key));
  return *v;
}

double Document::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(*v, key) : fallback;
}

long Document::get_long(std::string_view key, long fallback) const {
  auto v = get(key);
  return v ? parse_long(*v, key) : fallback;
}

bool Document::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes" || *v == "on") return true;
  if (*v == "0" || *v == "false" || *v == "no" || *v == "off") return false;
  throw ConfigError(std::string(key) + ": expected a boolean, got '" + *v + "'");
}

std::string Document::get_string(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : fallback;
}

double Document::require_double(std::string_view key) const { return parse_double(require(key), key); }
long Document::require_long(std::string_view key) const { return parse_long(require(key), key); }

Document Document::section(std::string_view prefix) const {
  Document out;
  for (const auto& [k, v] : entries_)
    if (k.size() > prefix.size() && k.compare(0, prefix.size(), prefix) == 0) out.set(k.substr(prefix.size()), v);
  return out;
}

void Document::merge(const Document& other) {
  for (const auto& [k, v] : other.entries_) set(k, v);
}

std::string Document::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

Document Document::parse(std::string_view text, std::string_view origin) {
  Document doc;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string_view key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
    doc.set(std::string(key), std::string(trim(s.substr(eq + 1))));
  }
  return doc;
}

Document Document::read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void Document::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << to_string();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string format_record(const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string out;
  for (const auto& [k, v] : fields) {
    if (!out.empty()) out += ' ';
    out += k + "=" + v;
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_record(std::string_view line) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed record field: " + tok);
    out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return out;
}

}  // namespace meshmotion::kv
