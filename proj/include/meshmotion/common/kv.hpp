#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace meshmotion::kv {

/// Ordered `key = value` document. Blank lines and lines starting with '#' are
/// skipped on parse; later duplicates override earlier ones.
class Document {
 public:
  void set(std::string key, std::string value);
  void set(std::string key, double value);
  void set(std::string key, long value);
  void set(std::string key, int value) { set(std::move(key), static_cast<long>(value)); }

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string require(std::string_view key) const;

  double get_double(std::string_view key, double fallback) const;
  long get_long(std::string_view key, long fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  double require_double(std::string_view key) const;
  long require_long(std::string_view key) const;

  /// Keys starting with `prefix` (prefix stripped).
  Document section(std::string_view prefix) const;
  void merge(const Document& other);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string to_string() const;
  static Document parse(std::string_view text, std::string_view origin = "<string>");
  static Document read_file(const std::filesystem::path& path);
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view text, std::string_view context);
long parse_long(std::string_view text, std::string_view context);

/// Single-line record of space-separated `key=value` pairs.
std::string format_record(const std::vector<std::pair<std::string, std::string>>& fields);
std::vector<std::pair<std::string, std::string>> parse_record(std::string_view line);

}  // namespace meshmotion::kv
