#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dafd {

std::vector<std::string> split(std::string_view line, char delimiter);
std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);

// Strict parsers: the whole (trimmed) field must be consumed.
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);
std::optional<std::uint64_t> parse_uint(std::string_view text);

/// Shortest text that parses back to exactly `value` ("%.17g").
std::string format_double(double value);
/// Fixed-point with `decimals` digits.
std::string format_fixed(double value, int decimals);
/// C99 hex-float ("%a"), bit-exact under strtod.
std::string format_hex(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Flat `key = value` text with '#' comments. Keys are unique; later
/// definitions of the same key overwrite earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Sorted `key = value` lines.
  std::string to_text() const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
};

}  // namespace dafd
