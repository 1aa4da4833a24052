#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace optbench {

// Flat "key = value" files. '#' starts a comment, blank lines are
// ignored, keys are dotted paths. Last assignment of a repeated key wins.
class KvFile {
 public:
  KvFile() = default;

  static KvFile parse(std::string_view text, std::string_view origin = "<string>");
  static KvFile load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  std::vector<std::string> keys_with_prefix(std::string_view prefix) const;

  // Getters throw ConfigError when the key is absent or the value does
  // not parse; the _or forms fall back instead of throwing on absence.
  std::string get_string(std::string_view key) const;
  std::string get_string_or(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key) const;
  double get_double_or(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key) const;
  std::int64_t get_int_or(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_u64(std::string_view key) const;
  std::uint64_t get_u64_or(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key) const;
  bool get_bool_or(std::string_view key, bool fallback) const;

  // Comma-separated values, each trimmed.
  std::vector<std::string> get_list(std::string_view key) const;
  std::vector<double> get_double_list(std::string_view key) const;

  void set(std::string_view key, std::string_view value);

  // Sorted-key reproduction of the file, one "key = value" per line.
  std::string render() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::string origin_ = "<string>";
  std::map<std::string, std::string> entries_;

  const std::string& raw(std::string_view key) const;
};

}  // namespace optbench
