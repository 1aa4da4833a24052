#include "optbench/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "optbench/errors.hpp"

namespace optbench {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

KvFile KvFile::parse(std::string_view text, std::string_view origin) {
  KvFile file;
  file.origin_ = std::string(origin);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    ++line_no;
    auto newline = text.find('\n', start);
    if (newline == std::string_view::npos) newline = text.size();
    std::string_view line = text.substr(start, newline - start);
    start = newline + 1;

    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;

    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(file.origin_ + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + stripped + "'");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(file.origin_ + ":" + std::to_string(line_no) +
                        ": assignment has no key");
    }
    file.entries_[key] = value;
  }
  return file;
}

KvFile KvFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

bool KvFile::has(std::string_view key) const {
  return entries_.find(std::string(key)) != entries_.end();
}

std::vector<std::string> KvFile::keys_with_prefix(std::string_view prefix) const {
  std::vector<std::string> out;
  for (const auto& [key, value] : entries_)
    if (key.starts_with(prefix)) out.push_back(key);
  return out;
}

const std::string& KvFile::raw(std::string_view key) const {
  const auto it = entries_.find(std::string(key));
  if (it == entries_.end())
    throw ConfigError(origin_ + ": missing key '" + std::string(key) + "'");
  return it->second;
}

std::string KvFile::get_string(std::string_view key) const { return raw(key); }

std::string KvFile::get_string_or(std::string_view key, std::string_view fallback) const {
  return has(key) ? raw(key) : std::string(fallback);
}

double KvFile::get_double(std::string_view key) const {
  const std::string& value = raw(key);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(origin_ + ": key '" + std::string(key) + "' has value '" + value +
                      "', expected a number");
  }
  return out;
}

double KvFile::get_double_or(std::string_view key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t KvFile::get_int(std::string_view key) const {
  const std::string& value = raw(key);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(origin_ + ": key '" + std::string(key) + "' has value '" + value +
                      "', expected an integer");
  }
  return out;
}

std::int64_t KvFile::get_int_or(std::string_view key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t KvFile::get_u64(std::string_view key) const {
  const std::string& value = raw(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(origin_ + ": key '" + std::string(key) + "' has value '" + value +
                      "', expected an unsigned integer");
  }
  return out;
}

std::uint64_t KvFile::get_u64_or(std::string_view key, std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}

bool KvFile::get_bool(std::string_view key) const {
  const std::string& value = raw(key);
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(origin_ + ": key '" + std::string(key) + "' has value '" + value +
                    "', expected a boolean");
}

bool KvFile::get_bool_or(std::string_view key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<std::string> KvFile::get_list(std::string_view key) const {
  const std::string& value = raw(key);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    if (comma == std::string::npos) comma = value.size();
    const std::string item = trim(std::string_view(value).substr(start, comma - start));
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

std::vector<double> KvFile::get_double_list(std::string_view key) const {
  std::vector<double> out;
  for (const auto& item : get_list(key)) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError(origin_ + ": key '" + std::string(key) + "' list entry '" + item +
                        "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

void KvFile::set(std::string_view key, std::string_view value) {
  entries_[std::string(key)] = std::string(value);
}

std::string KvFile::render() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

}  // namespace optbench
