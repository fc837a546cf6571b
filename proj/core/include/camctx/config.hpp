#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace camctx {

// Plain-text key/value configuration, a small TOML subset:
//
//   # comment
//   key = value
//   name = "quoted string"
//   [section]          # later keys become "section.key"
//
// Keys are looked up by exact name. Values stay strings until read.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  void set(std::string key, std::string value);

  std::string get_string(std::string_view key, std::string fallback) const;
  double get_real(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  // Throws ConfigError naming the first key not in `known`.
  void require_known(const std::vector<std::string_view>& known) const;

  const std::map<std::string, std::string, std::less<>>& entries() const noexcept { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

// Parses durations such as "90s", "1m", "1h", "1d", "1w", "1month" (30 days),
// or "all". Returns seconds; "all" maps to a span longer than any trace.
std::int64_t parse_duration(std::string_view text);
std::string format_duration(std::int64_t seconds);

}  // namespace camctx
