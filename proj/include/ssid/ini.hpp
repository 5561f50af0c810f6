#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <utility>

namespace ssid {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "[section]" headers and "key = value" lines; '#' or ';' start a comment
// line. Typed getters record which keys were read so that a consumer can
// reject everything it did not understand.
class IniConfig {
 public:
  static IniConfig parse(std::istream& is, const std::string& source = "<config>");
  static IniConfig load_file(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  // Throws ConfigError naming every key no getter has asked for.
  void check_all_used() const;

  const std::string& source() const { return source_; }

 private:
  using Key = std::pair<std::string, std::string>;
  const std::string* find(const std::string& section, const std::string& key) const;

  std::string source_;
  std::map<Key, std::string> values_;
  std::map<Key, int> lines_;
  mutable std::set<Key> used_;
};

}  // namespace ssid
