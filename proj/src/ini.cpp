#include "ssid/ini.hpp"

#include <charconv>
#include <fstream>

namespace ssid {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class N>
N parse_number(const std::string& text, const std::string& where) {
  N v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError(where + ": cannot parse '" + text + "' as a number");
  }
  return v;
}

}  // namespace

IniConfig IniConfig::parse(std::istream& is, const std::string& source) {
  IniConfig cfg;
  cfg.source_ = source;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) throw ConfigError(where + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key outside any [section]");
    Key key{section, trim(t.substr(0, eq))};
    if (key.second.empty()) throw ConfigError(where + ": empty key");
    if (cfg.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key.second + "'");
    cfg.values_[key] = trim(t.substr(eq + 1));
    cfg.lines_[key] = lineno;
  }
  return cfg;
}

IniConfig IniConfig::load_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  return parse(is, path.string());
}

bool IniConfig::has(const std::string& section, const std::string& key) const {
  return values_.count({section, key}) != 0;
}

const std::string* IniConfig::find(const std::string& section, const std::string& key) const {
  auto it = values_.find({section, key});
  if (it == values_.end()) return nullptr;
  used_.insert(it->first);
  return &it->second;
}

std::string IniConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

int IniConfig::get_int(const std::string& section, const std::string& key, int fallback) const {
  const std::string* v = find(section, key);
  return v ? parse_number<int>(*v, source_ + " [" + section + "] " + key) : fallback;
}

std::uint64_t IniConfig::get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) const {
  const std::string* v = find(section, key);
  return v ? parse_number<std::uint64_t>(*v, source_ + " [" + section + "] " + key) : fallback;
}

double IniConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
  const std::string* v = find(section, key);
  return v ? parse_number<double>(*v, source_ + " [" + section + "] " + key) : fallback;
}

bool IniConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(source_ + " [" + section + "] " + key + ": expected a boolean, got '" + *v + "'");
}

void IniConfig::check_all_used() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (used_.count(key)) continue;
    if (!unknown.empty()) unknown += ", ";
    unknown += "[" + key.first + "] " + key.second + " (line " + std::to_string(lines_.at(key)) + ")";
  }
  if (!unknown.empty()) throw ConfigError(source_ + ": unknown keys: " + unknown);
}

}  // namespace ssid
