#include "ssid/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ssid {

std::string to_string(CodeKind kind) {
  switch (kind) {
    case CodeKind::script: return "SCRIPT";
    case CodeKind::ignore: return "IGNORE";
    case CodeKind::shared: return "SHARED";
  }
  return "?";
}

CodeKind parse_code_kind(const std::string& text) {
  if (text == "SCRIPT") return CodeKind::script;
  if (text == "IGNORE") return CodeKind::ignore;
  if (text == "SHARED") return CodeKind::shared;
  throw std::invalid_argument("unknown catalog code kind '" + text + "'");
}

ScriptCatalog::ScriptCatalog(std::vector<CatalogCode> codes) : codes_(std::move(codes)) {
  std::set<std::string> ids;
  for (const auto& c : codes_) {
    if (c.id.empty() || c.id.find_first_of(" \t,\n") != std::string::npos) {
      throw std::invalid_argument("catalog: bad code id '" + c.id + "'");
    }
    if (!ids.insert(c.id).second) throw std::invalid_argument("catalog: duplicate code '" + c.id + "'");
    if (c.kind == CodeKind::script) scripts_.push_back(c.id);
  }
  if (scripts_.empty()) throw std::invalid_argument("catalog: no SCRIPT codes");
  for (const auto& c : codes_) {
    switch (c.kind) {
      case CodeKind::script:
        if (c.members != std::vector<std::string>{c.id}) {
          throw std::invalid_argument("catalog: SCRIPT code '" + c.id + "' must vote for itself only");
        }
        break;
      case CodeKind::ignore:
        if (!c.members.empty()) throw std::invalid_argument("catalog: IGNORE code '" + c.id + "' has members");
        break;
      case CodeKind::shared: {
        if (c.members.empty()) throw std::invalid_argument("catalog: SHARED code '" + c.id + "' has no members");
        std::set<std::string> seen;
        for (const auto& m : c.members) {
          if (std::find(scripts_.begin(), scripts_.end(), m) == scripts_.end()) {
            throw std::invalid_argument("catalog: SHARED code '" + c.id + "' names unknown script '" + m + "'");
          }
          if (!seen.insert(m).second) throw std::invalid_argument("catalog: repeated member '" + m + "'");
        }
        break;
      }
    }
  }
}

int ScriptCatalog::script_index(const std::string& id) const {
  auto it = std::find(scripts_.begin(), scripts_.end(), id);
  if (it == scripts_.end()) throw std::out_of_range("unknown script '" + id + "'");
  return static_cast<int>(it - scripts_.begin());
}

const CatalogCode& ScriptCatalog::code(const std::string& id) const {
  for (const auto& c : codes_) {
    if (c.id == id) return c;
  }
  throw std::out_of_range("unknown catalog code '" + id + "'");
}

void ScriptCatalog::save(std::ostream& os) const {
  os << "SCAT1\n";
  for (const auto& c : codes_) {
    os << c.id << '\t' << to_string(c.kind) << '\t';
    for (std::size_t i = 0; i < c.members.size(); ++i) os << (i ? "," : "") << c.members[i];
    os << '\n';
  }
}

ScriptCatalog ScriptCatalog::load(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "SCAT1") throw std::runtime_error("catalog: missing SCAT1 header");
  std::vector<CatalogCode> codes;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() == 2) cols.emplace_back();
    if (cols.size() != 3) throw std::runtime_error("catalog: malformed line '" + line + "'");
    CatalogCode c;
    c.id = cols[0];
    c.kind = parse_code_kind(cols[1]);
    std::stringstream ms(cols[2]);
    std::string m;
    while (std::getline(ms, m, ',')) {
      if (!m.empty()) c.members.push_back(m);
    }
    codes.push_back(std::move(c));
  }
  return ScriptCatalog(std::move(codes));
}

void ScriptCatalog::save_file(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  save(os);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

ScriptCatalog ScriptCatalog::load_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  try {
    return load(is);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace ssid
