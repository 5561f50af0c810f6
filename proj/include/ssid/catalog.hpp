#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace ssid {

enum class CodeKind { script, ignore, shared };

std::string to_string(CodeKind kind);
CodeKind parse_code_kind(const std::string& text);

struct CatalogCode {
  std::string id;
  CodeKind kind = CodeKind::script;
  std::vector<std::string> members;  // scripts this code votes for
  bool operator==(const CatalogCode&) const = default;
};

// Ordered script set plus the special code classes. Script order is the
// class order of every script-id model and the tie-break order of voting.
class ScriptCatalog {
 public:
  ScriptCatalog() = default;
  explicit ScriptCatalog(std::vector<CatalogCode> codes);

  const std::vector<CatalogCode>& codes() const { return codes_; }
  const std::vector<std::string>& scripts() const { return scripts_; }
  int num_scripts() const { return static_cast<int>(scripts_.size()); }
  int script_index(const std::string& id) const;
  const CatalogCode& code(const std::string& id) const;

  // "SCAT1" then "code<TAB>kind<TAB>members" lines.
  void save(std::ostream& os) const;
  static ScriptCatalog load(std::istream& is);
  void save_file(const std::filesystem::path& path) const;
  static ScriptCatalog load_file(const std::filesystem::path& path);

  bool operator==(const ScriptCatalog& o) const { return codes_ == o.codes_; }

 private:
  std::vector<CatalogCode> codes_;
  std::vector<std::string> scripts_;
};

}  // namespace ssid
