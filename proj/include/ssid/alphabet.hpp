#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace ssid {

// Output symbols of a CTC head. Index 0 is the blank; real symbols are 1..n.
class SymbolAlphabet {
 public:
  static constexpr int kBlank = 0;

  SymbolAlphabet() = default;
  explicit SymbolAlphabet(std::vector<std::string> symbols);

  // Including the blank.
  int size() const { return static_cast<int>(symbols_.size()) + 1; }
  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::string& display(int index) const;
  int index(const std::string& symbol) const;
  bool contains(const std::string& symbol) const { return by_name_.count(symbol) != 0; }

  std::vector<int> encode(std::span<const std::string> symbols) const;
  std::vector<std::string> decode(std::span<const int> indices) const;

  bool operator==(const SymbolAlphabet& o) const { return symbols_ == o.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int> by_name_;
};

}  // namespace ssid
