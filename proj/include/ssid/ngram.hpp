#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "ssid/alphabet.hpp"

namespace ssid {

// Add-k smoothed N-gram model over alphabet symbols 1..V-1. The outcome set
// is those symbols plus an end marker, which reuses index 0 (the CTC blank
// never occurs in text). Contexts are the previous N-1 symbols padded with
// kBegin.
class NGramLM {
 public:
  static constexpr int kBegin = -1;
  static constexpr int kEnd = 0;

  NGramLM() = default;
  NGramLM(int order, double k, int alphabet_size);

  static NGramLM fit(const std::vector<std::vector<int>>& corpus, int order, double k, int alphabet_size);

  int order() const { return order_; }
  double k() const { return k_; }
  int alphabet_size() const { return alphabet_size_; }

  void add_sequence(std::span<const int> sequence);

  // log P(outcome | context); `history` is any preceding text, only its
  // last N-1 symbols are used.
  double cond_logprob(std::span<const int> history, int outcome) const;

  // Sum of conditional log-probabilities including the end marker.
  double logprob(std::span<const int> sequence) const;

  // "NGLM1 N=<n> k=<k>" then "context<TAB>symbol<TAB>count" lines.
  void save(std::ostream& os, const SymbolAlphabet& alphabet) const;
  static NGramLM load(std::istream& is, const SymbolAlphabet& alphabet);

  bool operator==(const NGramLM&) const = default;

 private:
  std::vector<int> context_of(std::span<const int> history) const;

  int order_ = 1;
  double k_ = 0.1;
  int alphabet_size_ = 1;
  std::map<std::vector<int>, std::map<int, std::uint64_t>> counts_;
  std::map<std::vector<int>, std::uint64_t> totals_;
};

}  // namespace ssid
