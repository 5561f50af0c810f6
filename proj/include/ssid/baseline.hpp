#pragma once

#include <span>
#include <vector>

#include "ssid/alphabet.hpp"
#include "ssid/catalog.hpp"
#include "ssid/encoder.hpp"
#include "ssid/summarizer.hpp"

namespace ssid {

inline constexpr int kUndetermined = -1;

// CTC output alphabet of the Base model: one symbol per catalog code (in
// catalog order) after the blank, with the vote rule of each.
class ScriptCodeAlphabet {
 public:
  ScriptCodeAlphabet() = default;
  explicit ScriptCodeAlphabet(const ScriptCatalog& catalog);

  const ScriptCatalog& catalog() const { return catalog_; }
  const SymbolAlphabet& symbols() const { return symbols_; }
  int size() const { return symbols_.size(); }
  int num_scripts() const { return catalog_.num_scripts(); }

  // Script indices a code votes for; empty for IGNORE codes.
  const std::vector<int>& votes(int code) const;

 private:
  ScriptCatalog catalog_;
  SymbolAlphabet symbols_;
  std::vector<std::vector<int>> votes_;
};

struct VoteTally {
  std::vector<long> counts;  // per script
  long total = 0;
};

// Throws std::out_of_range on a blank or unknown code.
VoteTally tally_votes(std::span<const int> codes, const ScriptCodeAlphabet& alphabet);

// Majority script; ties go to the lowest script index, no votes gives
// kUndetermined.
int dominant_script(std::span<const int> codes, const ScriptCodeAlphabet& alphabet);

// encode -> code logits -> best path -> dominant_script.
template <class T>
int baseline_classify(const TensorT<T>& image, const EncoderConfig& encoder, const HeadConfig& head,
                      const ParamStore<T>& params, const ScriptCodeAlphabet& alphabet);

// Frame code logits (w', |codes| + 1) of the Base head, prefix "ctc".
template <class T>
Var<T> code_logits(Var<T> features, const HeadConfig& head);

}  // namespace ssid
