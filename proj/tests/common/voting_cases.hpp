#pragma once

#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ssid/baseline.hpp"

namespace oracle {

// Four plain scripts, two ignored codes and a shared triple, as in the
// synthetic corpus.
inline ssid::ScriptCatalog voting_catalog() {
  using ssid::CodeKind;
  return ssid::ScriptCatalog({{"L", CodeKind::script, {"L"}},
                              {"C", CodeKind::script, {"C"}},
                              {"J", CodeKind::script, {"J"}},
                              {"K", CodeKind::script, {"K"}},
                              {"SPACE", CodeKind::ignore, {}},
                              {"DIGIT", CodeKind::ignore, {}},
                              {"CJK", CodeKind::shared, {"C", "J", "K"}}});
}

// Random code sequences (symbol indices 1..7). Short sequences over a small
// alphabet make ties and all-ignored lines common.
inline std::vector<std::vector<int>> random_code_sequences(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(0, 9), code(1, 7);
  std::vector<std::vector<int>> out;
  for (int i = 0; i < count; ++i) {
    std::vector<int> seq(static_cast<std::size_t>(len(rng)));
    for (int& c : seq) c = code(rng);
    out.push_back(seq);
  }
  return out;
}

struct VotingSummary {
  int cases = 0;
  int disagreements = 0;
  int ties = 0;
  int undetermined = 0;
};

inline VotingSummary voting_cases(int count, std::uint64_t seed) {
  const ssid::ScriptCatalog cat = voting_catalog();
  const ssid::ScriptCodeAlphabet alpha(cat);
  VotingSummary s;
  for (const auto& seq : random_code_sequences(count, seed)) {
    const int got = ssid::dominant_script(seq, alpha);
    const int want = naive_dominant(seq, cat);
    const ssid::VoteTally t = ssid::tally_votes(seq, alpha);
    long best = 0;
    int tops = 0;
    for (long c : t.counts) best = std::max(best, c);
    for (long c : t.counts) tops += best > 0 && c == best;
    ++s.cases;
    s.ties += tops > 1;
    s.undetermined += want == ssid::kUndetermined;
    s.disagreements += got != want;
  }
  return s;
}

}  // namespace oracle
