#include "ssid/baseline.hpp"

#include <algorithm>
#include <stdexcept>

#include "ssid/ctc.hpp"

namespace ssid {

namespace {

std::vector<std::string> code_ids(const ScriptCatalog& catalog) {
  std::vector<std::string> ids;
  for (const auto& c : catalog.codes()) ids.push_back(c.id);
  return ids;
}

}  // namespace

ScriptCodeAlphabet::ScriptCodeAlphabet(const ScriptCatalog& catalog)
    : catalog_(catalog), symbols_(code_ids(catalog)) {
  votes_.emplace_back();  // blank
  for (const auto& c : catalog_.codes()) {
    std::vector<int> v;
    for (const auto& m : c.members) v.push_back(catalog_.script_index(m));
    votes_.push_back(std::move(v));
  }
}

const std::vector<int>& ScriptCodeAlphabet::votes(int code) const {
  if (code <= SymbolAlphabet::kBlank || code >= size()) {
    throw std::out_of_range("script code " + std::to_string(code) + " is not a catalog code");
  }
  return votes_[static_cast<std::size_t>(code)];
}

VoteTally tally_votes(std::span<const int> codes, const ScriptCodeAlphabet& alphabet) {
  VoteTally t;
  t.counts.assign(static_cast<std::size_t>(alphabet.num_scripts()), 0);
  for (int c : codes) {
    for (int s : alphabet.votes(c)) {
      ++t.counts[static_cast<std::size_t>(s)];
      ++t.total;
    }
  }
  return t;
}

int dominant_script(std::span<const int> codes, const ScriptCodeAlphabet& alphabet) {
  const VoteTally t = tally_votes(codes, alphabet);
  if (t.total == 0) return kUndetermined;
  // max_element returns the first maximum, which is the catalog-order tie-break.
  return static_cast<int>(std::max_element(t.counts.begin(), t.counts.end()) - t.counts.begin());
}

template <class T>
Var<T> code_logits(Var<T> features, const HeadConfig& head) {
  return frame_head(features, "ctc", head);
}

template <class T>
int baseline_classify(const TensorT<T>& image, const EncoderConfig& encoder, const HeadConfig& head,
                      const ParamStore<T>& params, const ScriptCodeAlphabet& alphabet) {
  Graph<T> g(&params);
  const Var<T> logits = code_logits(encode(encoder, g, image), head);
  const std::vector<int> codes = ctc_greedy_decode(logits.value());
  return dominant_script(codes, alphabet);
}

template Var<float> code_logits<float>(Var<float>, const HeadConfig&);
template Var<double> code_logits<double>(Var<double>, const HeadConfig&);
template int baseline_classify<float>(const Tensor&, const EncoderConfig&, const HeadConfig&,
                                      const ParamStore<float>&, const ScriptCodeAlphabet&);
template int baseline_classify<double>(const TensorD&, const EncoderConfig&, const HeadConfig&,
                                       const ParamStore<double>&, const ScriptCodeAlphabet&);

}  // namespace ssid
