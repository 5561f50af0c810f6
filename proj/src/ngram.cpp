#include "ssid/ngram.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ssid {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

NGramLM::NGramLM(int order, double k, int alphabet_size) : order_(order), k_(k), alphabet_size_(alphabet_size) {
  if (order < 1) throw std::invalid_argument("NGramLM: order must be >= 1");
  if (!(k > 0)) throw std::invalid_argument("NGramLM: smoothing constant must be > 0");
  if (alphabet_size < 2) throw std::invalid_argument("NGramLM: alphabet needs at least one symbol");
}

NGramLM NGramLM::fit(const std::vector<std::vector<int>>& corpus, int order, double k, int alphabet_size) {
  if (corpus.empty()) throw std::invalid_argument("NGramLM::fit: empty corpus");
  NGramLM lm(order, k, alphabet_size);
  for (const auto& seq : corpus) lm.add_sequence(seq);
  return lm;
}

std::vector<int> NGramLM::context_of(std::span<const int> history) const {
  const int n = order_ - 1;
  std::vector<int> ctx(static_cast<std::size_t>(n), kBegin);
  const int have = static_cast<int>(history.size());
  for (int i = 0; i < n && i < have; ++i) ctx[n - 1 - i] = history[have - 1 - i];
  return ctx;
}

void NGramLM::add_sequence(std::span<const int> sequence) {
  std::vector<int> history;
  for (std::size_t i = 0; i <= sequence.size(); ++i) {
    const int outcome = i < sequence.size() ? sequence[i] : kEnd;
    if (i < sequence.size() && (outcome <= 0 || outcome >= alphabet_size_)) {
      throw std::out_of_range("NGramLM: symbol " + std::to_string(outcome) + " outside alphabet");
    }
    const auto ctx = context_of(history);
    ++counts_[ctx][outcome];
    ++totals_[ctx];
    if (i < sequence.size()) history.push_back(outcome);
  }
}

double NGramLM::cond_logprob(std::span<const int> history, int outcome) const {
  const auto ctx = context_of(history);
  double count = 0, total = 0;
  if (auto it = counts_.find(ctx); it != counts_.end()) {
    if (auto jt = it->second.find(outcome); jt != it->second.end()) count = static_cast<double>(jt->second);
    total = static_cast<double>(totals_.at(ctx));
  }
  return std::log((count + k_) / (total + k_ * alphabet_size_));
}

double NGramLM::logprob(std::span<const int> sequence) const {
  double lp = 0;
  for (std::size_t i = 0; i <= sequence.size(); ++i) {
    const int outcome = i < sequence.size() ? sequence[i] : kEnd;
    lp += cond_logprob(sequence.first(i), outcome);
  }
  return lp;
}

void NGramLM::save(std::ostream& os, const SymbolAlphabet& alphabet) const {
  if (alphabet.size() != alphabet_size_) throw std::invalid_argument("NGramLM::save: alphabet size mismatch");
  os << "NGLM1 N=" << order_ << " k=" << format_double(k_) << '\n';
  for (const auto& [ctx, row] : counts_) {
    std::string ctx_text;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      if (i) ctx_text += ' ';
      ctx_text += ctx[i] == kBegin ? std::string("<s>") : alphabet.display(ctx[i]);
    }
    for (const auto& [outcome, count] : row) {
      os << ctx_text << '\t' << (outcome == kEnd ? std::string("</s>") : alphabet.display(outcome)) << '\t'
         << count << '\n';
    }
  }
}

NGramLM NGramLM::load(std::istream& is, const SymbolAlphabet& alphabet) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("NGramLM::load: missing header");
  int order = 0;
  double k = 0;
  {
    const auto parts = split_spaces(header);
    if (parts.size() != 3 || parts[0] != "NGLM1" || parts[1].rfind("N=", 0) != 0 || parts[2].rfind("k=", 0) != 0) {
      throw std::runtime_error("NGramLM::load: bad header '" + header + "'");
    }
    order = std::stoi(parts[1].substr(2));
    k = std::stod(parts[2].substr(2));
  }
  NGramLM lm(order, k, alphabet.size());
  auto symbol_of = [&alphabet](const std::string& s) {
    if (s == "<s>") return kBegin;
    if (s == "</s>") return kEnd;
    return alphabet.index(s);
  };
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw std::runtime_error("NGramLM::load: malformed line '" + line + "'");
    }
    std::vector<int> ctx;
    for (const auto& tok : split_spaces(line.substr(0, t1))) ctx.push_back(symbol_of(tok));
    if (static_cast<int>(ctx.size()) != order - 1) throw std::runtime_error("NGramLM::load: context length mismatch");
    const int outcome = symbol_of(line.substr(t1 + 1, t2 - t1 - 1));
    const std::uint64_t count = std::stoull(line.substr(t2 + 1));
    lm.counts_[ctx][outcome] += count;
    lm.totals_[ctx] += count;
  }
  return lm;
}

}  // namespace ssid
