#include "ssid/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssid/ops.hpp"

namespace ssid {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class T>
T log_add(T a, T b) {
  if (a == -std::numeric_limits<T>::infinity()) return b;
  if (b == -std::numeric_limits<T>::infinity()) return a;
  const T m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// The normaliser sums exp terms in sorted order, so relabeling the alphabet
// leaves every log-probability bit-identical.
template <class T>
TensorT<T> log_softmax_rows(const TensorT<T>& logits) {
  TensorT<T> out(logits.shape());
  const int frames = logits.dim(0), v = logits.dim(1);
  std::vector<T> terms(static_cast<std::size_t>(v));
  for (int t = 0; t < frames; ++t) {
    const T* row = logits.data() + static_cast<std::size_t>(t) * v;
    const T m = *std::max_element(row, row + v);
    for (int k = 0; k < v; ++k) terms[static_cast<std::size_t>(k)] = std::exp(row[k] - m);
    std::sort(terms.begin(), terms.end());
    T z = 0;
    for (T e : terms) z += e;
    const T lz = m + std::log(z);
    for (int k = 0; k < v; ++k) out.at(t, k) = row[k] - lz;
  }
  return out;
}

}  // namespace

SymbolAlphabet::SymbolAlphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!by_name_.emplace(symbols_[i], static_cast<int>(i) + 1).second) {
      throw std::invalid_argument("SymbolAlphabet: duplicate symbol '" + symbols_[i] + "'");
    }
  }
}

const std::string& SymbolAlphabet::display(int index) const {
  static const std::string blank = "<blank>";
  if (index == kBlank) return blank;
  return symbols_.at(static_cast<std::size_t>(index - 1));
}

int SymbolAlphabet::index(const std::string& symbol) const {
  auto it = by_name_.find(symbol);
  if (it == by_name_.end()) throw std::out_of_range("symbol '" + symbol + "' not in alphabet");
  return it->second;
}

std::vector<int> SymbolAlphabet::encode(std::span<const std::string> symbols) const {
  std::vector<int> out;
  out.reserve(symbols.size());
  for (const auto& s : symbols) out.push_back(index(s));
  return out;
}

std::vector<std::string> SymbolAlphabet::decode(std::span<const int> indices) const {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(display(i));
  return out;
}

bool ctc_feasible(int frames, std::span<const int> label) {
  int needed = static_cast<int>(label.size());
  for (std::size_t i = 1; i < label.size(); ++i) needed += label[i] == label[i - 1] ? 1 : 0;
  return frames >= needed;
}

template <class T>
CtcResult<T> ctc_loss(const TensorT<T>& logits, std::span<const int> label) {
  if (logits.rank() != 2) throw ShapeError("ctc_loss expects (frames, alphabet), got " + shape_string(logits.shape()));
  const int frames = logits.dim(0), v = logits.dim(1);
  for (int s : label) {
    if (s <= 0 || s >= v) {
      throw std::out_of_range("ctc_loss: label symbol " + std::to_string(s) + " outside 1.." + std::to_string(v - 1));
    }
  }
  if (!ctc_feasible(frames, label)) {
    throw CtcInfeasibleError("ctc_loss: label of length " + std::to_string(label.size()) +
                             " cannot be aligned to " + std::to_string(frames) + " frames");
  }
  const TensorT<T> lp = log_softmax_rows(logits);
  const T ninf = -std::numeric_limits<T>::infinity();

  // Augmented label: blank, l1, blank, l2, ..., blank.
  const int s_len = 2 * static_cast<int>(label.size()) + 1;
  std::vector<int> ext(static_cast<std::size_t>(s_len), SymbolAlphabet::kBlank);
  for (std::size_t i = 0; i < label.size(); ++i) ext[2 * i + 1] = label[i];
  auto can_skip = [&ext](int s) { return s >= 2 && ext[s] != SymbolAlphabet::kBlank && ext[s] != ext[s - 2]; };

  TensorT<T> alpha(Shape{frames, s_len}, ninf);
  TensorT<T> beta(Shape{frames, s_len}, ninf);
  alpha.at(0, 0) = lp.at(0, ext[0]);
  if (s_len > 1) alpha.at(0, 1) = lp.at(0, ext[1]);
  for (int t = 1; t < frames; ++t) {
    for (int s = 0; s < s_len; ++s) {
      T a = alpha.at(t - 1, s);
      if (s >= 1) a = log_add(a, alpha.at(t - 1, s - 1));
      if (can_skip(s)) a = log_add(a, alpha.at(t - 1, s - 2));
      alpha.at(t, s) = a == ninf ? ninf : a + lp.at(t, ext[s]);
    }
  }
  beta.at(frames - 1, s_len - 1) = lp.at(frames - 1, ext[s_len - 1]);
  if (s_len > 1) beta.at(frames - 1, s_len - 2) = lp.at(frames - 1, ext[s_len - 2]);
  for (int t = frames - 2; t >= 0; --t) {
    for (int s = 0; s < s_len; ++s) {
      T b = beta.at(t + 1, s);
      if (s + 1 < s_len) b = log_add(b, beta.at(t + 1, s + 1));
      if (s + 2 < s_len && ext[s + 2] != SymbolAlphabet::kBlank && ext[s + 2] != ext[s]) {
        b = log_add(b, beta.at(t + 1, s + 2));
      }
      beta.at(t, s) = b == ninf ? ninf : b + lp.at(t, ext[s]);
    }
  }
  T log_p = alpha.at(frames - 1, s_len - 1);
  if (s_len > 1) log_p = log_add(log_p, alpha.at(frames - 1, s_len - 2));

  CtcResult<T> r;
  r.loss = -log_p;
  r.grad = TensorT<T>(logits.shape());
  std::vector<T> occupancy(static_cast<std::size_t>(v));
  for (int t = 0; t < frames; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), ninf);
    for (int s = 0; s < s_len; ++s) {
      const T ab = alpha.at(t, s) + beta.at(t, s);
      if (ab != ninf) occupancy[ext[s]] = log_add(occupancy[ext[s]], ab);
    }
    for (int k = 0; k < v; ++k) {
      const T y = std::exp(lp.at(t, k));
      const T post = occupancy[k] == ninf ? T(0) : std::exp(occupancy[k] - lp.at(t, k) - log_p);
      r.grad.at(t, k) = y - post;
    }
  }
  return r;
}

template <class T>
Var<T> ctc_loss(Var<T> logits, std::vector<int> label) {
  CtcResult<T> r = ctc_loss<T>(logits.value(), label);
  auto grad = std::make_shared<TensorT<T>>(std::move(r.grad));
  return logits.graph->record("ctc_loss", TensorT<T>::scalar(r.loss), {logits.id}, [grad](Graph<T>& g, int self) {
    const int x = g.inputs(self)[0];
    if (!g.needs_grad(x)) return;
    const T dy = g.grad(self)[0];
    TensorT<T>& dx = g.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy * (*grad)[i];
  });
}

template <class T>
std::vector<int> ctc_greedy_decode(const TensorT<T>& logits) {
  std::vector<int> out;
  const int frames = logits.dim(0), v = logits.dim(1);
  int prev = -1;
  for (int t = 0; t < frames; ++t) {
    const T* row = logits.data() + static_cast<std::size_t>(t) * v;
    const int best = static_cast<int>(std::max_element(row, row + v) - row);
    if (best != SymbolAlphabet::kBlank && best != prev) out.push_back(best);
    prev = best;
  }
  return out;
}

GraphemePrior GraphemePrior::uniform(int alphabet_size, double decay, double floor) {
  GraphemePrior p;
  p.probs.assign(static_cast<std::size_t>(alphabet_size), 1.0 / alphabet_size);
  p.decay = decay;
  p.floor = floor;
  return p;
}

void GraphemePrior::update(std::span<const double> mean_posterior) {
  if (mean_posterior.size() != probs.size()) throw ShapeError("GraphemePrior::update: alphabet size mismatch");
  double z = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = std::max(decay * probs[i] + (1.0 - decay) * mean_posterior[i], floor);
    z += probs[i];
  }
  for (double& p : probs) p /= z;
}

template <class T>
std::vector<double> GraphemePrior::frame_mean(const TensorT<T>& logits) {
  const int frames = logits.dim(0), v = logits.dim(1);
  std::vector<double> mean(static_cast<std::size_t>(v), 0.0);
  for (int t = 0; t < frames; ++t) {
    std::vector<double> row(logits.data() + static_cast<std::size_t>(t) * v,
                            logits.data() + static_cast<std::size_t>(t + 1) * v);
    const auto p = softmax_values<double>(row);
    for (int k = 0; k < v; ++k) mean[k] += p[k];
  }
  for (double& m : mean) m /= frames;
  return mean;
}

double GraphemePrior::symbol_logprob(int symbol) const {
  const double non_blank = 1.0 - probs.at(SymbolAlphabet::kBlank);
  return std::log(probs.at(static_cast<std::size_t>(symbol)) / std::max(non_blank, floor));
}

namespace {

struct Hypothesis {
  double blank = kNegInf;      // summed score of alignments ending in blank
  double label = kNegInf;      // ... ending in the last symbol
  double best_blank = kNegInf; // best single alignment, same split
  double best_label = kNegInf;
  double text = 0;             // prior + LM score of the prefix
  double total() const { return log_add(blank, label); }
  double best() const { return std::max(best_blank, best_label); }
};

}  // namespace

template <class T>
std::vector<int> beam_decode(const TensorT<T>& logits, const NGramLM* lm, const GraphemePrior* prior,
                             const DecodeWeights& weights, std::size_t beam) {
  if (logits.rank() != 2) throw ShapeError("beam_decode expects (frames, alphabet)");
  const int frames = logits.dim(0), v = logits.dim(1);
  const TensorT<T> lp = log_softmax_rows(logits);

  auto text_step = [&](const std::vector<int>& prefix, int symbol) {
    double s = 0;
    if (prior && weights.prior != 0) s -= weights.prior * prior->symbol_logprob(symbol);
    if (lm && weights.lm != 0) s += weights.lm * lm->cond_logprob(prefix, symbol);
    return s;
  };

  std::map<std::vector<int>, Hypothesis> current;
  current[{}] = Hypothesis{0.0, kNegInf, 0.0, kNegInf, 0.0};
  for (int t = 0; t < frames; ++t) {
    std::map<std::vector<int>, Hypothesis> next;
    auto slot = [&next](const std::vector<int>& prefix, double text) -> Hypothesis& {
      auto [it, inserted] = next.try_emplace(prefix);
      if (inserted) it->second.text = text;
      return it->second;
    };
    for (const auto& [prefix, h] : current) {
      const double stay_sum = h.total();
      const double stay_best = h.best();
      {
        Hypothesis& same = slot(prefix, h.text);
        const double e = weights.optical * lp.at(t, SymbolAlphabet::kBlank);
        same.blank = log_add(same.blank, stay_sum + e);
        same.best_blank = std::max(same.best_blank, stay_best + e);
      }
      const int last = prefix.empty() ? -1 : prefix.back();
      for (int c = 1; c < v; ++c) {
        const double e = weights.optical * lp.at(t, c);
        std::vector<int> extended = prefix;
        extended.push_back(c);
        if (c == last) {
          Hypothesis& same = slot(prefix, h.text);
          same.label = log_add(same.label, h.label + e);
          same.best_label = std::max(same.best_label, h.best_label + e);
          Hypothesis& ext = slot(extended, h.text + text_step(prefix, c));
          ext.label = log_add(ext.label, h.blank + e);
          ext.best_label = std::max(ext.best_label, h.best_blank + e);
        } else {
          Hypothesis& ext = slot(extended, h.text + text_step(prefix, c));
          ext.label = log_add(ext.label, stay_sum + e);
          ext.best_label = std::max(ext.best_label, stay_best + e);
        }
      }
    }
    if (beam != kUnboundedBeam && next.size() > beam) {
      std::vector<std::pair<double, const std::vector<int>*>> ranked;
      ranked.reserve(next.size());
      for (const auto& [prefix, h] : next) ranked.emplace_back(h.best() + h.text, &prefix);
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      std::map<std::vector<int>, Hypothesis> kept;
      for (std::size_t i = 0; i < beam; ++i) kept.emplace(*ranked[i].second, next.at(*ranked[i].second));
      next = std::move(kept);
    }
    current = std::move(next);
  }

  const std::vector<int>* best = nullptr;
  double best_score = kNegInf;
  for (const auto& [prefix, h] : current) {
    double score = h.total() + h.text;
    if (lm && weights.lm != 0) score += weights.lm * lm->cond_logprob(prefix, NGramLM::kEnd);
    if (best == nullptr || score > best_score) {
      best = &prefix;
      best_score = score;
    }
  }
  return best ? *best : std::vector<int>{};
}

#define SSID_INSTANTIATE(T)                                                                       \
  template CtcResult<T> ctc_loss<T>(const TensorT<T>&, std::span<const int>);                     \
  template Var<T> ctc_loss<T>(Var<T>, std::vector<int>);                                          \
  template std::vector<int> ctc_greedy_decode<T>(const TensorT<T>&);                              \
  template std::vector<double> GraphemePrior::frame_mean<T>(const TensorT<T>&);                   \
  template std::vector<int> beam_decode<T>(const TensorT<T>&, const NGramLM*, const GraphemePrior*, \
                                           const DecodeWeights&, std::size_t);

SSID_INSTANTIATE(float)
SSID_INSTANTIATE(double)
#undef SSID_INSTANTIATE

}  // namespace ssid
