#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssid/graph.hpp"
#include "ssid/alphabet.hpp"
#include "ssid/ngram.hpp"

namespace ssid {

class CtcInfeasibleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A label fits `frames` frames iff frames >= |label| + number of adjacent
// repeats (each repeat needs a separating blank).
bool ctc_feasible(int frames, std::span<const int> label);

template <class T>
struct CtcResult {
  T loss = 0;
  TensorT<T> grad;  // d loss / d logits, same shape as the logits
};

// logits: (frames, alphabet) pre-softmax; label symbols in 1..alphabet-1.
// Log-space forward-backward over the blank-augmented label.
template <class T>
CtcResult<T> ctc_loss(const TensorT<T>& logits, std::span<const int> label);

// Graph node form with the same value and gradient.
template <class T>
Var<T> ctc_loss(Var<T> logits, std::vector<int> label);

// Best path: per-frame argmax, merge repeats, drop blanks.
template <class T>
std::vector<int> ctc_greedy_decode(const TensorT<T>& logits);

// Moving average of the optical model's per-frame posterior, used as the
// unigram prior P(c|s) that decoding divides out.
struct GraphemePrior {
  std::vector<double> probs;  // over the alphabet, index 0 = blank
  double decay = 0.999;
  double floor = 1e-6;

  static GraphemePrior uniform(int alphabet_size, double decay = 0.999, double floor = 1e-6);

  // probs <- decay * probs + (1 - decay) * mean, then floor and renormalise.
  void update(std::span<const double> mean_posterior);

  // Mean over frames of softmax(logits); (frames, alphabet).
  template <class T>
  static std::vector<double> frame_mean(const TensorT<T>& logits);

  // log P(c | c is not blank): the prior over emitted symbols.
  double symbol_logprob(int symbol) const;
};

struct DecodeWeights {
  double optical = 1.0;
  double prior = 1.0;
  double lm = 1.0;
};

inline constexpr std::size_t kUnboundedBeam = 0;

// Prefix beam search. Hypotheses carry summed blank/non-blank alignment
// scores (lambda_optical * log P per frame); each emitted symbol adds
// -lambda_prior * log P(c|s) + lambda_lm * log P(c|context), and the end
// marker adds lambda_lm * log P(end|context). Survivors at each frame are
// ranked by their best single alignment plus text score; the final choice
// uses the summed score. `lm` and `prior` may be null.
template <class T>
std::vector<int> beam_decode(const TensorT<T>& logits, const NGramLM* lm, const GraphemePrior* prior,
                             const DecodeWeights& weights, std::size_t beam);

}  // namespace ssid
