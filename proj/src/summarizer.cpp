#include "ssid/summarizer.hpp"

#include <algorithm>
#include <cmath>

#include "ssid/encoder.hpp"

namespace ssid {

SummarizerKind parse_summarizer(const std::string& name) {
  if (name == "max") return SummarizerKind::max;
  if (name == "mean") return SummarizerKind::mean;
  if (name == "gate") return SummarizerKind::gate;
  if (name == "lstm") return SummarizerKind::lstm;
  throw std::invalid_argument("unknown summarizer '" + name + "'");
}

std::string to_string(SummarizerKind kind) {
  switch (kind) {
    case SummarizerKind::max: return "max";
    case SummarizerKind::mean: return "mean";
    case SummarizerKind::gate: return "gate";
    case SummarizerKind::lstm: return "lstm";
  }
  return "?";
}

// Forget-gate bias 1 so the cell starts out carrying its state across the line.
template <class T>
TensorT<T> lstm_bias(int units) {
  TensorT<T> b(Shape{4 * units});
  for (int j = units; j < 2 * units; ++j) b[static_cast<std::size_t>(j)] = T(1);
  return b;
}

template <class T>
void init_frame_head(ParamStore<T>& params, std::mt19937_64& rng, const std::string& prefix,
                     int in_dim, int out_dim, const HeadConfig& cfg) {
  const int kw = cfg.kernel_width;
  params.add(prefix + "/conv/w", he_uniform<T>(Shape{1, kw, in_dim, cfg.channels}, kw * in_dim, rng));
  params.add(prefix + "/conv/b", TensorT<T>(Shape{cfg.channels}));
  params.add(prefix + "/proj/w", glorot_uniform<T>(Shape{cfg.channels, out_dim}, cfg.channels, out_dim, rng));
  params.add(prefix + "/proj/b", TensorT<T>(Shape{out_dim}));
}

template <class T>
Var<T> frame_head(Var<T> features, const std::string& prefix, const HeadConfig& cfg) {
  Graph<T>& g = *features.graph;
  const Shape& s = features.shape();
  if (s.size() != 2) throw ShapeError("frame head expects (w', d'), got " + shape_string(s));
  const int frames = s[0];
  Var<T> x = reshape(features, Shape{1, frames, s[1]});
  x = activate(conv2d(x, g.param(prefix + "/conv/w"), g.param(prefix + "/conv/b"), 1, 1), Activation::relu6);
  x = reshape(x, Shape{frames, cfg.channels});
  return fully_connected(x, g.param(prefix + "/proj/w"), g.param(prefix + "/proj/b"), Activation::linear);
}

template <class T>
void init_summarizer(ParamStore<T>& params, std::mt19937_64& rng, SummarizerKind kind,
                     int feature_dim, int num_scripts, const HeadConfig& cfg) {
  switch (kind) {
    case SummarizerKind::max:
    case SummarizerKind::mean:
      init_frame_head(params, rng, "sum/logits", feature_dim, num_scripts, cfg);
      break;
    case SummarizerKind::gate:
      init_frame_head(params, rng, "sum/logits", feature_dim, num_scripts, cfg);
      init_frame_head(params, rng, "sum/gate", feature_dim, 1, cfg);
      break;
    case SummarizerKind::lstm: {
      const int n = cfg.lstm_units;
      params.add("sum/lstm_fwd/wx", glorot_uniform<T>(Shape{feature_dim, 4 * n}, feature_dim, 4 * n, rng));
      params.add("sum/lstm_fwd/wh", glorot_uniform<T>(Shape{n, 4 * n}, n, 4 * n, rng));
      params.add("sum/lstm_fwd/b", lstm_bias<T>(n));
      params.add("sum/lstm_bwd/wx", glorot_uniform<T>(Shape{n, 4 * n}, n, 4 * n, rng));
      params.add("sum/lstm_bwd/wh", glorot_uniform<T>(Shape{n, 4 * n}, n, 4 * n, rng));
      params.add("sum/lstm_bwd/b", lstm_bias<T>(n));
      params.add("sum/fc1/w", glorot_uniform<T>(Shape{n, cfg.fc_units}, n, cfg.fc_units, rng));
      params.add("sum/fc1/b", TensorT<T>(Shape{cfg.fc_units}));
      params.add("sum/fc2/w", glorot_uniform<T>(Shape{cfg.fc_units, num_scripts}, cfg.fc_units, num_scripts, rng));
      params.add("sum/fc2/b", TensorT<T>(Shape{num_scripts}));
      break;
    }
  }
}

template <class T>
Var<T> frame_logits(Var<T> features, const HeadConfig& cfg) {
  return frame_head(features, "sum/logits", cfg);
}

template <class T>
Var<T> gate_weights(Var<T> features, const HeadConfig& cfg) {
  return activate(frame_head(features, "sum/gate", cfg), Activation::sigmoid);
}

template <class T>
Var<T> summarize(Var<T> features, SummarizerKind kind, const HeadConfig& cfg) {
  if (features.shape().size() != 2 || features.shape()[0] < 1) {
    throw std::invalid_argument("summarize: empty feature sequence");
  }
  Graph<T>& g = *features.graph;
  switch (kind) {
    case SummarizerKind::max: return reduce_max_rows(frame_logits(features, cfg));
    case SummarizerKind::mean: return reduce_mean_rows(frame_logits(features, cfg));
    case SummarizerKind::gate:
      return gated_mean_rows(frame_logits(features, cfg), gate_weights(features, cfg), static_cast<T>(cfg.gate_eps));
    case SummarizerKind::lstm: {
      const Var<T> fwd = lstm_sequence(features, g.param("sum/lstm_fwd/wx"), g.param("sum/lstm_fwd/wh"),
                                       g.param("sum/lstm_fwd/b"), Direction::forward);
      const Var<T> bwd = lstm_sequence(fwd, g.param("sum/lstm_bwd/wx"), g.param("sum/lstm_bwd/wh"),
                                       g.param("sum/lstm_bwd/b"), Direction::backward);
      // The backward pass finishes at index 0, which has seen the whole line.
      const Var<T> last = take_row(bwd, 0);
      const Var<T> hidden = fully_connected(last, g.param("sum/fc1/w"), g.param("sum/fc1/b"), Activation::tanh);
      return fully_connected(hidden, g.param("sum/fc2/w"), g.param("sum/fc2/b"), Activation::linear);
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<double> summarize_max(const TensorD& logits) {
  const int n = logits.dim(0), k = logits.dim(1);
  std::vector<double> out(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    double m = logits.at(0, j);
    for (int i = 1; i < n; ++i) m = std::max(m, logits.at(i, j));
    out[j] = m;
  }
  return out;
}

std::vector<double> summarize_mean(const TensorD& logits) {
  const int n = logits.dim(0), k = logits.dim(1);
  std::vector<double> out(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) out[j] += logits.at(i, j);
  }
  for (double& v : out) v /= n;
  return out;
}

std::vector<double> summarize_gate(const TensorD& logits, std::span<const double> gates, double eps) {
  const int n = logits.dim(0), k = logits.dim(1);
  if (gates.size() != static_cast<std::size_t>(n)) throw ShapeError("summarize_gate: gate count mismatch");
  double denom = eps;
  for (double g : gates) denom += g;
  std::vector<double> out(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) out[j] += gates[i] * logits.at(i, j);
  }
  for (double& v : out) v /= denom;
  return out;
}

int ScriptPosterior::best() const {
  return static_cast<int>(std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin());
}

ScriptPosterior make_posterior(std::span<const double> scores) {
  ScriptPosterior p;
  p.scores.assign(scores.begin(), scores.end());
  p.probabilities = softmax_values<double>(scores);
  return p;
}

#define SSID_INSTANTIATE(T)                                                                                   \
  template void init_frame_head<T>(ParamStore<T>&, std::mt19937_64&, const std::string&, int, int,            \
                                   const HeadConfig&);                                                        \
  template Var<T> frame_head<T>(Var<T>, const std::string&, const HeadConfig&);                               \
  template void init_summarizer<T>(ParamStore<T>&, std::mt19937_64&, SummarizerKind, int, int, const HeadConfig&); \
  template Var<T> frame_logits<T>(Var<T>, const HeadConfig&);                                                 \
  template Var<T> gate_weights<T>(Var<T>, const HeadConfig&);                                                 \
  template Var<T> summarize<T>(Var<T>, SummarizerKind, const HeadConfig&);

SSID_INSTANTIATE(float)
SSID_INSTANTIATE(double)
#undef SSID_INSTANTIATE

}  // namespace ssid
