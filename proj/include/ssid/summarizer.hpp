#pragma once

#include <random>
#include <string>
#include <vector>

#include "ssid/graph.hpp"
#include "ssid/ops.hpp"

namespace ssid {

enum class SummarizerKind { max, mean, gate, lstm };

SummarizerKind parse_summarizer(const std::string& name);
std::string to_string(SummarizerKind kind);

struct HeadConfig {
  int kernel_width = 3;   // frame-head convolution width over the sequence
  int channels = 64;      // frame-head hidden channels
  int lstm_units = 64;    // both LSTM directions
  int fc_units = 64;      // LSTM summarizer hidden FC
  double gate_eps = 1e-8; // gate denominator guard
  bool operator==(const HeadConfig&) const = default;
};

// Frame head body shared by L(h), G(h) and the CTC heads: a width-k SAME
// convolution along the sequence (relu6), then a per-frame linear projection.
template <class T>
void init_frame_head(ParamStore<T>& params, std::mt19937_64& rng, const std::string& prefix,
                     int in_dim, int out_dim, const HeadConfig& cfg);

template <class T>
Var<T> frame_head(Var<T> features, const std::string& prefix, const HeadConfig& cfg);

// All summarizer parameters for `num_scripts` classes, under "sum/".
template <class T>
void init_summarizer(ParamStore<T>& params, std::mt19937_64& rng, SummarizerKind kind,
                     int feature_dim, int num_scripts, const HeadConfig& cfg);

// L(h): (w', |S|) frame logits.
template <class T>
Var<T> frame_logits(Var<T> features, const HeadConfig& cfg);

// G(h): (w', 1) gates in (0, 1).
template <class T>
Var<T> gate_weights(Var<T> features, const HeadConfig& cfg);

// Script scores F(h, .) of shape (|S|), before softmax.
template <class T>
Var<T> summarize(Var<T> features, SummarizerKind kind, const HeadConfig& cfg);

// Plain-value summarizers over a given logit sequence (rows = frames).
// They are the reference algebra the graph ops above implement.
std::vector<double> summarize_max(const TensorD& logits);
std::vector<double> summarize_mean(const TensorD& logits);
std::vector<double> summarize_gate(const TensorD& logits, std::span<const double> gates, double eps);

struct ScriptPosterior {
  std::vector<double> scores;
  std::vector<double> probabilities;
  int best() const;
};

ScriptPosterior make_posterior(std::span<const double> scores);

}  // namespace ssid
