#pragma once

// Differentiable operations recorded on a Graph. Every op validates input
// shapes and throws ShapeError naming the offending shapes.

#include <span>
#include <string>
#include <vector>

#include "ssid/graph.hpp"
#include "ssid/kernels.hpp"

namespace ssid {

enum class Activation { linear, relu6, tanh, sigmoid };

Activation parse_activation(const std::string& name);
std::string to_string(Activation f);

template <class T>
T apply_activation(Activation f, T x);

enum class Direction { forward, backward };

using kernels::PoolKind;

// input (h, w, c_in), filters (k_h, k_w, c_in, c_out), optional bias (c_out).
template <class T>
Var<T> conv2d(Var<T> input, Var<T> filters, Var<T> bias, int stride_h, int stride_w);

template <class T>
Var<T> pool(Var<T> input, PoolKind kind, int window_h, int window_w, int stride_h, int stride_w);

template <class T>
Var<T> activate(Var<T> input, Activation f);

// input (n_in) or (rows, n_in); weights (n_in, n_out); bias (n_out).
template <class T>
Var<T> fully_connected(Var<T> input, Var<T> weights, Var<T> bias, Activation f);

// seq (steps, d_in); input_weights (d_in, 4n); recurrent_weights (n, 4n);
// bias (4n). Gate blocks are ordered input, forget, candidate, output.
template <class T>
Var<T> lstm_sequence(Var<T> seq, Var<T> input_weights, Var<T> recurrent_weights, Var<T> bias,
                     Direction direction);

template <class T>
Var<T> softmax(Var<T> logits);

// -log softmax(logits)[label]; scalar.
template <class T>
Var<T> cross_entropy(Var<T> logits, int label);

template <class T>
Var<T> concat_last(const std::vector<Var<T>>& parts);

template <class T>
Var<T> reshape(Var<T> input, Shape shape);

// (h, w, c) -> (w, h * c): each column becomes one frame.
template <class T>
Var<T> columns_to_sequence(Var<T> input);

// Reductions over the row (frame) axis of an (n, k) tensor, producing (k).
template <class T>
Var<T> reduce_max_rows(Var<T> input);
template <class T>
Var<T> reduce_mean_rows(Var<T> input);
// sum_i g_i * x_{i,k} / (sum_i g_i + eps); gates shaped (n) or (n, 1).
template <class T>
Var<T> gated_mean_rows(Var<T> input, Var<T> gates, T eps);

template <class T>
Var<T> take_row(Var<T> input, int row);

template <class T>
Var<T> sum(Var<T> input);

// sum_j weights_j * input_j; a scalar probe used by gradient checks.
template <class T>
Var<T> weighted_sum(Var<T> input, const TensorT<T>& weights);

template <class T>
Var<T> scale(Var<T> input, T factor);

template <class T>
Var<T> add(Var<T> a, Var<T> b);

// Numerically stable helpers on plain tensors.
template <class T>
std::vector<T> softmax_values(std::span<const T> logits);
template <class T>
std::vector<T> log_softmax_values(std::span<const T> logits);

}  // namespace ssid
