#include "ssid/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace ssid {

namespace {

[[noreturn]] void shape_mismatch(const std::string& op, const Shape& a, const Shape& b) {
  throw ShapeError(op + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

template <class T>
T sigmoid_value(T x) {
  T y;
  if (x >= 0) {
    y = T(1) / (T(1) + std::exp(-x));
  } else {
    const T e = std::exp(x);
    y = e / (T(1) + e);
  }
  // Keep the open interval (0, 1) even where the exact value rounds to an end.
  const T hi = T(1) - std::numeric_limits<T>::epsilon() / 2;
  return std::clamp(y, std::numeric_limits<T>::min(), hi);
}

template <class T>
void accumulate(TensorT<T>& dst, const TensorT<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu6") return Activation::relu6;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(Activation f) {
  switch (f) {
    case Activation::linear: return "linear";
    case Activation::relu6: return "relu6";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

template <class T>
T apply_activation(Activation f, T x) {
  switch (f) {
    case Activation::linear: return x;
    case Activation::relu6: return std::min(std::max(T(0), x), T(6));
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return sigmoid_value(x);
  }
  return x;
}

template <class T>
Var<T> conv2d(Var<T> input, Var<T> filters, Var<T> bias, int stride_h, int stride_w) {
  Graph<T>& g = *input.graph;
  const Shape& xs = input.shape();
  const Shape& fs = filters.shape();
  if (xs.size() != 3 || fs.size() != 4 || fs[2] != xs[2]) shape_mismatch("conv2d", xs, fs);
  if (stride_h < 1 || stride_w < 1) throw std::invalid_argument("conv2d: strides must be >= 1");
  if (bias.valid() && bias.shape() != Shape{fs[3]}) shape_mismatch("conv2d bias", bias.shape(), fs);

  const auto geom =
      kernels::ConvGeometry::make(xs[0], xs[1], xs[2], fs[0], fs[1], fs[3], stride_h, stride_w);
  TensorT<T> out(Shape{geom.y.out, geom.x.out, fs[3]});
  kernels::parallel::conv2d_forward(geom, input.value().data(), filters.value().data(),
                                    bias.valid() ? bias.value().data() : nullptr, out.data());

  std::vector<int> ins{input.id, filters.id};
  if (bias.valid()) ins.push_back(bias.id);
  return g.record("conv2d", std::move(out), std::move(ins), [geom](Graph<T>& gr, int self) {
    const auto& in = gr.inputs(self);
    const TensorT<T>& dout = gr.grad(self);
    T* dx = gr.needs_grad(in[0]) ? gr.grad(in[0]).data() : nullptr;
    T* df = gr.needs_grad(in[1]) ? gr.grad(in[1]).data() : nullptr;
    T* db = (in.size() > 2 && gr.needs_grad(in[2])) ? gr.grad(in[2]).data() : nullptr;
    kernels::parallel::conv2d_backward(geom, gr.value(in[0]).data(), gr.value(in[1]).data(),
                                       dout.data(), dx, df, db);
  });
}

template <class T>
Var<T> pool(Var<T> input, PoolKind kind, int window_h, int window_w, int stride_h, int stride_w) {
  const Shape& xs = input.shape();
  if (xs.size() != 3) throw ShapeError("pool: expected (h, w, c), got " + shape_string(xs));
  if (window_h < 1 || window_w < 1 || stride_h < 1 || stride_w < 1) {
    throw std::invalid_argument("pool: window and stride must be >= 1");
  }
  const auto geom =
      kernels::PoolGeometry::make(xs[0], xs[1], xs[2], window_h, window_w, stride_h, stride_w);
  TensorT<T> out(Shape{geom.y.out, geom.x.out, xs[2]});
  auto argmax = std::make_shared<std::vector<int>>(kind == PoolKind::max ? out.size() : 0);
  kernels::parallel::pool_forward(geom, kind, input.value().data(), out.data(),
                                  kind == PoolKind::max ? argmax->data() : nullptr);
  return input.graph->record(
      kind == PoolKind::max ? "maxpool" : "avgpool", std::move(out), {input.id},
      [geom, kind, argmax](Graph<T>& gr, int self) {
        const int x = gr.inputs(self)[0];
        if (!gr.needs_grad(x)) return;
        kernels::parallel::pool_backward(geom, kind, gr.grad(self).data(), argmax->data(),
                                         gr.grad(x).data());
      });
}

template <class T>
Var<T> activate(Var<T> input, Activation f) {
  if (f == Activation::linear) return input;
  const TensorT<T>& x = input.value();
  TensorT<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = apply_activation(f, x[i]);
  return input.graph->record(to_string(f), std::move(out), {input.id}, [f](Graph<T>& gr, int self) {
    const int xi = gr.inputs(self)[0];
    if (!gr.needs_grad(xi)) return;
    const TensorT<T>& xv = gr.value(xi);
    const TensorT<T>& y = gr.value(self);
    const TensorT<T>& dy = gr.grad(self);
    TensorT<T>& dx = gr.grad(xi);
    for (std::size_t i = 0; i < y.size(); ++i) {
      T d = 0;
      switch (f) {
        case Activation::relu6: d = (xv[i] > T(0) && xv[i] < T(6)) ? T(1) : T(0); break;
        case Activation::tanh: d = T(1) - y[i] * y[i]; break;
        case Activation::sigmoid: d = y[i] * (T(1) - y[i]); break;
        case Activation::linear: d = 1; break;
      }
      dx[i] += dy[i] * d;
    }
  });
}

template <class T>
Var<T> fully_connected(Var<T> input, Var<T> weights, Var<T> bias, Activation f) {
  const Shape& xs = input.shape();
  const Shape& ws = weights.shape();
  const bool vector_input = xs.size() == 1;
  const int rows = vector_input ? 1 : xs[0];
  const int n_in = vector_input ? xs[0] : xs[1];
  if (xs.size() > 2 || ws.size() != 2 || ws[0] != n_in) shape_mismatch("fully_connected", xs, ws);
  const int n_out = ws[1];
  if (bias.valid() && bias.shape() != Shape{n_out}) {
    shape_mismatch("fully_connected bias", bias.shape(), ws);
  }
  TensorT<T> out(vector_input ? Shape{n_out} : Shape{rows, n_out});
  if (bias.valid()) {
    for (int r = 0; r < rows; ++r) {
      std::copy(bias.value().data(), bias.value().data() + n_out,
                out.data() + static_cast<std::size_t>(r) * n_out);
    }
  }
  kernels::parallel::gemm(false, false, rows, n_out, n_in, T(1), input.value().data(), n_in,
                          weights.value().data(), n_out, bias.valid() ? T(1) : T(0), out.data(),
                          n_out);
  std::vector<int> ins{input.id, weights.id};
  if (bias.valid()) ins.push_back(bias.id);
  Var<T> affine = input.graph->record(
      "affine", std::move(out), std::move(ins), [rows, n_in, n_out](Graph<T>& gr, int self) {
        const auto& in = gr.inputs(self);
        const T* dy = gr.grad(self).data();
        if (gr.needs_grad(in[0])) {
          kernels::parallel::gemm(false, true, rows, n_in, n_out, T(1), dy, n_out,
                                  gr.value(in[1]).data(), n_out, T(1), gr.grad(in[0]).data(), n_in);
        }
        if (gr.needs_grad(in[1])) {
          kernels::parallel::gemm(true, false, n_in, n_out, rows, T(1), gr.value(in[0]).data(),
                                  n_in, dy, n_out, T(1), gr.grad(in[1]).data(), n_out);
        }
        if (in.size() > 2 && gr.needs_grad(in[2])) {
          T* db = gr.grad(in[2]).data();
          for (int r = 0; r < rows; ++r) {
            for (int j = 0; j < n_out; ++j) db[j] += dy[static_cast<std::size_t>(r) * n_out + j];
          }
        }
      });
  return activate(affine, f);
}

template <class T>
Var<T> lstm_sequence(Var<T> seq, Var<T> input_weights, Var<T> recurrent_weights, Var<T> bias,
                     Direction direction) {
  const Shape& xs = seq.shape();
  const Shape& wx = input_weights.shape();
  const Shape& wh = recurrent_weights.shape();
  if (xs.size() != 2 || wx.size() != 2 || wx[0] != xs[1]) shape_mismatch("lstm input", xs, wx);
  const int n = wh.size() == 2 ? wh[0] : -1;
  if (wh.size() != 2 || wh[1] != 4 * n || wx[1] != 4 * n) shape_mismatch("lstm recurrent", wx, wh);
  if (bias.shape() != Shape{4 * n}) shape_mismatch("lstm bias", bias.shape(), wh);
  const int steps = xs[0], d_in = xs[1], width = 4 * n;

  struct Cache {
    std::vector<T> gates;  // activated gate values per step, (steps, 4n)
    std::vector<T> cells;  // (steps, n)
  };
  auto cache = std::make_shared<Cache>();
  cache->gates.assign(static_cast<std::size_t>(steps) * width, T(0));
  cache->cells.assign(static_cast<std::size_t>(steps) * n, T(0));

  // Input projection for all steps at once.
  std::vector<T> z(static_cast<std::size_t>(steps) * width);
  for (int t = 0; t < steps; ++t) {
    std::copy(bias.value().data(), bias.value().data() + width,
              z.data() + static_cast<std::size_t>(t) * width);
  }
  kernels::parallel::gemm(false, false, steps, width, d_in, T(1), seq.value().data(), d_in,
                          input_weights.value().data(), width, T(1), z.data(), width);

  TensorT<T> out(Shape{steps, n});
  const T* whv = recurrent_weights.value().data();
  std::vector<T> c_prev(static_cast<std::size_t>(n), T(0));
  std::vector<T> h_prev(static_cast<std::size_t>(n), T(0));
  for (int k = 0; k < steps; ++k) {
    const int t = direction == Direction::forward ? k : steps - 1 - k;
    T* zt = z.data() + static_cast<std::size_t>(t) * width;
    for (int j = 0; j < n; ++j) {
      const T hj = h_prev[j];
      if (hj == T(0)) continue;
      const T* row = whv + static_cast<std::size_t>(j) * width;
      for (int q = 0; q < width; ++q) zt[q] += hj * row[q];
    }
    T* gt = cache->gates.data() + static_cast<std::size_t>(t) * width;
    T* ct = cache->cells.data() + static_cast<std::size_t>(t) * n;
    for (int j = 0; j < n; ++j) {
      const T i = sigmoid_value(zt[j]);
      const T f = sigmoid_value(zt[n + j]);
      const T cand = std::tanh(zt[2 * n + j]);
      const T o = sigmoid_value(zt[3 * n + j]);
      gt[j] = i;
      gt[n + j] = f;
      gt[2 * n + j] = cand;
      gt[3 * n + j] = o;
      ct[j] = f * c_prev[j] + i * cand;
      const T h = o * std::tanh(ct[j]);
      out.at(t, j) = h;
      c_prev[j] = ct[j];
      h_prev[j] = h;
    }
  }

  return seq.graph->record(
      "lstm", std::move(out), {seq.id, input_weights.id, recurrent_weights.id, bias.id},
      [cache, steps, d_in, n, width, direction](Graph<T>& gr, int self) {
        const auto& in = gr.inputs(self);
        const TensorT<T>& h = gr.value(self);
        const TensorT<T>& dh_out = gr.grad(self);
        const T* whv = gr.value(in[2]).data();
        std::vector<T> dz(static_cast<std::size_t>(steps) * width, T(0));
        std::vector<T> h_prev_all(static_cast<std::size_t>(steps) * n, T(0));
        std::vector<T> dh_next(static_cast<std::size_t>(n), T(0));
        std::vector<T> dc_next(static_cast<std::size_t>(n), T(0));
        for (int k = steps - 1; k >= 0; --k) {
          const int t = direction == Direction::forward ? k : steps - 1 - k;
          const int prev = direction == Direction::forward ? t - 1 : t + 1;
          const bool has_prev = k > 0;
          const T* gt = cache->gates.data() + static_cast<std::size_t>(t) * width;
          const T* ct = cache->cells.data() + static_cast<std::size_t>(t) * n;
          T* dzt = dz.data() + static_cast<std::size_t>(t) * width;
          for (int j = 0; j < n; ++j) {
            const T i = gt[j], f = gt[n + j], cand = gt[2 * n + j], o = gt[3 * n + j];
            const T c_prev = has_prev ? cache->cells[static_cast<std::size_t>(prev) * n + j] : T(0);
            if (has_prev) h_prev_all[static_cast<std::size_t>(t) * n + j] = h.at(prev, j);
            const T tc = std::tanh(ct[j]);
            const T dh = dh_out.at(t, j) + dh_next[j];
            const T d_o = dh * tc;
            const T dc = dh * o * (T(1) - tc * tc) + dc_next[j];
            const T di = dc * cand;
            const T dcand = dc * i;
            const T df = dc * c_prev;
            dc_next[j] = dc * f;
            dzt[j] = di * i * (T(1) - i);
            dzt[n + j] = df * f * (T(1) - f);
            dzt[2 * n + j] = dcand * (T(1) - cand * cand);
            dzt[3 * n + j] = d_o * o * (T(1) - o);
          }
          // dh_prev = dz_t * Wh^T
          for (int j = 0; j < n; ++j) {
            const T* row = whv + static_cast<std::size_t>(j) * width;
            T acc = 0;
            for (int q = 0; q < width; ++q) acc += dzt[q] * row[q];
            dh_next[j] = acc;
          }
        }
        if (gr.needs_grad(in[0])) {
          kernels::parallel::gemm(false, true, steps, d_in, width, T(1), dz.data(), width,
                                  gr.value(in[1]).data(), width, T(1), gr.grad(in[0]).data(), d_in);
        }
        if (gr.needs_grad(in[1])) {
          kernels::parallel::gemm(true, false, d_in, width, steps, T(1), gr.value(in[0]).data(),
                                  d_in, dz.data(), width, T(1), gr.grad(in[1]).data(), width);
        }
        if (gr.needs_grad(in[2])) {
          kernels::parallel::gemm(true, false, n, width, steps, T(1), h_prev_all.data(), n,
                                  dz.data(), width, T(1), gr.grad(in[2]).data(), width);
        }
        if (gr.needs_grad(in[3])) {
          T* db = gr.grad(in[3]).data();
          for (int t = 0; t < steps; ++t) {
            for (int q = 0; q < width; ++q) db[q] += dz[static_cast<std::size_t>(t) * width + q];
          }
        }
      });
}

template <class T>
std::vector<T> softmax_values(std::span<const T> logits) {
  std::vector<T> out(logits.begin(), logits.end());
  const T m = *std::max_element(out.begin(), out.end());
  T z = 0;
  for (T& v : out) {
    v = std::exp(v - m);
    z += v;
  }
  for (T& v : out) v /= z;
  return out;
}

template <class T>
std::vector<T> log_softmax_values(std::span<const T> logits) {
  std::vector<T> out(logits.begin(), logits.end());
  const T m = *std::max_element(out.begin(), out.end());
  T z = 0;
  for (T v : out) z += std::exp(v - m);
  const T lz = m + std::log(z);
  for (T& v : out) v -= lz;
  return out;
}

template <class T>
Var<T> softmax(Var<T> logits) {
  if (logits.value().rank() != 1) throw ShapeError("softmax expects a vector, got " + shape_string(logits.shape()));
  TensorT<T> out(logits.shape(), softmax_values<T>(logits.value().values()));
  return logits.graph->record("softmax", std::move(out), {logits.id}, [](Graph<T>& gr, int self) {
    const int x = gr.inputs(self)[0];
    if (!gr.needs_grad(x)) return;
    const TensorT<T>& y = gr.value(self);
    const TensorT<T>& dy = gr.grad(self);
    T dot = 0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += dy[i] * y[i];
    TensorT<T>& dx = gr.grad(x);
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += y[i] * (dy[i] - dot);
  });
}

template <class T>
Var<T> cross_entropy(Var<T> logits, int label) {
  const TensorT<T>& x = logits.value();
  if (x.rank() != 1) throw ShapeError("cross_entropy expects a vector, got " + shape_string(x.shape()));
  if (label < 0 || label >= static_cast<int>(x.size())) {
    throw std::out_of_range("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(x.size()) + ")");
  }
  const std::vector<T> lp = log_softmax_values<T>(x.values());
  return logits.graph->record(
      "cross_entropy", TensorT<T>::scalar(-lp[static_cast<std::size_t>(label)]), {logits.id},
      [label](Graph<T>& gr, int self) {
        const int xi = gr.inputs(self)[0];
        if (!gr.needs_grad(xi)) return;
        const T dy = gr.grad(self)[0];
        const std::vector<T> p = softmax_values<T>(gr.value(xi).values());
        TensorT<T>& dx = gr.grad(xi);
        for (std::size_t i = 0; i < p.size(); ++i) {
          dx[i] += dy * (p[i] - (static_cast<int>(i) == label ? T(1) : T(0)));
        }
      });
}

template <class T>
Var<T> concat_last(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_last: no inputs");
  Shape lead = parts[0].shape();
  lead.pop_back();
  std::vector<int> widths;
  int total = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    const int c = s.back();
    s.pop_back();
    if (s != lead) shape_mismatch("concat_last", parts[0].shape(), p.shape());
    widths.push_back(c);
    total += c;
  }
  Shape os = lead;
  os.push_back(total);
  TensorT<T> out(os);
  const std::size_t rows = shape_size(lead);
  int offset = 0;
  std::vector<int> ids;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const T* src = parts[k].value().data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(src + r * widths[k], src + (r + 1) * widths[k], out.data() + r * total + offset);
    }
    offset += widths[k];
    ids.push_back(parts[k].id);
  }
  return parts[0].graph->record("concat", std::move(out), std::move(ids),
                                [widths, rows, total](Graph<T>& gr, int self) {
                                  const TensorT<T>& dy = gr.grad(self);
                                  int off = 0;
                                  for (std::size_t k = 0; k < widths.size(); ++k) {
                                    const int id = gr.inputs(self)[k];
                                    if (gr.needs_grad(id)) {
                                      T* dx = gr.grad(id).data();
                                      for (std::size_t r = 0; r < rows; ++r) {
                                        for (int c = 0; c < widths[k]; ++c) {
                                          dx[r * widths[k] + c] += dy[r * total + off + c];
                                        }
                                      }
                                    }
                                    off += widths[k];
                                  }
                                });
}

template <class T>
Var<T> reshape(Var<T> input, Shape shape) {
  if (shape_size(shape) != input.value().size()) shape_mismatch("reshape", input.shape(), shape);
  return input.graph->record("reshape", input.value().reshaped(std::move(shape)), {input.id},
                             [](Graph<T>& gr, int self) {
                               const int x = gr.inputs(self)[0];
                               if (gr.needs_grad(x)) accumulate(gr.grad(x), gr.grad(self).reshaped(gr.value(x).shape()));
                             });
}

template <class T>
Var<T> columns_to_sequence(Var<T> input) {
  const Shape& s = input.shape();
  if (s.size() != 3) throw ShapeError("columns_to_sequence expects (h, w, c), got " + shape_string(s));
  const int h = s[0], w = s[1], c = s[2];
  TensorT<T> out(Shape{w, h * c});
  const TensorT<T>& x = input.value();
  for (int y = 0; y < h; ++y) {
    for (int col = 0; col < w; ++col) {
      for (int k = 0; k < c; ++k) out.at(col, y * c + k) = x.at(y, col, k);
    }
  }
  return input.graph->record("columns_to_sequence", std::move(out), {input.id},
                             [h, w, c](Graph<T>& gr, int self) {
                               const int xi = gr.inputs(self)[0];
                               if (!gr.needs_grad(xi)) return;
                               const TensorT<T>& dy = gr.grad(self);
                               TensorT<T>& dx = gr.grad(xi);
                               for (int y = 0; y < h; ++y) {
                                 for (int col = 0; col < w; ++col) {
                                   for (int k = 0; k < c; ++k) dx.at(y, col, k) += dy.at(col, y * c + k);
                                 }
                               }
                             });
}

template <class T>
Var<T> reduce_max_rows(Var<T> input) {
  const TensorT<T>& x = input.value();
  if (x.rank() != 2) throw ShapeError("reduce_max_rows expects (n, k), got " + shape_string(x.shape()));
  const int n = x.dim(0), k = x.dim(1);
  TensorT<T> out(Shape{k});
  std::vector<int> arg(static_cast<std::size_t>(k), 0);
  for (int j = 0; j < k; ++j) {
    T best = x.at(0, j);
    for (int i = 1; i < n; ++i) {
      if (x.at(i, j) > best) {
        best = x.at(i, j);
        arg[j] = i;
      }
    }
    out[j] = best;
  }
  return input.graph->record("reduce_max", std::move(out), {input.id},
                             [arg, k](Graph<T>& gr, int self) {
                               const int xi = gr.inputs(self)[0];
                               if (!gr.needs_grad(xi)) return;
                               TensorT<T>& dx = gr.grad(xi);
                               for (int j = 0; j < k; ++j) dx.at(arg[j], j) += gr.grad(self)[j];
                             });
}

template <class T>
Var<T> reduce_mean_rows(Var<T> input) {
  const TensorT<T>& x = input.value();
  if (x.rank() != 2) throw ShapeError("reduce_mean_rows expects (n, k), got " + shape_string(x.shape()));
  const int n = x.dim(0), k = x.dim(1);
  TensorT<T> out(Shape{k});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) out[j] += x.at(i, j);
  }
  for (int j = 0; j < k; ++j) out[j] /= static_cast<T>(n);
  return input.graph->record("reduce_mean", std::move(out), {input.id},
                             [n, k](Graph<T>& gr, int self) {
                               const int xi = gr.inputs(self)[0];
                               if (!gr.needs_grad(xi)) return;
                               TensorT<T>& dx = gr.grad(xi);
                               const TensorT<T>& dy = gr.grad(self);
                               for (int i = 0; i < n; ++i) {
                                 for (int j = 0; j < k; ++j) dx.at(i, j) += dy[j] / static_cast<T>(n);
                               }
                             });
}

template <class T>
Var<T> gated_mean_rows(Var<T> input, Var<T> gates, T eps) {
  const TensorT<T>& x = input.value();
  const TensorT<T>& g = gates.value();
  if (x.rank() != 2 || g.size() != static_cast<std::size_t>(x.dim(0))) {
    shape_mismatch("gated_mean_rows", x.shape(), g.shape());
  }
  const int n = x.dim(0), k = x.dim(1);
  T denom = eps;
  for (int i = 0; i < n; ++i) denom += g[i];
  TensorT<T> out(Shape{k});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) out[j] += g[i] * x.at(i, j);
  }
  for (int j = 0; j < k; ++j) out[j] /= denom;
  return input.graph->record(
      "gated_mean", std::move(out), {input.id, gates.id}, [n, k, denom](Graph<T>& gr, int self) {
        const int xi = gr.inputs(self)[0], gi = gr.inputs(self)[1];
        const TensorT<T>& dy = gr.grad(self);
        const TensorT<T>& f = gr.value(self);
        const TensorT<T>& xv = gr.value(xi);
        const TensorT<T>& gv = gr.value(gi);
        if (gr.needs_grad(xi)) {
          TensorT<T>& dx = gr.grad(xi);
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) dx.at(i, j) += dy[j] * gv[i] / denom;
          }
        }
        if (gr.needs_grad(gi)) {
          TensorT<T>& dg = gr.grad(gi);
          for (int i = 0; i < n; ++i) {
            T acc = 0;
            for (int j = 0; j < k; ++j) acc += dy[j] * (xv.at(i, j) - f[j]);
            dg[i] += acc / denom;
          }
        }
      });
}

template <class T>
Var<T> take_row(Var<T> input, int row) {
  const TensorT<T>& x = input.value();
  if (x.rank() != 2 || row < 0 || row >= x.dim(0)) {
    throw ShapeError("take_row " + std::to_string(row) + " from " + shape_string(x.shape()));
  }
  const int k = x.dim(1);
  TensorT<T> out(Shape{k});
  std::copy(x.data() + static_cast<std::size_t>(row) * k, x.data() + static_cast<std::size_t>(row + 1) * k, out.data());
  return input.graph->record("take_row", std::move(out), {input.id}, [row, k](Graph<T>& gr, int self) {
    const int xi = gr.inputs(self)[0];
    if (!gr.needs_grad(xi)) return;
    TensorT<T>& dx = gr.grad(xi);
    for (int j = 0; j < k; ++j) dx.at(row, j) += gr.grad(self)[j];
  });
}

template <class T>
Var<T> sum(Var<T> input) {
  T s = 0;
  for (T v : input.value().values()) s += v;
  return input.graph->record("sum", TensorT<T>::scalar(s), {input.id}, [](Graph<T>& gr, int self) {
    const int xi = gr.inputs(self)[0];
    if (!gr.needs_grad(xi)) return;
    const T dy = gr.grad(self)[0];
    for (T& v : gr.grad(xi).values()) v += dy;
  });
}

template <class T>
Var<T> weighted_sum(Var<T> input, const TensorT<T>& weights) {
  if (weights.size() != input.value().size()) shape_mismatch("weighted_sum", input.shape(), weights.shape());
  T s = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * input.value()[i];
  return input.graph->record("weighted_sum", TensorT<T>::scalar(s), {input.id},
                             [weights](Graph<T>& gr, int self) {
                               const int xi = gr.inputs(self)[0];
                               if (!gr.needs_grad(xi)) return;
                               const T dy = gr.grad(self)[0];
                               TensorT<T>& dx = gr.grad(xi);
                               for (std::size_t i = 0; i < weights.size(); ++i) dx[i] += dy * weights[i];
                             });
}

template <class T>
Var<T> scale(Var<T> input, T factor) {
  TensorT<T> out = input.value();
  for (T& v : out.values()) v *= factor;
  return input.graph->record("scale", std::move(out), {input.id}, [factor](Graph<T>& gr, int self) {
    const int xi = gr.inputs(self)[0];
    if (!gr.needs_grad(xi)) return;
    const TensorT<T>& dy = gr.grad(self);
    TensorT<T>& dx = gr.grad(xi);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += factor * dy[i];
  });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  if (a.shape() != b.shape()) shape_mismatch("add", a.shape(), b.shape());
  TensorT<T> out = a.value();
  accumulate(out, b.value());
  return a.graph->record("add", std::move(out), {a.id, b.id}, [](Graph<T>& gr, int self) {
    for (int xi : gr.inputs(self)) {
      if (gr.needs_grad(xi)) accumulate(gr.grad(xi), gr.grad(self));
    }
  });
}

#define SSID_INSTANTIATE(T)                                                                 \
  template T apply_activation<T>(Activation, T);                                          \
  template Var<T> conv2d<T>(Var<T>, Var<T>, Var<T>, int, int);                              \
  template Var<T> pool<T>(Var<T>, PoolKind, int, int, int, int);                            \
  template Var<T> activate<T>(Var<T>, Activation);                                          \
  template Var<T> fully_connected<T>(Var<T>, Var<T>, Var<T>, Activation);                   \
  template Var<T> lstm_sequence<T>(Var<T>, Var<T>, Var<T>, Var<T>, Direction);              \
  template Var<T> softmax<T>(Var<T>);                                                       \
  template Var<T> cross_entropy<T>(Var<T>, int);                                            \
  template Var<T> concat_last<T>(const std::vector<Var<T>>&);                               \
  template Var<T> reshape<T>(Var<T>, Shape);                                                \
  template Var<T> columns_to_sequence<T>(Var<T>);                                           \
  template Var<T> reduce_max_rows<T>(Var<T>);                                               \
  template Var<T> reduce_mean_rows<T>(Var<T>);                                              \
  template Var<T> gated_mean_rows<T>(Var<T>, Var<T>, T);                                    \
  template Var<T> take_row<T>(Var<T>, int);                                                 \
  template Var<T> sum<T>(Var<T>);                                                           \
  template Var<T> weighted_sum<T>(Var<T>, const TensorT<T>&);                               \
  template Var<T> scale<T>(Var<T>, T);                                                      \
  template Var<T> add<T>(Var<T>, Var<T>);                                                   \
  template std::vector<T> softmax_values<T>(std::span<const T>);                            \
  template std::vector<T> log_softmax_values<T>(std::span<const T>);

SSID_INSTANTIATE(float)
SSID_INSTANTIATE(double)
#undef SSID_INSTANTIATE

}  // namespace ssid
