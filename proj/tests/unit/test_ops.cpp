#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ssid/ops.hpp"
#include "ssid/optimizer.hpp"

using namespace ssid;
using doctest::Approx;

namespace {

TensorD filled(Shape s, double v) { return TensorD(std::move(s), v); }

}  // namespace

TEST_CASE("conv2d identity kernel") {
  Graph<double> g;
  auto x = g.input(filled({1, 1, 1}, 5));
  auto w = g.input(filled({1, 1, 1, 1}, 1));
  auto y = conv2d(x, w, Var<double>{}, 1, 1);
  CHECK(y.shape() == Shape{1, 1, 1});
  CHECK(y.value()[0] == 5);
}

TEST_CASE("conv2d SAME output extents") {
  Graph<double> g;
  auto x = g.input(TensorD(Shape{40, 100, 1}));
  auto w = g.input(TensorD(Shape{5, 5, 1, 16}));
  CHECK(conv2d(x, w, Var<double>{}, 2, 2).shape() == Shape{20, 50, 16});
}

TEST_CASE("conv2d SAME pads bottom and right") {
  Graph<double> g;
  auto x = g.input(filled({3, 3, 1}, 1));
  auto w = g.input(filled({2, 2, 1, 1}, 1));
  auto y = conv2d(x, w, Var<double>{}, 1, 1);
  CHECK(y.value().at(1, 1, 0) == 4);
  CHECK(y.value().at(2, 2, 0) == 1);
  CHECK(y.value().at(0, 0, 0) == 4);
}

TEST_CASE("conv2d rejects channel mismatch naming both shapes") {
  Graph<double> g;
  auto x = g.input(TensorD(Shape{4, 4, 2}));
  auto w = g.input(TensorD(Shape{3, 3, 3, 1}));
  try {
    conv2d(x, w, Var<double>{}, 1, 1);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(4, 4, 2)") != std::string::npos);
    CHECK(msg.find("(3, 3, 3, 1)") != std::string::npos);
  }
}

TEST_CASE("pool examples") {
  Graph<double> g;
  auto x = g.input(TensorD(Shape{2, 2, 1}, std::vector<double>{1, 2, 3, 4}));
  CHECK(pool(x, PoolKind::max, 2, 2, 2, 2).value()[0] == 4);
  CHECK(pool(x, PoolKind::avg, 2, 2, 2, 2).value()[0] == 2.5);
  auto row = g.input(TensorD(Shape{1, 3, 1}, std::vector<double>{3, 6, 9}));
  const auto avg = pool(row, PoolKind::avg, 1, 2, 1, 1).value();
  CHECK(avg[0] == 4.5);
  CHECK(avg[1] == 7.5);
  CHECK(avg[2] == 9);
}

TEST_CASE("max-pool gradient goes to the first maximum") {
  Graph<double> g;
  auto x = g.input(TensorD(Shape{2, 2, 1}, std::vector<double>{7, 7, 7, 7}), true);
  g.backward(sum(pool(x, PoolKind::max, 2, 2, 2, 2)));
  const TensorD& dx = g.grad(x.id);
  CHECK(dx[0] == 1);
  CHECK(dx[1] == 0);
  CHECK(dx[2] == 0);
  CHECK(dx[3] == 0);
}

TEST_CASE("activations") {
  CHECK(apply_activation(Activation::relu6, 7.0) == 6);
  CHECK(apply_activation(Activation::relu6, -1.0) == 0);
  CHECK(apply_activation(Activation::tanh, 0.0) == 0);
  CHECK(apply_activation(Activation::sigmoid, 0.0) == 0.5);
  CHECK(apply_activation(Activation::linear, -3.25) == -3.25);
  CHECK(parse_activation("relu6") == Activation::relu6);
  CHECK_THROWS(parse_activation("gelu"));
}

TEST_CASE("relu6 subgradient is zero at the kinks") {
  Graph<double> g;
  auto x = g.input(TensorD(Shape{3}, std::vector<double>{0, 6, 3}), true);
  g.backward(sum(activate(x, Activation::relu6)));
  CHECK(g.grad(x.id)[0] == 0);
  CHECK(g.grad(x.id)[1] == 0);
  CHECK(g.grad(x.id)[2] == 1);
}

TEST_CASE("fully_connected examples") {
  Graph<double> g;
  auto in = g.input(TensorD(Shape{2}, std::vector<double>{1, 2}));
  auto zero = fully_connected(in, g.input(TensorD(Shape{2, 3})), g.input(TensorD(Shape{3})), Activation::linear);
  for (double v : zero.value().values()) CHECK(v == 0);
  auto eye = g.input(TensorD(Shape{2, 2}, std::vector<double>{1, 0, 0, 1}));
  auto same = fully_connected(in, eye, g.input(TensorD(Shape{2})), Activation::linear);
  CHECK(same.value()[0] == 1);
  CHECK(same.value()[1] == 2);
  auto shifted = fully_connected(in, eye, g.input(TensorD(Shape{2}, 1.0)), Activation::linear);
  CHECK(shifted.value()[0] == 2);
  CHECK(shifted.value()[1] == 3);
  CHECK_THROWS_AS(fully_connected(in, g.input(TensorD(Shape{3, 2})), g.input(TensorD(Shape{2})), Activation::linear),
                  ShapeError);
}

namespace {

Var<double> run_lstm(Graph<double>& g, const TensorD& seq, double wx, double wh, double b, int n, Direction dir) {
  const int d = seq.dim(1);
  return lstm_sequence(g.input(seq), g.input(TensorD(Shape{d, 4 * n}, wx)), g.input(TensorD(Shape{n, 4 * n}, wh)),
                       g.input(TensorD(Shape{4 * n}, b)), dir);
}

double sig(double x) { return 1 / (1 + std::exp(-x)); }

}  // namespace

TEST_CASE("lstm with zero weights outputs zeros") {
  Graph<double> g;
  std::mt19937_64 rng(1);
  auto y = run_lstm(g, oracle::random_tensor({5, 3}, rng), 0, 0, 0, 4, Direction::forward);
  CHECK(y.shape() == Shape{5, 4});
  for (double v : y.value().values()) CHECK(v == 0);
}

TEST_CASE("lstm single step is direction independent") {
  Graph<double> g;
  std::mt19937_64 rng(2);
  const TensorD seq = oracle::random_tensor({1, 3}, rng);
  auto f = run_lstm(g, seq, 0.3, -0.2, 0.1, 2, Direction::forward);
  auto b = run_lstm(g, seq, 0.3, -0.2, 0.1, 2, Direction::backward);
  CHECK(f.value() == b.value());
}

TEST_CASE("lstm matches a hand-unrolled single-unit cell") {
  // Gates i, f, g, o with weights wx = [a_i, a_f, a_g, a_o], wh likewise.
  const double ax[4] = {0.5, -0.3, 0.8, 0.2}, ah[4] = {0.1, 0.4, -0.6, 0.3}, bb[4] = {0.0, 0.5, -0.1, 0.2};
  const double xs[2] = {1.0, -2.0};
  Graph<double> g;
  auto y = lstm_sequence(g.input(TensorD(Shape{2, 1}, std::vector<double>{xs[0], xs[1]})),
                         g.input(TensorD(Shape{1, 4}, std::vector<double>(ax, ax + 4))),
                         g.input(TensorD(Shape{1, 4}, std::vector<double>(ah, ah + 4))),
                         g.input(TensorD(Shape{4}, std::vector<double>(bb, bb + 4))), Direction::forward);
  double h = 0, c = 0, expect[2];
  for (int t = 0; t < 2; ++t) {
    const double i = sig(ax[0] * xs[t] + ah[0] * h + bb[0]);
    const double f = sig(ax[1] * xs[t] + ah[1] * h + bb[1]);
    const double cand = std::tanh(ax[2] * xs[t] + ah[2] * h + bb[2]);
    const double o = sig(ax[3] * xs[t] + ah[3] * h + bb[3]);
    c = f * c + i * cand;
    h = o * std::tanh(c);
    expect[t] = h;
  }
  CHECK(y.value()[0] == Approx(expect[0]).epsilon(1e-12));
  CHECK(y.value()[1] == Approx(expect[1]).epsilon(1e-12));

  // Backward direction: index 1 is consumed first, output index 0 is computed last.
  Graph<double> g2;
  auto yb = lstm_sequence(g2.input(TensorD(Shape{2, 1}, std::vector<double>{xs[1], xs[0]})),
                          g2.input(TensorD(Shape{1, 4}, std::vector<double>(ax, ax + 4))),
                          g2.input(TensorD(Shape{1, 4}, std::vector<double>(ah, ah + 4))),
                          g2.input(TensorD(Shape{4}, std::vector<double>(bb, bb + 4))), Direction::backward);
  CHECK(yb.value()[1] == Approx(expect[0]).epsilon(1e-12));
  CHECK(yb.value()[0] == Approx(expect[1]).epsilon(1e-12));
}

TEST_CASE("softmax examples") {
  const auto a = softmax_values<double>(std::vector<double>{0, 0});
  CHECK(a[0] == 0.5);
  const auto b = softmax_values<double>(std::vector<double>{1000, 0});
  CHECK(b[0] == Approx(1.0));
  CHECK(std::isfinite(b[1]));
  CHECK(b[1] < 1e-300);
  const auto c = softmax_values<double>(std::vector<double>{std::log(1.0), std::log(3.0)});
  CHECK(c[0] == Approx(0.25).epsilon(1e-12));
  CHECK(c[1] == Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax sums to one and is shift invariant") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-20, 20);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(1 + trial % 9));
    for (double& v : x) v = d(rng);
    const auto p = softmax_values<double>(x);
    double s = 0;
    for (double v : p) s += v;
    CHECK(std::abs(s - 1) <= 1e-6);
    const double shift = d(rng);
    for (double& v : x) v += shift;
    const auto q = softmax_values<double>(x);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-6);
  }
}

TEST_CASE("cross_entropy examples") {
  Graph<double> g;
  auto l0 = cross_entropy(g.input(TensorD(Shape{2}, std::vector<double>{0, 0})), 0);
  CHECK(l0.value()[0] == Approx(std::log(2.0)));
  auto l1 = cross_entropy(g.input(TensorD(Shape{2}, std::vector<double>{10, -10})), 0);
  CHECK(l1.value()[0] == Approx(0.0).epsilon(1e-8));
  auto l2 = cross_entropy(g.input(TensorD(Shape{2}, std::vector<double>{std::log(1.0), std::log(3.0)})), 1);
  CHECK(l2.value()[0] == Approx(-std::log(0.75)).epsilon(1e-12));
  CHECK_THROWS_AS(cross_entropy(g.input(TensorD(Shape{2})), 2), std::out_of_range);
  CHECK_THROWS_AS(cross_entropy(g.input(TensorD(Shape{2})), -1), std::out_of_range);
}

TEST_CASE("backward: sum gives all-ones, cross entropy gives softmax minus one-hot") {
  Graph<double> g;
  std::mt19937_64 rng(4);
  auto p = g.input(oracle::random_tensor({3, 2}, rng), true);
  g.backward(sum(p));
  for (double v : g.grad(p.id).values()) CHECK(v == 1);

  Graph<double> g2;
  const TensorD logits = oracle::random_tensor({5}, rng);
  auto x = g2.input(logits, true);
  g2.backward(cross_entropy(x, 3));
  const auto sm = softmax_values<double>(logits.values());
  for (int k = 0; k < 5; ++k) CHECK(g2.grad(x.id)[k] == Approx(sm[k] - (k == 3 ? 1 : 0)).epsilon(1e-12));
}

TEST_CASE("backward reports the node that produced a non-finite gradient") {
  Graph<double> g;
  auto x = g.input(TensorD(Shape{2}, std::vector<double>{1, 2}), true);
  auto y = g.record("poison", TensorD(Shape{1}, 0.0), {x.id}, [](Graph<double>& gr, int self) {
    gr.grad(gr.inputs(self)[0])[0] = std::nan("");
  });
  try {
    g.backward(y);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("input") != std::string::npos);
  }
}

TEST_CASE("adam examples") {
  ParamStore<double> ps;
  ps.add("w", TensorD(Shape{1}, 0.5));
  GradBuffer<double> gb(ps);
  Adam<double> zero_opt(ps, AdamConfig{});
  zero_opt.step(ps, gb);
  CHECK(ps.value(0)[0] == 0.5);

  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  Adam<double> opt(ps, cfg);
  gb[0][0] = 1;
  opt.step(ps, gb);
  CHECK(ps.value(0)[0] == Approx(0.4).epsilon(1e-6));
  CHECK(opt.steps() == 1);
  opt.step(ps, gb);
  CHECK(opt.steps() == 2);
}

TEST_CASE("adam is deterministic") {
  auto run = [] {
    ParamStore<float> ps;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> d(-1, 1);
    TensorT<float> w(Shape{4, 4});
    for (float& v : w.values()) v = d(rng);
    ps.add("w", w);
    Adam<float> opt(ps, AdamConfig{});
    GradBuffer<float> gb(ps);
    for (int s = 0; s < 10; ++s) {
      for (float& v : gb[0].values()) v = d(rng);
      opt.step(ps, gb);
    }
    return ps.value(0);
  };
  CHECK(run() == run());
}

TEST_CASE("shape law over random shapes") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> ext(1, 9), st(1, 3), k(1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = ext(rng), w = ext(rng), c = ext(rng), co = ext(rng), sh = st(rng), sw = st(rng);
    const int kh = k(rng), kw = k(rng);
    Graph<double> g;
    auto x = g.input(TensorD(Shape{h, w, c}));
    const Shape expect{ceil_div(h, sh), ceil_div(w, sw), co};
    CHECK(conv2d(x, g.input(TensorD(Shape{kh, kw, c, co})), g.input(TensorD(Shape{co})), sh, sw).shape() == expect);
    CHECK(pool(x, PoolKind::max, kh, kw, sh, sw).shape() == Shape{ceil_div(h, sh), ceil_div(w, sw), c});
    CHECK(pool(x, PoolKind::avg, kh, kw, sh, sw).shape() == Shape{ceil_div(h, sh), ceil_div(w, sw), c});
    CHECK(activate(x, Activation::tanh).shape() == x.shape());
    CHECK(columns_to_sequence(x).shape() == Shape{w, h * c});
  }
}

TEST_CASE("forward and backward are deterministic") {
  auto run = [] {
    std::mt19937_64 rng(6);
    Graph<double> g;
    auto x = g.input(oracle::random_tensor({6, 7, 2}, rng), true);
    auto w = g.input(oracle::random_tensor({3, 3, 2, 4}, rng), true);
    auto y = pool(activate(conv2d(x, w, Var<double>{}, 1, 2), Activation::relu6), PoolKind::avg, 2, 2, 2, 2);
    g.backward(sum(y));
    return std::make_pair(y.value(), g.grad(w.id));
  };
  CHECK(run() == run());
}
