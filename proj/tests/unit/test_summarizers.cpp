#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ssid/summarizer.hpp"

using namespace ssid;
using doctest::Approx;

namespace {

const TensorD kL(Shape{2, 2}, std::vector<double>{1, 3, 5, 1});

HeadConfig small_head(int kernel_width = 3) {
  HeadConfig h;
  h.kernel_width = kernel_width;
  h.channels = 8;
  h.lstm_units = 5;
  h.fc_units = 6;
  return h;
}

ParamStore<double> head_params(SummarizerKind kind, int d, int ns, const HeadConfig& h, std::uint64_t seed,
                               bool zero = false) {
  ParamStore<double> ps;
  std::mt19937_64 rng(seed);
  init_summarizer(ps, rng, kind, d, ns, h);
  if (zero)
    for (int i = 0; i < ps.size(); ++i) ps.value(i).fill(0);
  return ps;
}

TensorD run(const ParamStore<double>& ps, const TensorD& h, const std::function<Var<double>(Var<double>)>& f) {
  Graph<double> g(&ps);
  return f(g.input(h)).value();
}

}  // namespace

TEST_CASE("summarizer examples") {
  CHECK(summarize_max(kL) == std::vector<double>{5, 3});
  CHECK(summarize_mean(kL) == std::vector<double>{3, 2});
  const std::vector<double> g{1, 0};
  const auto gate = summarize_gate(kL, g, 0.0);
  CHECK(gate == std::vector<double>{1, 3});
  const std::vector<double> eq{0.3, 0.3};
  const auto same = summarize_gate(kL, eq, 1e-8);
  CHECK(same[0] == Approx(3).epsilon(1e-7));
  CHECK(same[1] == Approx(2).epsilon(1e-7));
}

TEST_CASE("graph reductions agree with the plain algebra") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 7;
    const TensorD l = oracle::random_tensor({n, 4}, rng, -5, 5);
    const TensorD gates = oracle::random_tensor({n, 1}, rng, 0.01, 1);
    Graph<double> g;
    auto x = g.input(l);
    const auto mx = reduce_max_rows(x).value(), mn = reduce_mean_rows(x).value();
    const auto gt = gated_mean_rows(x, g.input(gates), 1e-8).value();
    const auto rm = summarize_max(l), rn = summarize_mean(l), rg = summarize_gate(l, gates.values(), 1e-8);
    for (int k = 0; k < 4; ++k) {
      CHECK(mx[k] == rm[k]);
      CHECK(mn[k] == Approx(rn[k]).epsilon(1e-12));
      CHECK(gt[k] == Approx(rg[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero parameters give zero logits, half gates and a uniform posterior") {
  const HeadConfig h = small_head();
  std::mt19937_64 rng(32);
  const TensorD feats = oracle::random_tensor({6, 5}, rng, -1, 1);
  const auto ps = head_params(SummarizerKind::gate, 5, 4, h, 1, true);
  const TensorD l = run(ps, feats, [&](Var<double> v) { return frame_logits(v, h); });
  CHECK(l.shape() == Shape{6, 4});
  for (double v : l.values()) CHECK(v == 0);
  const TensorD gates = run(ps, feats, [&](Var<double> v) { return gate_weights(v, h); });
  for (double v : gates.values()) CHECK(v == 0.5);
  for (auto kind : {SummarizerKind::max, SummarizerKind::mean, SummarizerKind::gate, SummarizerKind::lstm}) {
    const auto zp = head_params(kind, 5, 4, h, 2, true);
    const TensorD s = run(zp, feats, [&](Var<double> v) { return summarize(v, kind, h); });
    const auto post = make_posterior(s.values());
    for (double p : post.probabilities) CHECK(p == Approx(0.25));
  }
}

TEST_CASE("single frame input") {
  const HeadConfig h = small_head();
  std::mt19937_64 rng(33);
  const auto ps = head_params(SummarizerKind::lstm, 5, 3, h, 3);
  const TensorD one = oracle::random_tensor({1, 5}, rng);
  for (auto kind : {SummarizerKind::lstm}) {
    CHECK(run(ps, one, [&](Var<double> v) { return summarize(v, kind, h); }).shape() == Shape{3});
  }
  const auto mp = head_params(SummarizerKind::max, 5, 3, h, 3);
  CHECK(run(mp, one, [&](Var<double> v) { return frame_logits(v, h); }).shape() == Shape{1, 3});
}

TEST_CASE("kernel width 1 makes the frame head a per-frame map") {
  const HeadConfig h = small_head(1);
  std::mt19937_64 rng(34);
  const auto ps = head_params(SummarizerKind::max, 5, 3, h, 4);
  const TensorD feats = oracle::random_tensor({7, 5}, rng);
  std::vector<int> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  TensorD permuted(feats.shape());
  for (int i = 0; i < 7; ++i)
    for (int k = 0; k < 5; ++k) permuted.at(i, k) = feats.at(perm[i], k);
  const TensorD a = run(ps, feats, [&](Var<double> v) { return frame_logits(v, h); });
  const TensorD b = run(ps, permuted, [&](Var<double> v) { return frame_logits(v, h); });
  for (int i = 0; i < 7; ++i)
    for (int k = 0; k < 3; ++k) CHECK(b.at(i, k) == Approx(a.at(perm[i], k)).epsilon(1e-12));
}

TEST_CASE("gates rise monotonically with the gate bias and stay in (0,1)") {
  const HeadConfig h = small_head();
  std::mt19937_64 rng(35);
  auto ps = head_params(SummarizerKind::gate, 5, 3, h, 5);
  const TensorD feats = oracle::random_tensor({6, 5}, rng);
  double prev = 0;
  for (double bias : {-4.0, 0.0, 2.0, 6.0, 12.0}) {
    ps.value("sum/gate/proj/b")[0] = bias;
    const TensorD g = run(ps, feats, [&](Var<double> v) { return gate_weights(v, h); });
    for (double x : g.values()) {
      CHECK(x > 0);
      CHECK(x < 1);
    }
    CHECK(g[0] > prev);
    prev = g[0];
  }
  CHECK(prev > 0.99);
}

TEST_CASE("summarizer properties over random logit sequences") {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 12, k = 1 + trial % 5;
    const TensorD l = oracle::random_tensor({n, k}, rng, -10, 10);
    const auto mx = summarize_max(l), mn = summarize_mean(l);
    for (int s = 0; s < k; ++s) CHECK(mx[s] >= mn[s]);

    // Exact identity without the guard; with it, within |F| eps / (n c).
    const double c = std::uniform_real_distribution<double>(0.01, 1)(rng);
    const std::vector<double> constant(static_cast<std::size_t>(n), c);
    const auto exact = summarize_gate(l, constant, 0.0), guarded = summarize_gate(l, constant, 1e-8);
    for (int s = 0; s < k; ++s) {
      CHECK(std::abs(exact[s] - mn[s]) <= 1e-6);
      CHECK(std::abs(guarded[s] - mn[s]) <= std::abs(mn[s]) * 1e-8 / (n * c) + 1e-12);
    }

    std::vector<double> g(static_cast<std::size_t>(n));
    for (double& x : g) x = std::uniform_real_distribution<double>(0.01, 1)(rng);
    std::vector<double> g2 = g;
    for (double& x : g2) x *= 3.5;
    const auto a = summarize_gate(l, g, 1e-8), b = summarize_gate(l, g2, 1e-8);
    for (int s = 0; s < k; ++s) CHECK(std::abs(a[s] - b[s]) <= 1e-6);

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    TensorD p(l.shape());
    for (int i = 0; i < n; ++i)
      for (int s = 0; s < k; ++s) p.at(i, s) = l.at(perm[i], s);
    CHECK(summarize_max(p) == mx);
    const auto pm = summarize_mean(p);
    for (int s = 0; s < k; ++s) CHECK(std::abs(pm[s] - mn[s]) <= 1e-9);

    const auto post = make_posterior(mx);
    double sum = 0;
    for (double x : post.probabilities) sum += x;
    CHECK(std::abs(sum - 1) <= 1e-6);
    CHECK(post.best() == static_cast<int>(std::max_element(mx.begin(), mx.end()) - mx.begin()));
  }
}

TEST_CASE("summarize rejects unknown kinds by name") {
  CHECK(parse_summarizer("gate") == SummarizerKind::gate);
  CHECK_THROWS(parse_summarizer("attention"));
}
