#include <cmath>
#include <random>
#include <sstream>

#include "ctc_cases.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "ssid/ctc.hpp"

using namespace ssid;
using doctest::Approx;

namespace {

// Logits whose per-frame argmax follows `path`.
TensorD peaked(const std::vector<int>& path, int v) {
  TensorD t(Shape{static_cast<int>(path.size()), v}, 0.0);
  for (std::size_t i = 0; i < path.size(); ++i) t.at(static_cast<int>(i), path[i]) = 3;
  return t;
}

}  // namespace

TEST_CASE("alphabet") {
  SymbolAlphabet a({"x", "y"});
  CHECK(a.size() == 3);
  CHECK(a.index("y") == 2);
  CHECK(a.display(0) == "<blank>");
  CHECK_THROWS(SymbolAlphabet({"x", "x"}));
  CHECK_THROWS_AS(a.index("z"), std::out_of_range);
}

TEST_CASE("ctc loss examples") {
  const TensorD uniform(Shape{2, 2}, 0.0);
  CHECK(ctc_loss<double>(uniform, std::vector<int>{1}).loss == Approx(-std::log(0.75)).epsilon(1e-12));
  std::mt19937_64 rng(41);
  const TensorD logits = oracle::random_tensor({5, 4}, rng);
  const auto lp = oracle::log_probs(logits);
  double expect = 0;
  for (const auto& row : lp) expect -= row[0];
  CHECK(ctc_loss<double>(logits, std::vector<int>{}).loss == Approx(expect).epsilon(1e-12));
}

TEST_CASE("ctc feasibility") {
  CHECK(ctc_feasible(1, std::vector<int>{1}));
  CHECK_FALSE(ctc_feasible(1, std::vector<int>{1, 2}));
  CHECK(ctc_feasible(2, std::vector<int>{1, 2}));
  CHECK_FALSE(ctc_feasible(2, std::vector<int>{1, 1}));
  CHECK(ctc_feasible(3, std::vector<int>{1, 1}));
  CHECK_THROWS_AS(ctc_loss<double>(TensorD(Shape{2, 3}), std::vector<int>{1, 1}), CtcInfeasibleError);
  CHECK_THROWS(ctc_loss<double>(TensorD(Shape{3, 3}), std::vector<int>{3}));
  CHECK_THROWS(ctc_loss<double>(TensorD(Shape{3, 3}), std::vector<int>{0}));
}

TEST_CASE("ctc loss matches alignment enumeration") {
  const auto s = oracle::ctc_enumeration_cases(150, 42, 1e-9);
  INFO(s.first_failure);
  CHECK(s.failures == 0);
}

TEST_CASE("ctc gradient is softmax minus occupancy and sums to zero per frame") {
  std::mt19937_64 rng(43);
  const TensorD logits = oracle::random_tensor({6, 4}, rng);
  const auto r = ctc_loss<double>(logits, std::vector<int>{2, 1, 2});
  for (int t = 0; t < 6; ++t) {
    double s = 0;
    for (int k = 0; k < 4; ++k) s += r.grad.at(t, k);
    CHECK(std::abs(s) <= 1e-12);
  }
  const auto fd = oracle::check_gradients({logits},
                                          [](Graph<double>&, const std::vector<Var<double>>& v) {
                                            return ctc_loss(v[0], std::vector<int>{2, 1, 2});
                                          },
                                          40, rng);
  CHECK(fd.worst <= 1e-4);
}

TEST_CASE("ctc loss is covariant under alphabet relabeling") {
  std::mt19937_64 rng(44);
  const std::vector<int> perm{0, 3, 1, 2};  // blank stays at 0
  for (int trial = 0; trial < 50; ++trial) {
    const TensorD logits = oracle::random_tensor({6, 4}, rng);
    std::vector<int> label{1 + trial % 3, 1 + (trial / 3) % 3};
    TensorD relabeled(logits.shape());
    for (int t = 0; t < 6; ++t)
      for (int k = 0; k < 4; ++k) relabeled.at(t, perm[k]) = logits.at(t, k);
    std::vector<int> mapped;
    for (int c : label) mapped.push_back(perm[c]);
    CHECK(ctc_loss<double>(logits, label).loss == ctc_loss<double>(relabeled, mapped).loss);
  }
}

TEST_CASE("greedy decode examples") {
  // a = 1, b = 2
  CHECK(ctc_greedy_decode(peaked({1, 1, 0, 1}, 3)) == std::vector<int>{1, 1});
  CHECK(ctc_greedy_decode(peaked({0, 0, 0}, 3)).empty());
  CHECK(ctc_greedy_decode(peaked({0, 2, 2, 0, 2, 1}, 3)) == std::vector<int>{2, 2, 1});
}

TEST_CASE("greedy decode equals beam width 1 without prior or LM") {
  std::mt19937_64 rng(45);
  const DecodeWeights optical_only{1, 0, 0};
  for (int trial = 0; trial < 300; ++trial) {
    const TensorD logits = oracle::random_tensor({1 + trial % 9, 2 + trial % 4}, rng);
    CHECK(ctc_greedy_decode(logits) == beam_decode<double>(logits, nullptr, nullptr, optical_only, 1));
  }
}

TEST_CASE("beam decode examples") {
  const DecodeWeights optical_only{1, 0, 0};
  TensorD one(Shape{1, 3}, std::vector<double>{0.1, 2.0, 0.5});
  CHECK(beam_decode<double>(one, nullptr, nullptr, optical_only, 3) == std::vector<int>{1});
  TensorD blank(Shape{1, 3}, std::vector<double>{2.0, 0.1, 0.5});
  CHECK(beam_decode<double>(blank, nullptr, nullptr, optical_only, 3).empty());

  const NGramLM lm = NGramLM::fit({{1, 2}}, 2, 1e-3, 3);
  const TensorD uniform(Shape{4, 3}, 0.0);
  CHECK(beam_decode<double>(uniform, &lm, nullptr, DecodeWeights{1, 0, 10}, 8) == std::vector<int>{1, 2});
}

TEST_CASE("unbounded beam matches exhaustive transcript scoring") {
  const auto s = oracle::beam_exhaustive_cases(120, 46);
  INFO(s.first_mismatch);
  CHECK(s.mismatches == 0);
}

TEST_CASE("ngram examples") {
  const NGramLM lm = NGramLM::fit({{1, 2}, {1, 2}}, 2, 1e-9, 3);
  const std::vector<int> a{1};
  CHECK(std::exp(lm.cond_logprob(a, 2)) == Approx(1.0).epsilon(1e-6));
  const std::vector<int> none{}, ab{1, 2};
  CHECK(lm.logprob(ab) == Approx(lm.cond_logprob(none, 1) + lm.cond_logprob(a, 2) + lm.cond_logprob(ab, NGramLM::kEnd)));
  CHECK_THROWS(NGramLM::fit({}, 2, 0.1, 3));
  CHECK_THROWS(NGramLM(0, 0.1, 3));
  CHECK_THROWS(NGramLM(2, 0.0, 3));

  // Unigram: smoothed frequencies over symbols plus the end marker.
  const NGramLM uni = NGramLM::fit({{1, 1, 2}}, 1, 0.5, 3);
  CHECK(std::exp(uni.cond_logprob(none, 1)) == Approx((2 + 0.5) / (4 + 1.5)));
  CHECK(std::exp(uni.cond_logprob(none, NGramLM::kEnd)) == Approx((1 + 0.5) / (4 + 1.5)));
}

TEST_CASE("ngram distributions normalize") {
  std::mt19937_64 rng(47);
  for (int order = 1; order <= 3; ++order) {
    std::vector<std::vector<int>> corpus;
    for (int i = 0; i < 5; ++i) {
      std::vector<int> line;
      for (int j = 0; j < 1 + i % 3; ++j) line.push_back(1 + static_cast<int>(rng() % 2));
      corpus.push_back(line);
    }
    const NGramLM lm = NGramLM::fit(corpus, order, 0.3, 3);
    double total = 0;
    for (int len = 0; len <= 3; ++len) {
      oracle::for_each_path(len, 2, [&](const std::vector<int>& p) {
        std::vector<int> y;
        for (int c : p) y.push_back(c + 1);
        double prefix = 0;
        for (std::size_t i = 0; i < y.size(); ++i)
          prefix += lm.cond_logprob(std::span<const int>(y.data(), i), y[i]);
        if (len == 3) {
          total += std::exp(prefix);
        } else {
          CHECK(lm.logprob(y) <= 0);
          total += std::exp(lm.logprob(y));
        }
      });
    }
    CHECK(total == Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("ngram text round trip") {
  const SymbolAlphabet alpha({"p", "q"});
  const NGramLM lm = NGramLM::fit({{1, 2, 2}, {2}}, 3, 0.25, 3);
  std::stringstream ss;
  lm.save(ss, alpha);
  CHECK(ss.str().rfind("NGLM1 N=3 k=0.25", 0) == 0);
  CHECK(NGramLM::load(ss, alpha) == lm);
}

TEST_CASE("grapheme prior examples") {
  GraphemePrior p{{0.5, 0.5}, 0.9, 0.0};
  p.update(std::vector<double>{1, 0});
  CHECK(p.probs[0] == Approx(0.55));
  CHECK(p.probs[1] == Approx(0.45));

  GraphemePrior same{{0.7, 0.3}, 1.0, 0.0};
  same.update(std::vector<double>{0, 1});
  CHECK(same.probs[0] == Approx(0.7));

  GraphemePrior fresh{{0.9, 0.05, 0.05}, 0.0, 0.0};
  fresh.update(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  for (double v : fresh.probs) CHECK(v == Approx(1.0 / 3));

  GraphemePrior floored{{0.5, 0.5}, 0.0, 0.01};
  floored.update(std::vector<double>{1, 0});
  CHECK(floored.probs[1] >= 0.01 / (1 + 0.01) - 1e-15);
  double s = 0;
  for (double v : floored.probs) s += v;
  CHECK(s == Approx(1.0));

  const auto u = GraphemePrior::uniform(4);
  CHECK(u.symbol_logprob(1) == Approx(std::log(1.0 / 3)));
}
