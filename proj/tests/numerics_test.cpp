#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "safe/adam.hpp"
#include "safe/ops.hpp"
#include "safe/tensor.hpp"
#include "support/grad_check.hpp"

using namespace safe;
using testsupport::grad_check;
using testsupport::random_tensor;

namespace {

// Weighted-sum reduction so gradients are not uniform across components.
Tensor weighted_sum(const Tensor& y, const Tensor& w) { return sum(mul(y, w)); }

// Push values away from zero so relu/max finite differences stay one-sided.
Tensor nudged(Tensor t, double margin) {
  for (Index i = 0; i < t.size(); ++i) {
    double& x = t.value()[i];
    if (std::abs(x) < margin) x = x >= 0 ? x + margin : x - margin;
  }
  return t;
}

double shannon_entropy(const Tensor& p) {
  double h = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    const double v = p.value()[i];
    if (v > 0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace

TEST_CASE("matmul analytic examples") {
  auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  auto m = Tensor::from({2, 2}, {5, 6, 7, 8});
  auto r = matmul(eye, m);
  for (Index i = 0; i < 4; ++i) CHECK(r.value()[i] == doctest::Approx(m.value()[i]));

  auto a = Tensor::from({1, 2}, {1, 2});
  auto b = Tensor::from({2, 1}, {3, 4});
  CHECK(matmul(a, b).item() == doctest::Approx(11.0));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({4, 2});
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[4x2]") != std::string::npos);
  }
}

TEST_CASE("matmul gradient vs finite differences") {
  std::mt19937_64 rng(11);
  auto a = random_tensor({4, 3}, rng);
  auto b = random_tensor({3, 2}, rng);
  auto res = grad_check([&] { return sum(matmul(a, b)); }, {a, b});
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("softmax_t analytic examples") {
  auto z = Tensor::from({2}, {0, 0});
  auto p = softmax_t(z, 1.0);
  CHECK(p.value()[0] == doctest::Approx(0.5));
  CHECK(p.value()[1] == doctest::Approx(0.5));

  auto l2 = Tensor::from({2}, {std::log(2.0), 0.0});
  auto p2 = softmax_t(l2, 1.0);
  CHECK(p2.value()[0] == doctest::Approx(2.0 / 3.0));
  CHECK(p2.value()[1] == doctest::Approx(1.0 / 3.0));

  auto hot = Tensor::from({2}, {1, 3});
  auto soft = softmax_t(hot, 1000.0);
  CHECK(std::abs(soft.value()[0] - 0.5) < 1e-3);
  CHECK(std::abs(soft.value()[1] - 0.5) < 1e-3);
}

TEST_CASE("softmax_t rows sum to one within 1e-12") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_tensor({4, 7}, rng, 10.0, false);
    auto p = softmax_t(x, 0.25 + trial * 0.5);
    auto pm = p.mat();
    for (Index i = 0; i < 4; ++i)
      CHECK(std::abs(pm.row(i).sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("softmax_t entropy is non-decreasing in temperature") {
  auto logits = Tensor::from({3}, {0.3, -1.2, 2.0});
  double prev = -1.0;
  for (double t : {0.25, 0.5, 1.0, 2.0, 5.0, 50.0, 1000.0}) {
    const double h = shannon_entropy(softmax_t(logits, t));
    CHECK(h >= prev - 1e-12);
    prev = h;
  }
}

TEST_CASE("softmax_t rejects non-positive temperature") {
  auto x = Tensor::from({2}, {1, 2});
  CHECK_THROWS_AS(softmax_t(x, 0.0), ConfigError);
  CHECK_THROWS_AS(softmax_t(x, -1.0), ConfigError);
}

TEST_CASE("cross_entropy analytic examples") {
  auto p0 = Tensor::from({1, 2}, {1, 0});
  CHECK(cross_entropy(p0, {0}).item() == doctest::Approx(0.0));

  auto ph = Tensor::from({1, 2}, {0.5, 0.5});
  CHECK(cross_entropy(ph, {1}).item() == doctest::Approx(std::log(2.0)));
}

TEST_CASE("cross_entropy rejects bad labels and clamps zero probability") {
  auto p = Tensor::from({1, 2}, {0.5, 0.5});
  CHECK_THROWS_AS(cross_entropy(p, {2}), DataError);
  CHECK_THROWS_AS(cross_entropy(p, {-1}), DataError);

  auto zero = Tensor::from({1, 2}, {0.0, 1.0});
  const double loss = cross_entropy(zero, {0}).item();
  CHECK(loss == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("cross_entropy gradient vs finite differences on a batch of 8") {
  std::mt19937_64 rng(17);
  auto logits = random_tensor({8, 2}, rng);
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) labels.push_back(static_cast<int>(rng() % 2));
  auto res = grad_check(
      [&] { return cross_entropy(softmax_t(logits, 1.0), labels); }, {logits});
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("kl_div identity and analytic examples") {
  auto p = Tensor::from({1, 2}, {0.3, 0.7});
  CHECK(kl_div(p, p).item() == 0.0);  // exact for same storage

  auto u = Tensor::from({1, 2}, {0.5, 0.5});
  auto onehot = Tensor::from({1, 2}, {1.0, 0.0});
  CHECK(kl_div(u, onehot).item() == doctest::Approx(std::log(2.0)));
}

TEST_CASE("kl_div non-negative over 1000 seeded pairs") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const double pv = 0.001 + 0.998 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    const double qv = 0.001 + 0.998 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    auto p = Tensor::from({1, 2}, {pv, 1.0 - pv});
    auto q = Tensor::from({1, 2}, {qv, 1.0 - qv});
    CHECK(kl_div(p, q).item() >= -1e-12);
  }
}

TEST_CASE("kl_div rejects rows not summing to one") {
  auto p = Tensor::from({1, 2}, {0.5, 0.6});
  auto q = Tensor::from({1, 2}, {0.5, 0.5});
  CHECK_THROWS_AS(kl_div(p, q), DataError);
  CHECK_THROWS_AS(kl_div(q, p), DataError);
}

TEST_CASE("kl_div gradient flows through p only") {
  std::mt19937_64 rng(29);
  auto pl = random_tensor({3, 2}, rng);
  auto ql = random_tensor({3, 2}, rng);
  auto loss = kl_div(softmax_t(pl, 1.0), softmax_t(ql, 1.0));
  backward(loss);
  CHECK(pl.has_grad());
  CHECK_FALSE(ql.has_grad());

  auto res = grad_check(
      [&] { return kl_div(softmax_t(pl, 1.0), softmax_t(ql, 1.0).detach()); }, {pl});
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("backward fills ones for sum and doubles for square") {
  auto x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  backward(sum(x));
  for (Index i = 0; i < 6; ++i) CHECK(x.grad()[i] == doctest::Approx(1.0));

  auto y = Tensor::from({2}, {1, 2}, true);
  backward(sum(mul(y, y)));
  CHECK(y.grad()[0] == doctest::Approx(2.0));
  CHECK(y.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward rejects non-scalar loss") {
  auto x = Tensor::zeros({2, 2}, true);
  CHECK_THROWS_AS(backward(add(x, x)), ShapeError);
}

TEST_CASE("backward accumulates additively without zero_grad") {
  auto x = Tensor::from({3}, {1, 2, 3}, true);
  auto loss = sum(x);
  backward(loss);
  backward(loss);
  for (Index i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(2.0));
  x.zero_grad();
  backward(loss);
  for (Index i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(1.0));
}

TEST_CASE("elementwise and shaping kernels match finite differences") {
  std::mt19937_64 rng(41);
  for (int seed = 0; seed < 5; ++seed) {
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({3, 4}, rng);
    auto w = random_tensor({3, 4}, rng, 1.0, false);

    CHECK(grad_check([&] { return weighted_sum(add(a, b), w); }, {a, b}).max_rel_err < 1e-4);
    CHECK(grad_check([&] { return weighted_sum(sub(a, b), w); }, {a, b}).max_rel_err < 1e-4);
    CHECK(grad_check([&] { return weighted_sum(mul(a, b), w); }, {a, b}).max_rel_err < 1e-4);
    CHECK(grad_check([&] { return weighted_sum(neg(a), w); }, {a}).max_rel_err < 1e-4);
    CHECK(grad_check([&] { return weighted_sum(scale(a, -1.7), w); }, {a}).max_rel_err < 1e-4);
    CHECK(grad_check([&] { return weighted_sum(safe::tanh(a), w); }, {a}).max_rel_err < 1e-4);

    auto ar = nudged(random_tensor({3, 4}, rng), 1e-3);
    CHECK(grad_check([&] { return weighted_sum(relu(ar), w); }, {ar}).max_rel_err < 1e-4);

    auto row = random_tensor({4}, rng);
    CHECK(grad_check([&] { return weighted_sum(broadcast_add(a, row), w); }, {a, row})
              .max_rel_err < 1e-4);

    auto t = random_tensor({2, 5}, rng);
    auto wt = random_tensor({5, 2}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(transpose(t), wt); }, {t}).max_rel_err < 1e-4);

    auto w0 = random_tensor({1, 4}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(mean_axis(a, 0), w0); }, {a}).max_rel_err < 1e-4);
    auto w1 = random_tensor({3, 1}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(mean_axis(a, 1), w1); }, {a}).max_rel_err < 1e-4);

    auto c1 = random_tensor({2, 4}, rng);
    auto c2 = random_tensor({3, 4}, rng);
    auto wc = random_tensor({5, 4}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(concat({c1, c2}, 0), wc); }, {c1, c2})
              .max_rel_err < 1e-4);
    auto d1 = random_tensor({3, 2}, rng);
    auto wd = random_tensor({3, 6}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(concat({a.detach(), d1}, 1), wd); }, {d1})
              .max_rel_err < 1e-4);

    auto ws = random_tensor({2, 4}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(slice_rows(a, 1, 3), ws); }, {a}).max_rel_err < 1e-4);
    auto wsc = random_tensor({3, 2}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(slice_cols(a, 1, 3), wsc); }, {a}).max_rel_err < 1e-4);
  }
}

TEST_CASE("structured kernels match finite differences") {
  std::mt19937_64 rng(43);
  for (int seed = 0; seed < 5; ++seed) {
    auto table = random_tensor({7, 3}, rng);
    std::vector<std::int64_t> ids{0, 3, 3, 6, 1};
    auto we = random_tensor({5, 3}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(embedding(table, ids), we); }, {table})
              .max_rel_err < 1e-4);

    auto x = random_tensor({6, 3}, rng);
    auto w = random_tensor({2 * 3, 4}, rng);
    auto b = random_tensor({4}, rng);
    auto wo = random_tensor({5, 4}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(conv1d(x, w, b, 2), wo); }, {x, w, b})
              .max_rel_err < 1e-4);

    auto mx = nudged(random_tensor({5, 3}, rng), 1e-3);
    auto wm = random_tensor({1, 3}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(max_over_time(mx), wm); }, {mx})
              .max_rel_err < 1e-4);

    auto ln_x = random_tensor({4, 6}, rng);
    auto gamma = random_tensor({6}, rng);
    auto beta = random_tensor({6}, rng);
    auto wl = random_tensor({4, 6}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(layer_norm(ln_x, gamma, beta), wl); },
                     {ln_x, gamma, beta})
              .max_rel_err < 1e-4);

    auto sx = random_tensor({3, 5}, rng);
    auto wsm = random_tensor({3, 5}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(softmax_t(sx, 2.0), wsm); }, {sx})
              .max_rel_err < 1e-4);

    auto q = random_tensor({4, 6}, rng);
    auto k = random_tensor({4, 6}, rng);
    auto v = random_tensor({4, 6}, rng);
    auto wa = random_tensor({4, 6}, rng, 1.0, false);
    CHECK(grad_check([&] { return weighted_sum(attention_core(q, k, v, 2), wa); }, {q, k, v})
              .max_rel_err < 1e-4);

    auto dx = random_tensor({4, 4}, rng);
    auto wdr = random_tensor({4, 4}, rng, 1.0, false);
    CHECK(grad_check(
              [&] {
                std::mt19937_64 mask_rng(99);  // same mask on every forward
                return weighted_sum(dropout(dx, 0.5, mask_rng, true), wdr);
              },
              {dx})
              .max_rel_err < 1e-4);
  }
}

TEST_CASE("attention rows sum to one") {
  std::mt19937_64 rng(47);
  auto q = random_tensor({5, 8}, rng, 2.0, false);
  auto k = random_tensor({5, 8}, rng, 2.0, false);
  auto v = random_tensor({5, 8}, rng, 2.0, false);
  std::vector<Mat> probs;
  attention_core(q, k, v, 4, &probs);
  REQUIRE(probs.size() == 4);
  for (const auto& p : probs)
    for (Index i = 0; i < p.rows(); ++i)
      CHECK(std::abs(p.row(i).sum() - 1.0) <= 1e-9);
}

TEST_CASE("dropout eval mode is identity and train mode rescales") {
  std::mt19937_64 rng(53);
  auto x = Tensor::from({2, 2}, {1, 2, 3, 4});
  auto e = dropout(x, 0.5, rng, false);
  CHECK(e.node().get() == x.node().get());

  // Expected value of the kept mass equals the input in the mean.
  double acc = 0.0;
  const int trials = 4000;
  for (int i = 0; i < trials; ++i) acc += dropout(x, 0.5, rng, true).value()[0];
  CHECK(acc / trials == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("adam leaves parameters untouched with zero gradients") {
  ParamMap params;
  params["w"] = Tensor::from({2}, {1.5, -2.5}, true);
  backward(scale(sum(params["w"]), 0.0));  // populates zero grads
  AdamState st;
  st.lr = 0.1;
  adam_step(params, st);
  CHECK(params["w"].value()[0] == doctest::Approx(1.5));
  CHECK(params["w"].value()[1] == doctest::Approx(-2.5));
  CHECK(st.step == 1);
}

TEST_CASE("adam first step matches the hand-evaluated recurrence") {
  ParamMap params;
  params["p"] = Tensor::from({1}, {1.0}, true);
  backward(sum(params["p"]));  // grad = 1
  AdamState st;
  st.lr = 0.1;
  adam_step(params, st);
  // m=0.1, v=0.001, mhat=1, vhat=1 -> p = 1 - 0.1/(1+eps)
  const double expected = 1.0 - 0.1 * 1.0 / (std::sqrt(1.0) + 1e-8);
  CHECK(params["p"].value()[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(params["p"].value()[0] - 0.9) < 1e-6);
}

TEST_CASE("adam requires populated gradients") {
  ParamMap params;
  params["p"] = Tensor::from({1}, {1.0}, true);
  AdamState st;
  CHECK_THROWS_AS(adam_step(params, st), InternalError);
}

TEST_CASE("adam is deterministic across identical runs") {
  auto run = [] {
    std::mt19937_64 rng(7);
    ParamMap params;
    params["w"] = testsupport::random_tensor({4, 4}, rng);
    params["b"] = testsupport::random_tensor({4}, rng);
    AdamState st;
    st.lr = 1e-2;
    for (int step = 0; step < 25; ++step) {
      auto x = testsupport::random_tensor({4, 4}, rng, 1.0, false);
      auto y = broadcast_add(matmul(x, params["w"]), params["b"]);
      backward(sum(mul(y, y)));
      adam_step(params, st);
      zero_grads(params);
    }
    return std::make_pair(params["w"].value(), params["b"].value());
  };
  auto [w1, b1] = run();
  auto [w2, b2] = run();
  for (Index i = 0; i < w1.size(); ++i) CHECK(w1[i] == w2[i]);
  for (Index i = 0; i < b1.size(); ++i) CHECK(b1[i] == b2[i]);
}
