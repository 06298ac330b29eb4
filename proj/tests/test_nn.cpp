#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bevdrive/nn/adam.hpp"
#include "bevdrive/nn/checkpoint.hpp"
#include "bevdrive/nn/gradcheck.hpp"
#include "bevdrive/nn/layers.hpp"
#include "bevdrive/nn/loss.hpp"

using namespace bevdrive;
using namespace bevdrive::nn;

TEST_CASE("conv2d: 1x1 identity kernel reproduces the input") {
  Conv2d<float> conv(1, 1, 1, 1, 0);
  conv.weight.data = {1.0f};
  conv.bias.data = {0.0f};
  Tensor x({2, 1, 4, 4});
  Rng rng(1);
  for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
  const Tensor y = conv.forward(x);
  REQUIRE(y.shape == x.shape);
  for (size_t i = 0; i < x.size(); ++i) CHECK(y.data[i] == doctest::Approx(x.data[i]));
}

TEST_CASE("dense identity map") {
  Dense<float> dense(2, 2);
  dense.weight.data = {1, 0, 0, 1};
  dense.bias.data = {0, 0};
  Tensor x({1, 2});
  x.data = {1.0f, 2.0f};
  const Tensor y = dense.forward(x);
  CHECK(y.data[0] == doctest::Approx(1.0f));
  CHECK(y.data[1] == doctest::Approx(2.0f));
}

TEST_CASE("3x3 conv matches hand-computed sliding-window sums") {
  Conv2d<float> conv(1, 1, 3, 1, 0);
  conv.weight.fill(1.0f);  // plain window sum
  conv.bias.data = {0.0f};
  Tensor x({1, 1, 4, 4});
  for (int i = 0; i < 16; ++i) x.data[static_cast<size_t>(i)] = static_cast<float>(i);
  const Tensor y = conv.forward(x);
  REQUIRE(y.shape == std::vector<int>{1, 1, 2, 2});
  auto window = [&](int r, int c) {
    float acc = 0;
    for (int dr = 0; dr < 3; ++dr)
      for (int dc = 0; dc < 3; ++dc) acc += x.data[static_cast<size_t>((r + dr) * 4 + c + dc)];
    return acc;
  };
  CHECK(y.data[0] == doctest::Approx(window(0, 0)));
  CHECK(y.data[1] == doctest::Approx(window(0, 1)));
  CHECK(y.data[2] == doctest::Approx(window(1, 0)));
  CHECK(y.data[3] == doctest::Approx(window(1, 1)));
}

TEST_CASE("backward: zero upstream gradient gives zero parameter gradients") {
  Conv2d<float> conv(2, 3, 3, 1, 1);
  Rng rng(3);
  conv.init(rng);
  Tensor x({1, 2, 5, 5});
  for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
  const Tensor y = conv.forward(x);
  Tensor dy(y.shape);  // zeros
  conv.backward(dy);
  for (float g : conv.grad_weight.data) CHECK(g == 0.0f);
  for (float g : conv.grad_bias.data) CHECK(g == 0.0f);
}

TEST_CASE("backward determinism: identical nets give bitwise-identical grads") {
  auto run = [&] {
    Rng rng(7);
    Dense<float> d1(8, 6);
    d1.init(rng);
    SelfAttention<float> att(8, 2);
    att.init(rng);
    Tensor x({2, 3, 8});
    for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
    Tensor y = att.forward(x);
    Tensor dy(y.shape);
    dy.fill(0.37f);
    att.backward(dy);
    return att.grad_wq.data;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("cross attention core examples") {
  // One key/value pair: output equals that value row regardless of query.
  Tensor q({1, 1, 4});
  q.data = {0.3f, -2.0f, 5.0f, 0.1f};
  Tensor k({1, 1, 4});
  k.data = {1.0f, 1.0f, 1.0f, 1.0f};
  Tensor v({1, 1, 4});
  v.data = {4.0f, 3.0f, 2.0f, 1.0f};
  const Tensor y = scaled_dot_attention(q, k, v, 1);
  for (int i = 0; i < 4; ++i) {
    CHECK(y.data[static_cast<size_t>(i)] == doctest::Approx(v.data[static_cast<size_t>(i)]));
  }

  // Orthogonal keys; query aligned with key j scaled x10 saturates softmax.
  const int d = 4;
  Tensor keys({1, 3, d});
  keys.fill(0);
  keys.data[0] = 1.0f;             // k0 = e0
  keys.data[d + 1] = 1.0f;         // k1 = e1
  keys.data[2 * d + 2] = 1.0f;     // k2 = e2
  Tensor values({1, 3, d});
  for (int i = 0; i < 3 * d; ++i) values.data[static_cast<size_t>(i)] = static_cast<float>(i);
  Tensor query({1, 1, d});
  query.fill(0);
  query.data[1] = 10.0f * std::sqrt(static_cast<float>(d));  // aligned with k1, scaled
  const Tensor out = scaled_dot_attention(query, keys, values, 1);
  for (int i = 0; i < d; ++i) {
    CHECK(out.data[static_cast<size_t>(i)] ==
          doctest::Approx(values.data[static_cast<size_t>(d + i)]).epsilon(1e-2));
  }

  // Jointly permuting key/value pairs leaves the output unchanged.
  Tensor keys_p = keys, values_p = values;
  auto swap_row = [&](Tensor& t, int a, int b) {
    for (int i = 0; i < d; ++i) std::swap(t.data[static_cast<size_t>(a * d + i)],
                                          t.data[static_cast<size_t>(b * d + i)]);
  };
  swap_row(keys_p, 0, 2);
  swap_row(values_p, 0, 2);
  Tensor q2({1, 2, d});
  Rng rng(5);
  for (auto& x : q2.data) x = static_cast<float>(rng.uniform(-1, 1));
  const Tensor y1 = scaled_dot_attention(q2, keys, values, 2);
  const Tensor y2 = scaled_dot_attention(q2, keys_p, values_p, 2);
  for (size_t i = 0; i < y1.size(); ++i) CHECK(y1.data[i] == doctest::Approx(y2.data[i]).epsilon(1e-6));
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(11);
  std::vector<float> m(40 * 17);
  for (auto& v : m) v = static_cast<float>(rng.uniform(-30, 30));
  softmax_rows(m.data(), 40, 17);
  for (int r = 0; r < 40; ++r) {
    double s = 0;
    for (int c = 0; c < 17; ++c) s += m[static_cast<size_t>(r * 17 + c)];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("bce loss examples") {
  // pred == target exactly (post clamp): loss <= 1e-6
  Tensor p({4}), t({4});
  p.data = {1, 0, 1, 0};
  t.data = {1, 0, 1, 0};
  CHECK(bce_loss(p, t, 1.0f).loss <= 1e-6f);

  // pred 0.5 everywhere, w = 1: loss = ln 2
  Tensor p2({8}), t2({8});
  p2.fill(0.5f);
  Rng rng(3);
  for (auto& v : t2.data) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
  CHECK(bce_loss(p2, t2, 1.0f).loss == doctest::Approx(std::log(2.0)).epsilon(1e-5));

  // single positive sample, w = 8: loss is 8x the w = 1 loss
  Tensor p3({1}), t3({1});
  p3.data = {0.3f};
  t3.data = {1.0f};
  const float l1 = bce_loss(p3, t3, 1.0f).loss;
  const float l8 = bce_loss(p3, t3, 8.0f).loss;
  CHECK(l8 == doctest::Approx(8.0f * l1).epsilon(1e-6));

  // gradient sanity vs finite differences
  TensorT<double> pd({3}), td({3});
  pd.data = {0.2, 0.7, 0.5};
  td.data = {1.0, 0.0, 1.0};
  const auto res = bce_loss(pd, td, 3.0);
  for (size_t i = 0; i < pd.size(); ++i) {
    const double h = 1e-7;
    pd.data[i] += h;
    const double lp = bce_loss(pd, td, 3.0).loss;
    pd.data[i] -= 2 * h;
    const double lm = bce_loss(pd, td, 3.0).loss;
    pd.data[i] += h;
    CHECK(res.grad.data[i] == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("adam step examples") {
  // Zero gradient, fresh state: parameters unchanged.
  Tensor p({3}), g({3});
  p.data = {1.0f, -2.0f, 3.0f};
  g.fill(0.0f);
  Adam opt({.lr = 0.01f});
  opt.step({{"p", &p, &g}});
  CHECK(p.data[0] == doctest::Approx(1.0f));
  CHECK(p.data[1] == doctest::Approx(-2.0f));
  CHECK(p.data[2] == doctest::Approx(3.0f));

  // Constant gradient, first step: update magnitude ~ lr (bias-corrected).
  Tensor p2({2}), g2({2});
  p2.fill(0.0f);
  g2.data = {0.5f, -1.7f};
  Adam opt2({.lr = 0.01f});
  opt2.step({{"p", &p2, &g2}});
  CHECK(std::abs(p2.data[0]) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(std::abs(p2.data[1]) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(p2.data[0] < 0);  // moves against the gradient
  CHECK(p2.data[1] > 0);

  // Gradients g and 2g: near-equal first-step magnitudes (adaptive scaling).
  Tensor p3({2}), g3({2});
  p3.fill(0.0f);
  g3.data = {0.3f, 0.6f};
  Adam opt3({.lr = 0.01f});
  opt3.step({{"p", &p3, &g3}});
  CHECK(std::abs(p3.data[0]) == doctest::Approx(std::abs(p3.data[1])).epsilon(1e-3));
}

TEST_CASE("optimizer drives a fixed regression loss down over 50 steps") {
  Rng rng(13);
  Dense<float> l1(6, 16), l2(16, 1);
  ReLU<float> act;
  l1.init(rng);
  l2.init(rng);
  Tensor x({32, 6}), y({32, 1});
  for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
  for (int i = 0; i < 32; ++i) {
    const float* row = x.ptr() + i * 6;
    y.data[static_cast<size_t>(i)] = 0.5f * row[0] - 1.2f * row[3] + 0.3f;
  }
  std::vector<ParamRef<float>> params;
  l1.collect_params("l1", &params);
  l2.collect_params("l2", &params);
  Adam opt({.lr = 0.01f});
  float first = 0, last = 0;
  float prev = 1e30f;
  for (int step = 0; step < 50; ++step) {
    for (auto& pr : params) pr.grad->fill(0.0f);
    const Tensor out = l2.forward(act.forward(l1.forward(x)));
    const auto loss = mse_loss(out, y);
    if (step == 0) first = loss.loss;
    last = loss.loss;
    CHECK(loss.loss < prev * 1.5f + 1e-3f);  // no blow-ups
    prev = loss.loss;
    l1.backward(act.backward(l2.backward(loss.grad)));
    opt.step(params);
  }
  CHECK(last < first * 0.2f);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(17);
  Dense<float> d(5, 4);
  d.init(rng);
  SelfAttention<float> att(8, 2);
  att.init(rng);
  std::vector<ParamRef<float>> params;
  d.collect_params("dense", &params);
  att.collect_params("attn", &params);
  const std::vector<LayerSpec> specs = {d.spec(), att.spec()};
  const std::string path = "/tmp/bevdrive_test_ckpt.bvdc";
  save_checkpoint(path, specs, params);

  Dense<float> d2(5, 4);
  SelfAttention<float> att2(8, 2);
  std::vector<ParamRef<float>> params2;
  d2.collect_params("dense", &params2);
  att2.collect_params("attn", &params2);
  const Checkpoint ckpt = load_checkpoint(path);
  restore_params(ckpt, params2);
  for (size_t i = 0; i < params.size(); ++i) {
    REQUIRE(params2[i].value->data.size() == params[i].value->data.size());
    for (size_t j = 0; j < params[i].value->data.size(); ++j) {
      CHECK(params2[i].value->data[j] == params[i].value->data[j]);
    }
  }
  CHECK(ckpt.specs.size() == 2);
  CHECK(ckpt.specs[1].kind == LayerKind::SelfAttention);
}

TEST_CASE("gradient checks: quick subset") {
  const auto report = run_gradient_checks(18, 99, 1e-4);
  INFO("worst: ", report.worst, " rel err ", report.max_rel_err);
  CHECK(report.pass);
  CHECK(report.configs == 18);
  CHECK(report.checked_values > 500);
}
