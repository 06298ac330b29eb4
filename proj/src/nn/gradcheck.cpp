#include "bevdrive/nn/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "bevdrive/nn/layers.hpp"
#include "bevdrive/rng.hpp"

namespace bevdrive::nn {

namespace {

using DTensor = TensorT<double>;

DTensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  DTensor t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

double weighted_sum(const DTensor& y, const DTensor& w) {
  double acc = 0.0;
  for (size_t i = 0; i < y.size(); ++i) acc += y.data[i] * w.data[i];
  return acc;
}

struct CheckCase {
  // Recomputes the scalar loss from scratch (used for numeric probes).
  std::function<double()> loss;
  // Runs forward+backward once, returning analytic grads for every slot.
  std::function<void()> run_analytic;
  // Flat views over every differentiable value (inputs + params) and the
  // corresponding analytic gradient storage.
  std::vector<std::pair<std::string, DTensor*>> values;
  std::vector<const DTensor*> grads;
};

void check_case(CheckCase* c, const char* kind, double tol, GradCheckReport* report) {
  c->run_analytic();
  constexpr double h = 1e-5;
  for (size_t slot = 0; slot < c->values.size(); ++slot) {
    DTensor* v = c->values[slot].second;
    const DTensor* g = c->grads[slot];
    for (size_t i = 0; i < v->size(); ++i) {
      const double orig = v->data[i];
      v->data[i] = orig + h;
      const double lp = c->loss();
      v->data[i] = orig - h;
      const double lm = c->loss();
      v->data[i] = orig;
      const double numeric = (lp - lm) / (2.0 * h);
      const double analytic = g->data[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      const double rel = std::abs(numeric - analytic) / denom;
      ++report->checked_values;
      if (rel > report->max_rel_err) {
        report->max_rel_err = rel;
        report->worst = std::string(kind) + " " + c->values[slot].first + " #" + std::to_string(i);
      }
      if (rel > tol) report->pass = false;
    }
  }
  ++report->configs;
}

}  // namespace

GradCheckReport run_gradient_checks(int total_configs, uint64_t seed, double tolerance) {
  GradCheckReport report;
  Rng rng(seed);
  const char* kinds[] = {"conv2d",   "dense",   "relu",    "sigmoid",        "flatten",
                         "avgpool",  "upsample", "self_attention", "cross_attention"};
  const int n_kinds = static_cast<int>(std::size(kinds));

  for (int cfg = 0; cfg < total_configs; ++cfg) {
    const char* kind = kinds[cfg % n_kinds];
    const std::string k(kind);

    if (k == "conv2d") {
      const int c = 1 + static_cast<int>(rng.uniform_int(3));
      const int oc = 1 + static_cast<int>(rng.uniform_int(3));
      const int kernel = rng.bernoulli(0.5) ? 3 : 1;
      const int stride = rng.bernoulli(0.5) ? 2 : 1;
      const int pad = kernel == 3 && rng.bernoulli(0.7) ? 1 : 0;
      const int hw = kernel + 1 + static_cast<int>(rng.uniform_int(4));
      Conv2d<double> layer(c, oc, kernel, stride, pad);
      layer.init(rng);
      const int b = 1 + static_cast<int>(rng.uniform_int(2));
      DTensor x = random_tensor({b, c, hw, hw}, rng);
      const int oh = (hw + 2 * pad - kernel) / stride + 1;
      DTensor w = random_tensor({b, oc, oh, oh}, rng);
      DTensor dx;
      CheckCase cc;
      cc.loss = [&] { return weighted_sum(layer.forward(x), w); };
      cc.run_analytic = [&] {
        layer.grad_weight.fill(0);
        layer.grad_bias.fill(0);
        layer.forward(x);
        dx = layer.backward(w);
      };
      cc.values = {{"input", &x}, {"weight", &layer.weight}, {"bias", &layer.bias}};
      cc.grads = {&dx, &layer.grad_weight, &layer.grad_bias};
      check_case(&cc, kind, tolerance, &report);
    } else if (k == "dense") {
      const int in = 1 + static_cast<int>(rng.uniform_int(12));
      const int out = 1 + static_cast<int>(rng.uniform_int(12));
      const int b = 1 + static_cast<int>(rng.uniform_int(4));
      Dense<double> layer(in, out);
      layer.init(rng);
      DTensor x = random_tensor({b, in}, rng);
      DTensor w = random_tensor({b, out}, rng);
      DTensor dx;
      CheckCase cc;
      cc.loss = [&] { return weighted_sum(layer.forward(x), w); };
      cc.run_analytic = [&] {
        layer.grad_weight.fill(0);
        layer.grad_bias.fill(0);
        layer.forward(x);
        dx = layer.backward(w);
      };
      cc.values = {{"input", &x}, {"weight", &layer.weight}, {"bias", &layer.bias}};
      cc.grads = {&dx, &layer.grad_weight, &layer.grad_bias};
      check_case(&cc, kind, tolerance, &report);
    } else if (k == "relu" || k == "sigmoid" || k == "flatten" || k == "avgpool" ||
               k == "upsample") {
      const int b = 1 + static_cast<int>(rng.uniform_int(2));
      const int c = 1 + static_cast<int>(rng.uniform_int(3));
      const int pool = rng.bernoulli(0.5) ? 2 : 3;
      const int hw = pool * (1 + static_cast<int>(rng.uniform_int(3)));
      // Keep ReLU inputs away from the kink, where finite differences lie.
      DTensor x = random_tensor({b, c, hw, hw}, rng);
      if (k == "relu") {
        for (auto& v : x.data) {
          if (std::abs(v) < 0.05) v = v < 0 ? v - 0.1 : v + 0.1;
        }
      }
      ReLU<double> relu;
      Sigmoid<double> sigmoid;
      Flatten<double> flatten;
      AvgPool2d<double> avgpool(pool);
      UpsampleNearest<double> upsample(pool);
      auto fwd = [&](const DTensor& in) {
        if (k == "relu") return relu.forward(in);
        if (k == "sigmoid") return sigmoid.forward(in);
        if (k == "flatten") return flatten.forward(in);
        if (k == "avgpool") return avgpool.forward(in);
        return upsample.forward(in);
      };
      auto bwd = [&](const DTensor& dy) {
        if (k == "relu") return relu.backward(dy);
        if (k == "sigmoid") return sigmoid.backward(dy);
        if (k == "flatten") return flatten.backward(dy);
        if (k == "avgpool") return avgpool.backward(dy);
        return upsample.backward(dy);
      };
      DTensor w = random_tensor(fwd(x).shape, rng);
      DTensor dx;
      CheckCase cc;
      cc.loss = [&] { return weighted_sum(fwd(x), w); };
      cc.run_analytic = [&] {
        fwd(x);
        dx = bwd(w);
      };
      cc.values = {{"input", &x}};
      cc.grads = {&dx};
      check_case(&cc, kind, tolerance, &report);
    } else if (k == "self_attention") {
      const int heads = rng.bernoulli(0.5) ? 1 : 2;
      const int d = heads * (2 + static_cast<int>(rng.uniform_int(3)));
      const int t = 2 + static_cast<int>(rng.uniform_int(4));
      SelfAttention<double> layer(d, heads);
      layer.init(rng);
      DTensor x = random_tensor({1, t, d}, rng);
      DTensor w = random_tensor({1, t, d}, rng);
      DTensor dx;
      CheckCase cc;
      cc.loss = [&] { return weighted_sum(layer.forward(x), w); };
      cc.run_analytic = [&] {
        layer.grad_wq.fill(0);
        layer.grad_wk.fill(0);
        layer.grad_wv.fill(0);
        layer.grad_wo.fill(0);
        layer.forward(x);
        dx = layer.backward(w);
      };
      cc.values = {{"input", &x},
                   {"wq", &layer.wq},
                   {"wk", &layer.wk},
                   {"wv", &layer.wv},
                   {"wo", &layer.wo}};
      cc.grads = {&dx, &layer.grad_wq, &layer.grad_wk, &layer.grad_wv, &layer.grad_wo};
      check_case(&cc, kind, tolerance, &report);
    } else if (k == "cross_attention") {
      const int heads = rng.bernoulli(0.5) ? 1 : 2;
      const int d = heads * (2 + static_cast<int>(rng.uniform_int(3)));
      const int tq = 1 + static_cast<int>(rng.uniform_int(4));
      const int tk = 2 + static_cast<int>(rng.uniform_int(4));
      CrossAttention<double> layer(d, heads);
      layer.init(rng);
      DTensor q = random_tensor({1, tq, d}, rng);
      DTensor ctx = random_tensor({1, tk, d}, rng);
      DTensor w = random_tensor({1, tq, d}, rng);
      DTensor w_attn = random_tensor({1, heads, tq, tk}, rng);
      DTensor dq, dctx;
      CheckCase cc;
      cc.loss = [&] {
        const DTensor y = layer.forward(q, ctx);
        return weighted_sum(y, w) + weighted_sum(layer.attention(), w_attn);
      };
      cc.run_analytic = [&] {
        layer.grad_wq.fill(0);
        layer.grad_wk.fill(0);
        layer.grad_wv.fill(0);
        layer.grad_wo.fill(0);
        layer.forward(q, ctx);
        auto grads = layer.backward(w, w_attn);
        dq = std::move(grads.first);
        dctx = std::move(grads.second);
      };
      cc.values = {{"queries", &q}, {"context", &ctx}, {"wq", &layer.wq},
                   {"wk", &layer.wk}, {"wv", &layer.wv}, {"wo", &layer.wo}};
      cc.grads = {&dq, &dctx, &layer.grad_wq, &layer.grad_wk, &layer.grad_wv, &layer.grad_wo};
      check_case(&cc, kind, tolerance, &report);
    }
  }
  return report;
}

}  // namespace bevdrive::nn
