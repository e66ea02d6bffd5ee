#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "catnet/checkpoint.hpp"
#include "catnet/network.hpp"
#include "catnet/optimizer.hpp"
#include "catnet/rng.hpp"

using namespace catnet;

namespace {

// Straight-line scalar re-computation of a forward pass, written against the
// math only; no shared code with Network::forward.
std::vector<double> oracle_forward_softmax(const Network& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (const DenseLayer& layer : net.layers) {
    std::vector<double> z(layer.weight.rows, 0.0);
    for (std::size_t r = 0; r < layer.weight.rows; ++r) {
      double acc = layer.bias[r];
      for (std::size_t c = 0; c < layer.weight.cols; ++c) {
        acc += layer.weight.data[r * layer.weight.cols + c] * a[c];
      }
      z[r] = layer.activation == Activation::kRelu ? (acc > 0.0 ? acc : 0.0) : acc;
    }
    a = z;
  }
  double mx = a[0];
  for (double v : a) mx = std::max(mx, v);
  double sum = 0.0;
  std::vector<double> p(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    p[i] = std::exp(a[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

Network random_net(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t classes,
                   std::uint64_t seed) {
  Rng rng(seed);
  return make_dense_network(in, hidden, classes, rng);
}

std::vector<double> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.gaussian();
  return v;
}

// Scalar probe loss dot(c, logits); its gradient on the logits is c.
double probe_loss(const Network& net, const std::vector<double>& x,
                  const std::vector<double>& c) {
  const auto acts = forward_activations(net, x);
  double loss = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) loss += c[i] * acts.back()[i];
  return loss;
}

double max_fd_relative_error(Network& net, const std::vector<double>& x,
                             const std::vector<double>& c, double step) {
  const Gradients analytic = backward(net, x, c);
  double worst = 0.0;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    auto check_param = [&](double& param, double analytic_grad) {
      const double saved = param;
      param = saved + step;
      const double up = probe_loss(net, x, c);
      param = saved - step;
      const double down = probe_loss(net, x, c);
      param = saved;
      const double fd = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(fd), std::abs(analytic_grad), 1e-8});
      worst = std::max(worst, std::abs(fd - analytic_grad) / denom);
    };
    for (std::size_t k = 0; k < net.layers[li].weight.data.size(); ++k) {
      check_param(net.layers[li].weight.data[k], analytic.layers[li].weight.data[k]);
    }
    for (std::size_t k = 0; k < net.layers[li].bias.size(); ++k) {
      check_param(net.layers[li].bias[k], analytic.layers[li].bias[k]);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("forward: equal logits give the uniform softmax") {
  Network net;
  DenseLayer layer;
  layer.weight = Tensor2(4, 3, 0.0);
  layer.bias.assign(4, 0.0);
  net.layers.push_back(layer);

  const auto r = forward(net, {0.3, -1.2, 2.0});
  for (double p : r.softmax) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("forward: identity single layer passes the input through") {
  Network net;
  DenseLayer layer;
  layer.weight = Tensor2(3, 3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) layer.weight.at(i, i) = 1.0;
  layer.bias.assign(3, 0.0);
  net.layers.push_back(layer);

  const std::vector<double> x{0.5, -2.0, 1.25};
  const auto r = forward(net, x);
  CHECK(r.logits == x);
}

TEST_CASE("forward: matches the straight-line oracle on random nets") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Network net = random_net(5, {7}, 4, 100 + static_cast<std::uint64_t>(trial));
    const auto x = random_vec(5, rng);
    const auto got = forward(net, x).softmax;
    const auto want = oracle_forward_softmax(net, x);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward: softmax sums to one and is pure") {
  Network net = random_net(6, {8, 5}, 3, 42);
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_vec(6, rng);
    const auto a = forward(net, x);
    const auto b = forward(net, x);
    double sum = 0.0;
    for (double p : a.softmax) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(a.softmax == b.softmax);  // bitwise purity
    CHECK(a.feature.size() == net.feature_dim());
  }
}

TEST_CASE("forward: dimension mismatch names both widths") {
  Network net = random_net(5, {7}, 4, 1);
  CHECK_THROWS_WITH_AS(forward(net, {1.0, 2.0}), doctest::Contains("input length 2"),
                       std::invalid_argument);
}

TEST_CASE("backward: zero upstream gradient zeroes every parameter gradient") {
  Network net = random_net(4, {6, 5}, 3, 2);
  const Gradients g = backward(net, {0.1, 0.2, 0.3, 0.4}, {0.0, 0.0, 0.0});
  for (const LayerGrad& lg : g.layers) {
    for (double v : lg.weight.data) CHECK(v == 0.0);
    for (double v : lg.bias) CHECK(v == 0.0);
  }
}

TEST_CASE("backward: single linear layer gradient is the outer product") {
  Network net;
  DenseLayer layer;
  layer.weight = Tensor2(2, 3, 0.0);
  layer.weight.data = {0.5, -1.0, 2.0, 1.5, 0.25, -0.75};
  layer.bias = {0.1, -0.2};
  net.layers.push_back(layer);

  const std::vector<double> x{1.0, -2.0, 3.0};
  const std::vector<double> g{0.7, -0.3};
  const Gradients grads = backward(net, x, g);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(grads.layers[0].weight.at(r, c) == doctest::Approx(g[r] * x[c]).epsilon(1e-15));
    }
    CHECK(grads.layers[0].bias[r] == g[r]);
  }
}

TEST_CASE("backward: central finite differences agree across shapes") {
  const std::vector<std::vector<std::size_t>> hiddens{{}, {6}, {8, 5}, {4, 4, 4}, {10}};
  Rng rng(99);
  for (std::size_t shape = 0; shape < hiddens.size(); ++shape) {
    Network net = random_net(5, hiddens[shape], 4, 500 + shape);
    for (int input = 0; input < 3; ++input) {
      const auto x = random_vec(5, rng);
      const auto c = random_vec(4, rng);
      CHECK(max_fd_relative_error(net, x, c, 1e-5) < 1e-4);
    }
  }
}

TEST_CASE("sgd_step: zero gradients with zero decay leave weights unchanged") {
  Network net = random_net(3, {4}, 2, 5);
  const Network before = net;
  OptimizerState opt = make_optimizer(net, 0.01, 0.9, 0.0);
  sgd_step(opt, net, Gradients::zeros_like(net));
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(net.layers[i].weight.data == before.layers[i].weight.data);
    CHECK(net.layers[i].bias == before.layers[i].bias);
  }
  CHECK(net.update_count == 1);
}

TEST_CASE("sgd_step: weight decay alone shrinks a unit weight to 0.999999") {
  Network net;
  DenseLayer layer;
  layer.weight = Tensor2(1, 1, 1.0);
  layer.bias = {0.0};
  net.layers.push_back(layer);
  OptimizerState opt = make_optimizer(net, 0.001, 0.0, 0.001);
  sgd_step(opt, net, Gradients::zeros_like(net));
  CHECK(net.layers[0].weight.data[0] == doctest::Approx(0.999999).epsilon(1e-15));
}

TEST_CASE("sgd_step: momentum trajectory matches a hand-unrolled recurrence") {
  // Scalar quadratic loss 0.5*w^2 (gradient w), lr 0.1, momentum 0.9, no decay.
  Network net;
  DenseLayer layer;
  layer.weight = Tensor2(1, 1, 1.0);
  layer.bias = {0.0};
  net.layers.push_back(layer);
  OptimizerState opt = make_optimizer(net, 0.1, 0.9, 0.0);

  double w = 1.0;
  double v = 0.0;
  for (int step = 0; step < 3; ++step) {
    Gradients g = Gradients::zeros_like(net);
    g.layers[0].weight.data[0] = net.layers[0].weight.data[0];
    sgd_step(opt, net, g);

    v = 0.9 * v + w;  // same recurrence, unrolled by hand
    w = w - 0.1 * v;
    CHECK(net.layers[0].weight.data[0] == doctest::Approx(w).epsilon(1e-15));
  }
}

TEST_CASE("sgd_step: zero learning rate is the identity on weights") {
  Network net = random_net(3, {4}, 2, 6);
  const Network before = net;
  OptimizerState opt = make_optimizer(net, 1e-9, 0.5, 0.001);
  opt.learning_rate = 0.0;  // explicit zero after construction
  Rng rng(3);
  Gradients g = Gradients::zeros_like(net);
  for (auto& lg : g.layers) {
    for (double& x : lg.weight.data) x = rng.gaussian();
    for (double& x : lg.bias) x = rng.gaussian();
  }
  sgd_step(opt, net, g);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(net.layers[i].weight.data == before.layers[i].weight.data);
    CHECK(net.layers[i].bias == before.layers[i].bias);
  }
}

TEST_CASE("sgd_step: non-finite gradients abort naming the parameter") {
  Network net = random_net(3, {4}, 2, 7);
  OptimizerState opt = make_optimizer(net, 0.01, 0.9, 0.0);
  Gradients g = Gradients::zeros_like(net);
  g.layers[1].weight.data[2] = std::nan("");
  CHECK_THROWS_WITH_AS(sgd_step(opt, net, g), doctest::Contains("layer 1 weight index 2"),
                       std::runtime_error);
}

TEST_CASE("expand_output: zero added classes is bit-identical") {
  Network net = random_net(5, {6}, 4, 8);
  const Network before = net;
  Rng rng(1);
  expand_output(net, 0, rng);
  CHECK(net.layers.back().weight.data == before.layers.back().weight.data);
  CHECK(net.layers.back().bias == before.layers.back().bias);
}

TEST_CASE("expand_output: 40 to 45 classes keeps the first 40 logits") {
  Network net = random_net(12, {16}, 40, 9);
  Rng model_rng(77);
  Rng input_rng(5);
  const auto x = random_vec(12, input_rng);
  const auto before = forward(net, x).logits;

  expand_output(net, 5, model_rng);
  CHECK(net.output_classes() == 45);
  const auto after = forward(net, x).logits;
  for (std::size_t i = 0; i < 40; ++i) CHECK(after[i] == before[i]);  // bitwise
}

TEST_CASE("expand_output: snapshot softmax over old classes equals pre-expansion softmax") {
  Network net = random_net(6, {8}, 5, 10);
  Rng model_rng(78);
  Rng input_rng(6);
  const auto x = random_vec(6, input_rng);
  const auto before = forward(net, x).softmax;

  expand_output(net, 3, model_rng);
  const ModelSnapshot snapshot(net);
  const auto acts = forward_activations(snapshot.net(), x);
  const auto restricted = stable_softmax_prefix(acts.back(), 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(restricted[i] == doctest::Approx(before[i]).epsilon(1e-12));
  }
}

TEST_CASE("extract_feature: 3-4-5 triangle normalizes to (0.6, 0.8)") {
  Network net;
  DenseLayer hidden;
  hidden.weight = Tensor2(2, 2, 0.0);
  hidden.weight.at(0, 0) = 1.0;
  hidden.weight.at(1, 1) = 1.0;
  hidden.bias = {0.0, 0.0};
  hidden.activation = Activation::kIdentity;
  DenseLayer head;
  head.weight = Tensor2(2, 2, 0.0);
  head.bias = {0.0, 0.0};
  net.layers.push_back(hidden);
  net.layers.push_back(head);

  const auto f = extract_feature(net, {3.0, 4.0});
  CHECK_FALSE(f.zero_norm);
  CHECK(f.feature[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(f.feature[1] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("extract_feature: norm lands on 1 across 1000 random draws") {
  Network net = random_net(6, {8}, 4, 12);
  Rng rng(13);
  std::size_t checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto x = random_vec(6, rng);
    const auto f = extract_feature(net, x);
    if (f.zero_norm) continue;  // possible but not expected for this net
    CHECK(std::abs(l2_norm(f.feature) - 1.0) < 1e-9);
    ++checked;
  }
  CHECK(checked > 900);
}

TEST_CASE("extract_feature: an already unit-norm activation is unchanged") {
  // Identity pass-through makes the penultimate activation equal the input.
  Network net;
  DenseLayer hidden;
  hidden.weight = Tensor2(2, 2, 0.0);
  hidden.weight.at(0, 0) = 1.0;
  hidden.weight.at(1, 1) = 1.0;
  hidden.bias = {0.0, 0.0};
  hidden.activation = Activation::kIdentity;
  DenseLayer head;
  head.weight = Tensor2(2, 2, 0.0);
  head.bias = {0.0, 0.0};
  net.layers.push_back(hidden);
  net.layers.push_back(head);

  const std::vector<double> unit{std::sqrt(0.5), -std::sqrt(0.5)};
  const auto f = extract_feature(net, unit);
  CHECK(std::abs(f.feature[0] - unit[0]) < 1e-12);
  CHECK(std::abs(f.feature[1] - unit[1]) < 1e-12);
}

TEST_CASE("extract_feature: zero-norm activation returns flagged zeros") {
  Network net;
  DenseLayer hidden;  // relu of a large negative bias clamps everything to 0
  hidden.weight = Tensor2(3, 2, 0.0);
  hidden.bias = {-1.0, -1.0, -1.0};
  hidden.activation = Activation::kRelu;
  DenseLayer head;
  head.weight = Tensor2(2, 3, 0.0);
  head.bias = {0.0, 0.0};
  net.layers.push_back(hidden);
  net.layers.push_back(head);

  const auto f = extract_feature(net, {1.0, 1.0});
  CHECK(f.zero_norm);
  for (double v : f.feature) CHECK(v == 0.0);
}

TEST_CASE("checkpoint: round trip is bit-exact") {
  Network net = random_net(7, {9, 5}, 6, 21);
  const auto path = std::filesystem::temp_directory_path() / "catnet_ckpt_test.catn";
  save_network(net, path.string());
  const Network loaded = load_network(path.string());
  REQUIRE(loaded.layers.size() == net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(loaded.layers[i].activation == net.layers[i].activation);
    CHECK(loaded.layers[i].weight.data == net.layers[i].weight.data);
    CHECK(loaded.layers[i].bias == net.layers[i].bias);
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: truncation reports expected vs found byte counts") {
  Network net = random_net(4, {5}, 3, 22);
  const auto path = std::filesystem::temp_directory_path() / "catnet_ckpt_trunc.catn";
  save_network(net, path.string());
  const auto full_size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full_size / 2);
  CHECK_THROWS_WITH_AS(load_network(path.string()), doctest::Contains("truncated"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: wrong magic is rejected") {
  const auto path = std::filesystem::temp_directory_path() / "catnet_ckpt_magic.catn";
  std::ofstream f(path, std::ios::binary);
  f << "NOPExxxxxxxxxxxxxxxx";
  f.close();
  CHECK_THROWS_WITH_AS(load_network(path.string()), doctest::Contains("magic"),
                       std::runtime_error);
  std::filesystem::remove(path);
}
