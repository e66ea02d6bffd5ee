#include "catnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace catnet {

namespace {

Tensor2 uniform_tensor(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Tensor2 t(rows, cols);
  for (double& w : t.data) w = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

Network make_dense_network(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                           std::size_t classes, Rng& rng) {
  if (input_dim == 0) throw std::invalid_argument("make_dense_network: input_dim must be > 0");
  if (classes == 0) throw std::invalid_argument("make_dense_network: classes must be > 0");
  Network net;
  std::size_t in = input_dim;
  for (std::size_t width : hidden) {
    if (width == 0) throw std::invalid_argument("make_dense_network: hidden width must be > 0");
    DenseLayer layer;
    layer.weight = uniform_tensor(width, in, std::sqrt(6.0 / static_cast<double>(in)), rng);
    layer.bias.assign(width, 0.0);
    layer.activation = Activation::kRelu;
    net.layers.push_back(std::move(layer));
    in = width;
  }
  DenseLayer head;
  head.weight = uniform_tensor(classes, in, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  head.bias.assign(classes, 0.0);
  head.activation = Activation::kIdentity;
  net.layers.push_back(std::move(head));
  return net;
}

void validate_network(const Network& net) {
  if (net.layers.empty()) throw std::invalid_argument("network has no layers");
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const DenseLayer& layer = net.layers[i];
    if (layer.weight.data.size() != layer.weight.rows * layer.weight.cols) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": weight storage size " +
                                  std::to_string(layer.weight.data.size()) +
                                  " does not equal rows*cols");
    }
    if (layer.bias.size() != layer.weight.rows) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": bias length " +
                                  std::to_string(layer.bias.size()) + " does not match rows " +
                                  std::to_string(layer.weight.rows));
    }
    if (i + 1 < net.layers.size() &&
        net.layers[i + 1].weight.cols != layer.weight.rows) {
      throw std::invalid_argument("layer " + std::to_string(i + 1) + ": input width " +
                                  std::to_string(net.layers[i + 1].weight.cols) +
                                  " does not match layer " + std::to_string(i) +
                                  " output width " + std::to_string(layer.weight.rows));
    }
  }
}

std::vector<double> stable_softmax(const std::vector<double>& logits) {
  return stable_softmax_prefix(logits, logits.size());
}

std::vector<double> stable_softmax_prefix(const std::vector<double>& logits,
                                          std::size_t count) {
  if (count == 0 || count > logits.size()) {
    throw std::invalid_argument("stable_softmax_prefix: count " + std::to_string(count) +
                                " out of range for " + std::to_string(logits.size()) +
                                " logits");
  }
  double max_logit = logits[0];
  for (std::size_t i = 1; i < count; ++i) max_logit = std::max(max_logit, logits[i]);
  std::vector<double> p(count);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    p[i] = std::exp(logits[i] - max_logit);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<std::vector<double>> forward_activations(const Network& net,
                                                     const std::vector<double>& x) {
  std::vector<std::vector<double>> acts;
  acts.reserve(net.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const DenseLayer& layer = net.layers[i];
    std::vector<double> z = matvec(layer.weight, acts.back(),
                                   ("forward layer " + std::to_string(i)).c_str());
    for (std::size_t r = 0; r < z.size(); ++r) z[r] += layer.bias[r];
    if (layer.activation == Activation::kRelu) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

ForwardResult forward(const Network& net, const std::vector<double>& x) {
  const auto acts = forward_activations(net, x);
  ForwardResult r;
  r.logits = acts.back();
  r.softmax = stable_softmax(r.logits);
  r.feature = acts[acts.size() - 2];
  return r;
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  g.layers.reserve(net.layers.size());
  for (const DenseLayer& layer : net.layers) {
    LayerGrad lg;
    lg.weight = Tensor2(layer.weight.rows, layer.weight.cols);
    lg.bias.assign(layer.bias.size(), 0.0);
    g.layers.push_back(std::move(lg));
  }
  return g;
}

void Gradients::accumulate(const Gradients& other) {
  if (layers.size() != other.layers.size()) {
    throw std::invalid_argument("Gradients::accumulate: layer count mismatch");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].weight.same_shape(other.layers[i].weight)) {
      throw std::invalid_argument("Gradients::accumulate: shape mismatch at layer " +
                                  std::to_string(i));
    }
    for (std::size_t k = 0; k < layers[i].weight.data.size(); ++k) {
      layers[i].weight.data[k] += other.layers[i].weight.data[k];
    }
    for (std::size_t k = 0; k < layers[i].bias.size(); ++k) {
      layers[i].bias[k] += other.layers[i].bias[k];
    }
  }
}

Gradients backward(const Network& net, const std::vector<double>& x,
                   const std::vector<double>& grad_on_logits) {
  if (grad_on_logits.size() != net.output_classes()) {
    throw std::invalid_argument("backward: gradient length " +
                                std::to_string(grad_on_logits.size()) +
                                " does not match output classes " +
                                std::to_string(net.output_classes()));
  }
  const auto acts = forward_activations(net, x);
  Gradients grads = Gradients::zeros_like(net);

  std::vector<double> grad_out = grad_on_logits;  // d loss / d a_i
  for (std::size_t i = net.layers.size(); i-- > 0;) {
    const DenseLayer& layer = net.layers[i];
    const std::vector<double>& out = acts[i + 1];
    const std::vector<double>& in = acts[i];

    // relu: a == 0 exactly where the pre-activation was clamped
    std::vector<double> grad_z = std::move(grad_out);
    if (layer.activation == Activation::kRelu) {
      for (std::size_t r = 0; r < grad_z.size(); ++r) {
        if (out[r] <= 0.0) grad_z[r] = 0.0;
      }
    }
    add_outer(grads.layers[i].weight, grad_z, in);
    for (std::size_t r = 0; r < grad_z.size(); ++r) grads.layers[i].bias[r] += grad_z[r];
    if (i > 0) grad_out = matvec_transposed(layer.weight, grad_z);
  }
  return grads;
}

void expand_output(Network& net, std::size_t m_new, Rng& rng) {
  if (net.layers.empty()) throw std::invalid_argument("expand_output: network has no layers");
  if (m_new == 0) return;
  DenseLayer& head = net.layers.back();
  const std::size_t fan_in = head.weight.cols;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor2 grown(head.weight.rows + m_new, fan_in);
  std::copy(head.weight.data.begin(), head.weight.data.end(), grown.data.begin());
  for (std::size_t r = head.weight.rows; r < grown.rows; ++r) {
    for (std::size_t c = 0; c < fan_in; ++c) grown.at(r, c) = rng.uniform(-bound, bound);
  }
  head.weight = std::move(grown);
  head.bias.resize(head.bias.size() + m_new, 0.0);
}

FeatureResult extract_feature(const Network& net, const std::vector<double>& x) {
  const auto acts = forward_activations(net, x);
  FeatureResult result;
  result.feature = acts[acts.size() - 2];
  const double norm = l2_norm(result.feature);
  if (norm < 1e-12) {
    std::fill(result.feature.begin(), result.feature.end(), 0.0);
    result.zero_norm = true;
    return result;
  }
  for (double& v : result.feature) v /= norm;
  return result;
}

}  // namespace catnet
