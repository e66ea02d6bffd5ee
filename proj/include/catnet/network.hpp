#pragma once

#include <cstdint>
#include <vector>

#include "catnet/rng.hpp"
#include "catnet/tensor.hpp"

namespace catnet {

enum class Activation : std::uint8_t { kRelu = 0, kIdentity = 1 };

struct DenseLayer {
  Tensor2 weight;            // out x in
  std::vector<double> bias;  // out
  Activation activation = Activation::kIdentity;
};

// Feed-forward stack of dense layers. The last layer is the softmax head;
// the layer before it produces the feature used for exemplar herding and
// nearest-mean classification.
struct Network {
  std::vector<DenseLayer> layers;
  std::uint64_t update_count = 0;  // bumped once per optimizer step

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols; }
  std::size_t output_classes() const { return layers.empty() ? 0 : layers.back().weight.rows; }
  // Width of the input to the final layer (the penultimate activation).
  std::size_t feature_dim() const { return layers.empty() ? 0 : layers.back().weight.cols; }
};

// Hidden layers: relu, He-uniform init U[-sqrt(6/fan_in), +sqrt(6/fan_in)].
// Output layer: identity, U[-1/sqrt(fan_in), +1/sqrt(fan_in)], bias 0.
Network make_dense_network(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                           std::size_t classes, Rng& rng);

// Throws when consecutive layer dimensions do not compose.
void validate_network(const Network& net);

struct ForwardResult {
  std::vector<double> logits;
  std::vector<double> softmax;   // max-subtracted, sums to 1
  std::vector<double> feature;   // penultimate activation, not normalized
};

// Max-subtracted softmax over an arbitrary logit vector.
std::vector<double> stable_softmax(const std::vector<double>& logits);
// Softmax restricted to the first `count` logits; the rest are ignored.
std::vector<double> stable_softmax_prefix(const std::vector<double>& logits, std::size_t count);

ForwardResult forward(const Network& net, const std::vector<double>& x);

// Post-activation outputs of every layer; [0] is the input itself.
std::vector<std::vector<double>> forward_activations(const Network& net,
                                                     const std::vector<double>& x);

struct LayerGrad {
  Tensor2 weight;
  std::vector<double> bias;
};

struct Gradients {
  std::vector<LayerGrad> layers;

  static Gradients zeros_like(const Network& net);
  void accumulate(const Gradients& other);
};

// Gradient of a scalar loss w.r.t. all parameters, given the loss gradient on
// the final layer output. Pure: recomputes activations from (net, x).
Gradients backward(const Network& net, const std::vector<double>& x,
                   const std::vector<double>& grad_on_logits);

// Appends m_new output rows. Existing weights are untouched, so logits for
// the old classes are bit-identical for any input. New rows are drawn
// U[-1/sqrt(fan_in), +1/sqrt(fan_in)] from `rng`, biases zero.
void expand_output(Network& net, std::size_t m_new, Rng& rng);

struct FeatureResult {
  std::vector<double> feature;  // unit L2 norm, or all zeros when flagged
  bool zero_norm = false;
};

// Penultimate activation scaled to unit L2 norm. Activations with norm below
// 1e-12 yield the zero vector with the flag set instead of dividing.
FeatureResult extract_feature(const Network& net, const std::vector<double>& x);

// Frozen copy of a network; forward passes through it are pure.
class ModelSnapshot {
 public:
  explicit ModelSnapshot(const Network& net)
      : net_(net), update_count_(net.update_count) {}

  const Network& net() const { return net_; }
  std::uint64_t update_count() const { return update_count_; }

 private:
  Network net_;
  std::uint64_t update_count_;
};

}  // namespace catnet
