#include "catnet/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace catnet {

OptimizerState make_optimizer(const Network& net, double learning_rate,
                              double momentum, double weight_decay) {
  if (learning_rate <= 0.0) throw std::invalid_argument("optimizer: learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("optimizer: momentum must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("optimizer: weight_decay must be >= 0");
  OptimizerState state;
  state.learning_rate = learning_rate;
  state.momentum = momentum;
  state.weight_decay = weight_decay;
  state.velocity = Gradients::zeros_like(net).layers;
  return state;
}

namespace {

[[noreturn]] void throw_non_finite(std::size_t layer, const char* kind, std::size_t index) {
  throw std::runtime_error("sgd_step: non-finite gradient at layer " + std::to_string(layer) +
                           " " + kind + " index " + std::to_string(index));
}

}  // namespace

void sgd_step(OptimizerState& state, Network& net, const Gradients& grads) {
  if (grads.layers.size() != net.layers.size() ||
      state.velocity.size() != net.layers.size()) {
    throw std::invalid_argument("sgd_step: layer count mismatch");
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (!grads.layers[i].weight.same_shape(net.layers[i].weight) ||
        grads.layers[i].bias.size() != net.layers[i].bias.size()) {
      throw std::invalid_argument("sgd_step: gradient shape mismatch at layer " +
                                  std::to_string(i));
    }
    for (std::size_t k = 0; k < grads.layers[i].weight.data.size(); ++k) {
      if (!std::isfinite(grads.layers[i].weight.data[k])) throw_non_finite(i, "weight", k);
    }
    for (std::size_t k = 0; k < grads.layers[i].bias.size(); ++k) {
      if (!std::isfinite(grads.layers[i].bias[k])) throw_non_finite(i, "bias", k);
    }
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    DenseLayer& layer = net.layers[i];
    LayerGrad& vel = state.velocity[i];
    const LayerGrad& g = grads.layers[i];
    for (std::size_t k = 0; k < layer.weight.data.size(); ++k) {
      const double adjusted = g.weight.data[k] + state.weight_decay * layer.weight.data[k];
      vel.weight.data[k] = state.momentum * vel.weight.data[k] + adjusted;
      layer.weight.data[k] -= state.learning_rate * vel.weight.data[k];
    }
    for (std::size_t k = 0; k < layer.bias.size(); ++k) {
      const double adjusted = g.bias[k] + state.weight_decay * layer.bias[k];
      vel.bias[k] = state.momentum * vel.bias[k] + adjusted;
      layer.bias[k] -= state.learning_rate * vel.bias[k];
    }
  }
  ++net.update_count;
}

}  // namespace catnet
