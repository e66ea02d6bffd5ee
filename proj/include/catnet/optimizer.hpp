#pragma once

#include <vector>

#include "catnet/network.hpp"

namespace catnet {

// SGD with momentum; weight decay is folded into the gradient before the
// momentum update:  v <- momentum*v + (g + wd*w);  w <- w - lr*v.
struct OptimizerState {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  std::vector<LayerGrad> velocity;  // shapes mirror the network parameters
};

OptimizerState make_optimizer(const Network& net, double learning_rate,
                              double momentum, double weight_decay);

// Applies one step and bumps net.update_count. Non-finite gradient entries
// abort the step with a diagnostic naming the offending parameter.
void sgd_step(OptimizerState& state, Network& net, const Gradients& grads);

}  // namespace catnet
