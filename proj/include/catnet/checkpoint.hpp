#pragma once

#include <string>

#include "catnet/network.hpp"

namespace catnet {

// Versioned binary checkpoint. Layout, all little-endian:
//   magic "CATN", version u32, layer count u32, then per layer:
//   activation tag u8 (0 relu, 1 identity), rows u32, cols u32,
//   row-major f64 weights, f64 biases.
// Round-trips bit-exactly.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace catnet
