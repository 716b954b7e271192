#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nexprune/network.hpp"

namespace nexprune {

// Builders for the built-in architectures. Every builder seeds its own
// parameter initialization so the same (preset, seed) pair always yields
// bitwise identical weights.
NetworkGraph build_cnn_small(int num_classes, std::uint64_t seed);
NetworkGraph build_vgg_small(int num_classes, std::uint64_t seed);
NetworkGraph build_resnet_small(int num_classes, std::uint64_t seed);

// Dispatch by preset name ("cnn-small", "vgg-small", "resnet-small").
NetworkGraph build_preset(const std::string& preset, int num_classes,
                          std::uint64_t seed);
std::vector<std::string> preset_names();

// He-normal fan-in initialization for conv and linear weights, zero bias,
// unit gamma / zero beta for norm layers. Used by all builders.
void init_parameters(NetworkGraph& net, std::uint64_t seed);

}  // namespace nexprune
