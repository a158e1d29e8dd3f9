#ifndef CORENET_LINEARIZE_ATTACH_HPP
#define CORENET_LINEARIZE_ATTACH_HPP

#include <cstdio>
#include <memory>

#include "corenet/tensornet/network.hpp"

namespace corenet::linearize {

// Swap every ReLU placeholder for a trainable channel-wise PReLU. With
// initial slope 0 the network function is unchanged.
inline size_t attach_prelus(tensornet::Network& net, double initial_slope = 0.0) {
    size_t site = 0;
    size_t attached = 0;
    for (auto& layer : net.layers) {
        if (auto* relu = dynamic_cast<tensornet::Relu*>(layer.get())) {
            char name[32];
            std::snprintf(name, sizeof name, "act%02zu", site);
            layer = std::make_unique<tensornet::ChannelPRelu>(name, relu->channels(),
                                                              initial_slope);
            ++attached;
            ++site;
        } else if (dynamic_cast<tensornet::ChannelPRelu*>(layer.get())) {
            ++site;
        }
    }
    return attached;
}

}  // namespace corenet::linearize

#endif  // CORENET_LINEARIZE_ATTACH_HPP
