#ifndef CORENET_PATHGRAPH_MASK_HPP
#define CORENET_PATHGRAPH_MASK_HPP

#include <cstdint>
#include <vector>

#include "corenet/error.hpp"

namespace corenet::pathgraph {

// Per-layer bit vectors over activation units: 1 = active, 0 = inactive.
struct ActivationMask {
    std::vector<std::vector<uint8_t>> layers;

    size_t layer_count() const { return layers.size(); }

    size_t total_units() const {
        size_t n = 0;
        for (const auto& layer : layers) n += layer.size();
        return n;
    }

    size_t active_count() const {
        size_t n = 0;
        for (const auto& layer : layers)
            for (uint8_t bit : layer) n += bit ? 1 : 0;
        return n;
    }

    size_t active_count_in(size_t layer) const {
        size_t n = 0;
        for (uint8_t bit : layers.at(layer)) n += bit ? 1 : 0;
        return n;
    }

    bool operator==(const ActivationMask&) const = default;
};

// Effective network width: active units per layer, averaged over layers.
inline double enw(const ActivationMask& mask) {
    if (mask.layers.empty()) throw EmptyMask("ENW of a mask with no layers");
    return static_cast<double>(mask.active_count()) / static_cast<double>(mask.layer_count());
}

inline double active_fraction(const ActivationMask& mask) {
    const size_t total = mask.total_units();
    if (total == 0) throw EmptyMask("active fraction of an empty mask");
    return static_cast<double>(mask.active_count()) / static_cast<double>(total);
}

inline double inactive_fraction(const ActivationMask& mask) {
    return 1.0 - active_fraction(mask);
}

}  // namespace corenet::pathgraph

#endif  // CORENET_PATHGRAPH_MASK_HPP
