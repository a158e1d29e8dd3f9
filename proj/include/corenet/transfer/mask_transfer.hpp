#ifndef CORENET_TRANSFER_MASK_TRANSFER_HPP
#define CORENET_TRANSFER_MASK_TRANSFER_HPP

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corenet/linearize/attach.hpp"
#include "corenet/linearize/state.hpp"
#include "corenet/pathgraph/mask.hpp"
#include "corenet/rng.hpp"
#include "corenet/tensornet/arch.hpp"

namespace corenet::transfer {

enum class MaskPermutationMode { exact, layerwise, global };

inline const char* mode_name(MaskPermutationMode mode) {
    switch (mode) {
        case MaskPermutationMode::exact: return "exact";
        case MaskPermutationMode::layerwise: return "layerwise";
        case MaskPermutationMode::global: return "global";
    }
    return "?";
}

inline MaskPermutationMode mode_from_name(const std::string& name) {
    if (name == "exact") return MaskPermutationMode::exact;
    if (name == "layerwise") return MaskPermutationMode::layerwise;
    if (name == "global") return MaskPermutationMode::global;
    throw InvalidSpec("unknown permutation mode '" + name + "'");
}

// Activity pattern of a finished linearization run: 1 = still active,
// 0 = frozen to identity. Layer structure mirrors the network.
inline pathgraph::ActivationMask extract_mask(const linearize::LinearizationState& state,
                                              tensornet::Network& net) {
    const auto prelus = net.prelu_layers();
    if (prelus.size() != state.active.size())
        throw ShapeMismatch("state does not mirror the network's prelu layers");
    for (size_t li = 0; li < prelus.size(); ++li)
        if (prelus[li]->channels() != state.active[li].size())
            throw ShapeMismatch("state layer width mismatch");
    return state.mask();
}

// exact: untouched. layerwise: each layer's bits shuffled within the layer.
// global: all bits shuffled across the network, redistributed in original
// layer order.
inline pathgraph::ActivationMask permute_mask(const pathgraph::ActivationMask& mask,
                                              MaskPermutationMode mode, SeededRng& rng) {
    if (mask.total_units() == 0) throw EmptyMask("cannot permute an empty mask");
    pathgraph::ActivationMask out = mask;
    switch (mode) {
        case MaskPermutationMode::exact:
            break;
        case MaskPermutationMode::layerwise:
            for (auto& layer : out.layers) rng.shuffle(layer);
            break;
        case MaskPermutationMode::global: {
            std::vector<uint8_t> flat;
            flat.reserve(mask.total_units());
            for (const auto& layer : out.layers)
                flat.insert(flat.end(), layer.begin(), layer.end());
            rng.shuffle(flat);
            size_t pos = 0;
            for (auto& layer : out.layers) {
                std::copy_n(flat.begin() + pos, layer.size(), layer.begin());
                pos += layer.size();
            }
            break;
        }
    }
    return out;
}

// Freshly initialized network carrying the given activity pattern:
// masked-off units are frozen identities, the rest are trainable PReLUs
// with initial slope 0 (so the parameter count matches a regularized run).
inline tensornet::Network apply_mask_to_fresh(const tensornet::ArchConfig& arch,
                                              const pathgraph::ActivationMask& mask,
                                              SeededRng& init_rng) {
    tensornet::Network net = tensornet::build_network(arch, init_rng);
    linearize::attach_prelus(net, 0.0);
    const auto prelus = net.prelu_layers();
    if (prelus.size() != mask.layers.size())
        throw ShapeMismatch("mask has " + std::to_string(mask.layers.size()) +
                            " layers, architecture has " + std::to_string(prelus.size()));
    for (size_t li = 0; li < prelus.size(); ++li) {
        if (prelus[li]->channels() != mask.layers[li].size())
            throw ShapeMismatch("mask layer " + std::to_string(li) + " width mismatch");
        for (size_t c = 0; c < mask.layers[li].size(); ++c)
            if (!mask.layers[li][c]) prelus[li]->deactivate_channel(c);
    }
    return net;
}

namespace detail {

inline std::string mask_digest(const pathgraph::ActivationMask& mask) {
    uint64_t h = 0xcbf29ce484222325ull;
    const auto mix = [&h](uint8_t byte) {
        h ^= byte;
        h *= 0x100000001b3ull;
    };
    for (const auto& layer : mask.layers) {
        for (uint8_t bit : layer) mix(bit ? '1' : '0');
        mix('|');
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace detail

inline nlohmann::ordered_json mask_to_json(const pathgraph::ActivationMask& mask) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["layers"] = mask.layers;
    j["digest"] = detail::mask_digest(mask);
    return j;
}

inline pathgraph::ActivationMask mask_from_json(const nlohmann::json& j) {
    try {
        pathgraph::ActivationMask mask;
        mask.layers = j.at("layers").get<std::vector<std::vector<uint8_t>>>();
        for (const auto& layer : mask.layers)
            for (uint8_t bit : layer)
                if (bit > 1) throw InvalidSpec("mask bits must be 0 or 1");
        const auto digest = j.at("digest").get<std::string>();
        if (digest != detail::mask_digest(mask))
            throw InvalidSpec("mask digest mismatch (corrupted file)");
        return mask;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed mask file: ") + e.what());
    }
}

inline void save_mask(const pathgraph::ActivationMask& mask, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << mask_to_json(mask).dump(2) << "\n";
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline pathgraph::ActivationMask load_mask(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec("mask file '" + path + "' is not valid JSON: " + e.what());
    }
    return mask_from_json(j);
}

}  // namespace corenet::transfer

#endif  // CORENET_TRANSFER_MASK_TRANSFER_HPP
