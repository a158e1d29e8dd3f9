#ifndef CORENET_TENSORNET_EXPORT_DAG_HPP
#define CORENET_TENSORNET_EXPORT_DAG_HPP

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "corenet/pathgraph/dag.hpp"
#include "corenet/pathgraph/histogram.hpp"
#include "corenet/pathgraph/mask.hpp"
#include "corenet/tensornet/network.hpp"

namespace corenet::tensornet {

enum class DagGranularity { neuron, channel };

// The activity pattern the network currently encodes: PReLU layers expose
// their channel flags, ReLU placeholders count as all-active sites.
inline pathgraph::ActivationMask current_mask(Network& net) {
    pathgraph::ActivationMask mask;
    for (auto& layer : net.layers) {
        if (auto* prelu = dynamic_cast<ChannelPRelu*>(layer.get())) {
            mask.layers.push_back(prelu->channel_active());
        } else if (auto* relu = dynamic_cast<Relu*>(layer.get())) {
            mask.layers.emplace_back(relu->channels(), 1);
        }
    }
    return mask;
}

namespace detail {

inline std::string act_node_id(size_t layer, size_t ch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "a%02zu_c%03zu", layer, ch);
    return buf;
}

inline std::string add_node_id(size_t merge, size_t ch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "m%02zu_c%03zu", merge, ch);
    return buf;
}

}  // namespace detail

// Nonlinear skeleton of the network: one activation node per PReLU/ReLU
// unit, edges along structural connectivity (dense and conv mix channels
// all-to-all, elementwise layers connect channel to channel), residual
// additions become balanced merges. Conv spatial multiplicity is collapsed,
// so neuron granularity is only available for dense stacks where it
// coincides with channel granularity.
inline pathgraph::ComputationDag network_to_dag(Network& net,
                                                const pathgraph::ActivationMask& mask,
                                                DagGranularity granularity) {
    using pathgraph::ComputationDag;
    using pathgraph::DagNode;
    using pathgraph::NodeKind;

    ComputationDag dag;
    dag.source = "in";
    dag.sink = "out";
    dag.nodes.push_back(DagNode{"in", NodeKind::passthrough, false, std::nullopt});

    std::vector<std::string> frontier{"in"};
    bool mixed = false;      // has a channel-mixing layer run since the frontier was made?
    size_t channels = 1;     // logical channel count at this point of the walk
    struct Snapshot {
        std::vector<std::string> frontier;
        bool mixed;
        size_t channels;
    };
    std::vector<Snapshot> skips;
    size_t act_index = 0;
    size_t merge_index = 0;

    const auto connect = [&](const std::vector<std::string>& from, bool from_mixed,
                             const std::vector<std::string>& to,
                             std::vector<std::vector<std::string>>* branch_sink) {
        if (!from_mixed && from.size() == to.size() && from.size() > 1) {
            for (size_t c = 0; c < to.size(); ++c) {
                dag.edges.emplace_back(from[c], to[c]);
                if (branch_sink) (*branch_sink)[c] = {from[c]};
            }
        } else {
            for (size_t c = 0; c < to.size(); ++c) {
                for (const auto& f : from) dag.edges.emplace_back(f, to[c]);
                if (branch_sink) (*branch_sink)[c] = from;
            }
        }
    };

    const auto add_activation_layer = [&](size_t layer_channels) {
        if (act_index >= mask.layers.size())
            throw ShapeMismatch("mask has fewer layers than the network");
        if (mask.layers[act_index].size() != layer_channels)
            throw ShapeMismatch("mask layer " + std::to_string(act_index) + " has " +
                                std::to_string(mask.layers[act_index].size()) +
                                " units, layer has " + std::to_string(layer_channels));
        std::vector<std::string> nodes(layer_channels);
        for (size_t c = 0; c < layer_channels; ++c) {
            nodes[c] = detail::act_node_id(act_index, c);
            dag.nodes.push_back(DagNode{nodes[c], NodeKind::activation,
                                        mask.layers[act_index][c] != 0,
                                        static_cast<int>(act_index)});
        }
        connect(frontier, mixed, nodes, nullptr);
        frontier = std::move(nodes);
        mixed = false;
        channels = layer_channels;
        ++act_index;
    };

    for (auto& layer : net.layers) {
        if (auto* prelu = dynamic_cast<ChannelPRelu*>(layer.get())) {
            add_activation_layer(prelu->channels());
        } else if (auto* relu = dynamic_cast<Relu*>(layer.get())) {
            add_activation_layer(relu->channels());
        } else if (auto* dense = dynamic_cast<Dense*>(layer.get())) {
            mixed = true;
            channels = dense->out_features();
        } else if (auto* conv = dynamic_cast<Conv2d*>(layer.get())) {
            if (granularity == DagGranularity::neuron)
                throw UnsupportedLayer("neuron granularity is reserved for dense networks");
            mixed = true;
            channels = conv->out_channels();
        } else if (dynamic_cast<BatchNorm*>(layer.get()) ||
                   dynamic_cast<AvgPool*>(layer.get()) ||
                   dynamic_cast<Flatten*>(layer.get())) {
            // channel-preserving
        } else if (dynamic_cast<ResidualBegin*>(layer.get())) {
            skips.push_back({frontier, mixed, channels});
        } else if (auto* end = dynamic_cast<ResidualEnd*>(layer.get())) {
            if (skips.empty()) throw InvalidSpec("residual end without begin");
            Snapshot snap = std::move(skips.back());
            skips.pop_back();
            const bool skip_mixed = snap.mixed || end->projection() != nullptr;
            if (!skip_mixed && snap.channels != channels)
                throw ShapeMismatch("identity skip across a width change");

            std::vector<std::string> adds(channels);
            for (size_t c = 0; c < channels; ++c) {
                adds[c] = detail::add_node_id(merge_index, c);
                dag.nodes.push_back(DagNode{adds[c], NodeKind::passthrough, false, std::nullopt});
            }
            std::vector<std::vector<std::string>> main_srcs(channels), skip_srcs(channels);
            connect(frontier, mixed, adds, &main_srcs);
            connect(snap.frontier, skip_mixed, adds, &skip_srcs);
            for (size_t c = 0; c < channels; ++c)
                dag.merges.push_back({adds[c], {main_srcs[c], skip_srcs[c]}});
            frontier = std::move(adds);
            mixed = false;
            ++merge_index;
        } else {
            throw UnsupportedLayer("cannot export layer kind '" + layer->kind() + "'");
        }
    }

    if (act_index != mask.layers.size())
        throw ShapeMismatch("mask has more layers than the network");

    dag.nodes.push_back(DagNode{"out", NodeKind::passthrough, false, std::nullopt});
    for (const auto& f : frontier) dag.edges.emplace_back(f, "out");
    return dag;
}

enum class TrickPrecision { exact, fixed };

// The histogram recursion executed as a modified forward pass: linear
// layers with all weights 1 and biases 0 sum incoming histograms,
// normalization and pooling are bypassed, active units shift their
// channel's histogram, and the result is read off behind the last layer.
// Dense path only; returns the sink histogram. With use_weight_sparsity,
// weights that are exactly 0 count as absent connections, so hand-masked
// dense nets reproduce sparse graph topologies.
inline pathgraph::PathHistogram histogram_via_forward(
    Network& net, const pathgraph::ActivationMask& mask,
    pathgraph::HistogramMode mode = pathgraph::HistogramMode::unnormalized,
    TrickPrecision precision = TrickPrecision::exact, bool use_weight_sparsity = false) {
    using pathgraph::HistogramMode;
    using pathgraph::PathHistogram;

    if (precision == TrickPrecision::fixed && mode == HistogramMode::normalized)
        throw InvalidSpec("fixed precision supports unnormalized mode only");

    // One histogram per channel; the virtual input is a single channel
    // seeded with (1,0,...) along the histogram dimension.
    using Hist = std::map<int, BigRat>;
    std::vector<Hist> hists{Hist{{0, BigRat(1)}}};
    bool mixed = true;  // a lone input channel behaves like a mixed frontier

    constexpr double kMaxExactDouble = 9007199254740992.0;  // 2^53
    const auto check_fixed = [&](const std::vector<Hist>& hs) {
        if (precision != TrickPrecision::fixed) return;
        for (const auto& h : hs)
            for (const auto& [len, mass] : h)
                if (mass > BigRat(kMaxExactDouble))
                    throw Overflow("histogram count exceeds exact double range");
    };

    const auto sum_all = [&]() {
        Hist total;
        for (const auto& h : hists)
            for (const auto& [len, mass] : h) total[len] += mass;
        return total;
    };

    size_t act_index = 0;
    std::vector<std::pair<std::vector<Hist>, bool>> skips;

    for (auto& layer : net.layers) {
        if (auto* dense = dynamic_cast<Dense*>(layer.get())) {
            const size_t out = dense->out_features();
            const size_t in = dense->in_features();
            if (use_weight_sparsity && hists.size() == in) {
                std::vector<Hist> next(out);
                for (size_t o = 0; o < out; ++o)
                    for (size_t i = 0; i < in; ++i) {
                        if (dense->weight().value.data[o * in + i] == 0.0) continue;
                        for (const auto& [len, m] : hists[i]) next[o][len] += m;
                    }
                hists = std::move(next);
            } else {
                Hist total = sum_all();
                hists.assign(out, total);
            }
            mixed = true;
            check_fixed(hists);
        } else if (dynamic_cast<Conv2d*>(layer.get())) {
            throw UnsupportedLayer("histogram forward pass supports dense networks only");
        } else if (dynamic_cast<BatchNorm*>(layer.get()) || dynamic_cast<AvgPool*>(layer.get()) ||
                   dynamic_cast<Flatten*>(layer.get())) {
            // bypassed
        } else if (dynamic_cast<ResidualBegin*>(layer.get())) {
            skips.emplace_back(hists, mixed);
        } else if (auto* end = dynamic_cast<ResidualEnd*>(layer.get())) {
            if (skips.empty()) throw InvalidSpec("residual end without begin");
            auto [skip_hists, skip_mixed] = std::move(skips.back());
            skips.pop_back();
            if (end->projection()) {
                Hist total;
                for (const auto& h : skip_hists)
                    for (const auto& [len, mass] : h) total[len] += mass;
                skip_hists.assign(end->projection()->out_features(), total);
                skip_mixed = true;
            }
            if (skip_hists.size() == 1 && hists.size() > 1)
                skip_hists.assign(hists.size(), skip_hists[0]);
            if (skip_hists.size() != hists.size())
                throw ShapeMismatch("residual histogram width mismatch");
            (void)skip_mixed;
            for (size_t c = 0; c < hists.size(); ++c) {
                if (mode == HistogramMode::normalized) {
                    const auto normalize = [](Hist h) {
                        BigRat total = 0;
                        for (const auto& [len, mass] : h) total += mass;
                        if (total == 0) throw ZeroMassBranch("residual branch with mass 0");
                        for (auto& [len, mass] : h) mass /= total;
                        return h;
                    };
                    Hist main = normalize(hists[c]);
                    Hist skip = normalize(skip_hists[c]);
                    Hist combined;
                    for (const auto& [len, mass] : main) combined[len] += mass / 2;
                    for (const auto& [len, mass] : skip) combined[len] += mass / 2;
                    hists[c] = std::move(combined);
                } else {
                    for (const auto& [len, mass] : skip_hists[c]) hists[c][len] += mass;
                }
            }
            mixed = false;
            check_fixed(hists);
        } else if (auto* prelu = dynamic_cast<ChannelPRelu*>(layer.get());
                   prelu || dynamic_cast<Relu*>(layer.get())) {
            size_t channels = prelu ? prelu->channels()
                                    : dynamic_cast<Relu*>(layer.get())->channels();
            if (act_index >= mask.layers.size() || mask.layers[act_index].size() != channels)
                throw ShapeMismatch("mask does not match network activation layers");
            if (hists.size() == 1 && channels > 1) hists.assign(channels, hists[0]);
            if (hists.size() != channels)
                throw ShapeMismatch("histogram width does not match activation width");
            for (size_t c = 0; c < channels; ++c) {
                if (!mask.layers[act_index][c]) continue;
                Hist shifted;
                for (auto& [len, mass] : hists[c]) shifted.emplace(len + 1, std::move(mass));
                hists[c] = std::move(shifted);
            }
            mixed = false;
            ++act_index;
        } else {
            throw UnsupportedLayer("histogram forward pass cannot handle '" + layer->kind() +
                                   "'");
        }
    }
    if (act_index != mask.layers.size())
        throw ShapeMismatch("mask has more layers than the network");

    Hist final = mixed ? hists[0] : sum_all();
    PathHistogram out(mode);
    for (const auto& [len, mass] : final) out.add(len, mass);
    return out;
}

}  // namespace corenet::tensornet

#endif  // CORENET_TENSORNET_EXPORT_DAG_HPP
