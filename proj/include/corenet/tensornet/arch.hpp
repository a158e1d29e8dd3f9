#ifndef CORENET_TENSORNET_ARCH_HPP
#define CORENET_TENSORNET_ARCH_HPP

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "corenet/tensornet/network.hpp"

namespace corenet::tensornet {

// Residual stack described by a handful of knobs: n blocks of
// [act -> linear -> act -> linear] with an identity skip, a linear stem in
// front and a classifier head behind. kind selects dense or conv blocks.
struct ArchConfig {
    std::string kind = "dense";        // "dense" | "conv"
    std::vector<size_t> input_shape;   // {features} or {C,H,W}
    size_t classes = 2;
    size_t width = 16;
    double width_factor = 1.0;
    size_t blocks = 2;
    bool residual = true;
    bool batchnorm = false;

    size_t effective_width() const {
        const double w = std::round(static_cast<double>(width) * width_factor);
        return w < 1.0 ? 1 : static_cast<size_t>(w);
    }

    // Two activation layers per block.
    size_t activation_layers() const { return 2 * blocks; }

    void validate() const {
        if (kind != "dense" && kind != "conv")
            throw InvalidSpec("arch.kind must be 'dense' or 'conv'");
        if (kind == "dense" && input_shape.size() != 1)
            throw InvalidSpec("dense arch expects input [features]");
        if (kind == "conv" && input_shape.size() != 3)
            throw InvalidSpec("conv arch expects input [C,H,W]");
        if (classes < 2) throw InvalidSpec("arch.classes must be >= 2");
        if (blocks == 0) throw InvalidSpec("arch.blocks must be >= 1");
        if (width == 0) throw InvalidSpec("arch.width must be >= 1");
        if (width_factor <= 0.0) throw InvalidSpec("arch.width_factor must be > 0");
    }
};

inline nlohmann::ordered_json arch_to_json(const ArchConfig& arch) {
    return {{"kind", arch.kind},       {"input", arch.input_shape},
            {"classes", arch.classes}, {"width", arch.width},
            {"width_factor", arch.width_factor}, {"blocks", arch.blocks},
            {"residual", arch.residual}, {"batchnorm", arch.batchnorm}};
}

inline ArchConfig arch_from_json(const nlohmann::json& j) {
    try {
        ArchConfig arch;
        arch.kind = j.value("kind", arch.kind);
        if (j.contains("input")) arch.input_shape = j.at("input").get<std::vector<size_t>>();
        arch.classes = j.value("classes", arch.classes);
        arch.width = j.value("width", arch.width);
        arch.width_factor = j.value("width_factor", arch.width_factor);
        arch.blocks = j.value("blocks", arch.blocks);
        arch.residual = j.value("residual", arch.residual);
        arch.batchnorm = j.value("batchnorm", arch.batchnorm);
        arch.validate();
        return arch;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed arch config: ") + e.what());
    }
}

namespace detail {

inline std::string block_name(size_t i, const char* part) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "blk%02zu.%s", i, part);
    return buf;
}

}  // namespace detail

// Builds the stack with ReLU placeholders at the activation sites (the
// training-phase form; PReLUs are attached later).
inline Network build_network(const ArchConfig& arch, SeededRng& init_rng) {
    arch.validate();
    Network net;
    const size_t w = arch.effective_width();

    if (arch.kind == "dense") {
        net.emplace<Dense>("stem", arch.input_shape[0], w);
        for (size_t b = 0; b < arch.blocks; ++b) {
            if (arch.residual) net.emplace<ResidualBegin>();
            if (arch.batchnorm) net.emplace<BatchNorm>(detail::block_name(b, "bn1"), w);
            net.emplace<Relu>(w);
            net.emplace<Dense>(detail::block_name(b, "fc1"), w, w);
            if (arch.batchnorm) net.emplace<BatchNorm>(detail::block_name(b, "bn2"), w);
            net.emplace<Relu>(w);
            net.emplace<Dense>(detail::block_name(b, "fc2"), w, w);
            if (arch.residual) net.emplace<ResidualEnd>();
        }
        net.emplace<Dense>("head", w, arch.classes);
    } else {
        net.emplace<Conv2d>("stem", arch.input_shape[0], w, 3, 1, 1);
        for (size_t b = 0; b < arch.blocks; ++b) {
            if (arch.residual) net.emplace<ResidualBegin>();
            if (arch.batchnorm) net.emplace<BatchNorm>(detail::block_name(b, "bn1"), w);
            net.emplace<Relu>(w);
            net.emplace<Conv2d>(detail::block_name(b, "conv1"), w, w, 3, 1, 1);
            if (arch.batchnorm) net.emplace<BatchNorm>(detail::block_name(b, "bn2"), w);
            net.emplace<Relu>(w);
            net.emplace<Conv2d>(detail::block_name(b, "conv2"), w, w, 3, 1, 1);
            if (arch.residual) net.emplace<ResidualEnd>();
        }
        net.emplace<AvgPool>();
        net.emplace<Dense>("head", w, arch.classes);
    }

    init_kaiming(net, init_rng);
    return net;
}

}  // namespace corenet::tensornet

#endif  // CORENET_TENSORNET_ARCH_HPP
