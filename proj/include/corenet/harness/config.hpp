#ifndef CORENET_HARNESS_CONFIG_HPP
#define CORENET_HARNESS_CONFIG_HPP

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corenet/harness/dataset.hpp"
#include "corenet/linearize/regularizer.hpp"
#include "corenet/tensornet/arch.hpp"
#include "corenet/tensornet/train.hpp"

namespace corenet::harness {

inline nlohmann::ordered_json phase_to_json(const tensornet::PhaseConfig& p) {
    return {{"epochs", p.epochs},       {"lr", p.lr},
            {"milestones", p.milestones}, {"gamma", p.gamma},
            {"momentum", p.momentum},   {"weight_decay", p.weight_decay},
            {"batch_size", p.batch_size}, {"augment_flip", p.augment_flip}};
}

inline tensornet::PhaseConfig phase_from_json(const nlohmann::json& j,
                                              const tensornet::PhaseConfig& defaults) {
    try {
        tensornet::PhaseConfig p = defaults;
        p.epochs = j.value("epochs", p.epochs);
        p.lr = j.value("lr", p.lr);
        if (j.contains("milestones"))
            p.milestones = j.at("milestones").get<std::vector<size_t>>();
        p.gamma = j.value("gamma", p.gamma);
        p.momentum = j.value("momentum", p.momentum);
        p.weight_decay = j.value("weight_decay", p.weight_decay);
        p.batch_size = j.value("batch_size", p.batch_size);
        p.augment_flip = j.value("augment_flip", p.augment_flip);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed phase config: ") + e.what());
    }
}

inline nlohmann::ordered_json reg_to_json(const linearize::RegularizerConfig& r) {
    nlohmann::ordered_json j{{"omega", r.omega},
                             {"exponent", r.exponent},
                             {"freeze_threshold", r.freeze_threshold},
                             {"active_margin", r.active_margin},
                             {"grad_clamp", r.grad_clamp},
                             {"target_band", r.target_band},
                             {"slowdown_band", r.slowdown_band},
                             {"omega_decay", r.omega_decay},
                             {"regularize_remaining_to_zero", r.regularize_remaining_to_zero}};
    if (r.target_inactive) j["target_inactive"] = *r.target_inactive;
    return j;
}

inline linearize::RegularizerConfig reg_from_json(const nlohmann::json& j) {
    try {
        linearize::RegularizerConfig r;
        r.omega = j.value("omega", r.omega);
        r.exponent = j.value("exponent", r.exponent);
        r.freeze_threshold = j.value("freeze_threshold", r.freeze_threshold);
        r.active_margin = j.value("active_margin", r.active_margin);
        r.grad_clamp = j.value("grad_clamp", r.grad_clamp);
        if (j.contains("target_inactive") && !j.at("target_inactive").is_null())
            r.target_inactive = j.at("target_inactive").get<double>();
        r.target_band = j.value("target_band", r.target_band);
        r.slowdown_band = j.value("slowdown_band", r.slowdown_band);
        r.omega_decay = j.value("omega_decay", r.omega_decay);
        r.regularize_remaining_to_zero =
            j.value("regularize_remaining_to_zero", r.regularize_remaining_to_zero);
        r.validate();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed regularizer config: ") + e.what());
    }
}

// The whole experiment: architecture, both phases, the regularizer, the
// dataset, seeds, output directory. Validated before anything runs.
struct ExperimentConfig {
    tensornet::ArchConfig arch;
    tensornet::PhaseConfig train;
    tensornet::PhaseConfig linearize_phase;
    linearize::RegularizerConfig reg;
    DatasetSpec dataset;
    uint64_t seed = 1;
    std::vector<uint64_t> seeds;  // optional; multi-seed drivers use this
    std::string out_dir = "runs";

    ExperimentConfig() {
        // post-training phase defaults; shorter than the training phase,
        // milestones at 1/3 and 2/3
        linearize_phase.epochs = 60;
        linearize_phase.milestones = {20, 40};
        linearize_phase.batch_size = 256;
    }

    void validate() const {
        arch.validate();
        train.validate();
        linearize_phase.validate();
        reg.validate();
        dataset.validate();
        if (arch.kind == "dense") {
            size_t features = 1;
            if (dataset.kind == "spirals" || dataset.kind == "blobs") features = 2;
            if ((dataset.kind == "spirals" || dataset.kind == "blobs") &&
                arch.input_shape != std::vector<size_t>{features})
                throw InvalidSpec("dense arch input must be [2] for generated 2-d datasets");
        }
        if (train.augment_flip &&
            (dataset.kind == "spirals" || dataset.kind == "blobs" || dataset.kind == "csv"))
            throw InvalidSpec("horizontal flip only applies to image datasets");
    }
};

// Milestones at 1/3 and 2/3 of the phase length, the default proportions
// for the post-training phase.
inline std::vector<size_t> default_linearize_milestones(size_t epochs) {
    if (epochs < 3) return {};
    return {epochs / 3, 2 * epochs / 3};
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["arch"] = tensornet::arch_to_json(c.arch);
    j["train"] = phase_to_json(c.train);
    auto lin = phase_to_json(c.linearize_phase);
    const auto reg = reg_to_json(c.reg);
    for (const auto& [key, value] : reg.items()) lin[key] = value;
    j["linearize"] = lin;
    j["dataset"] = dataset_spec_to_json(c.dataset);
    j["seed"] = c.seed;
    if (!c.seeds.empty()) j["seeds"] = c.seeds;
    j["out_dir"] = c.out_dir;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    try {
        if (!j.contains("schema_version"))
            throw InvalidSpec("config is missing schema_version");
        if (j.at("schema_version").get<int>() != 1)
            throw InvalidSpec("unsupported config schema_version");
        ExperimentConfig c;
        if (j.contains("arch")) c.arch = tensornet::arch_from_json(j.at("arch"));
        if (j.contains("train")) c.train = phase_from_json(j.at("train"), c.train);
        if (j.contains("linearize")) {
            const auto& lin = j.at("linearize");
            c.linearize_phase = phase_from_json(lin, c.linearize_phase);
            if (!lin.contains("milestones"))
                c.linearize_phase.milestones =
                    default_linearize_milestones(c.linearize_phase.epochs);
            c.reg = reg_from_json(lin);
        }
        if (j.contains("dataset")) c.dataset = dataset_spec_from_json(j.at("dataset"));
        c.seed = j.value("seed", c.seed);
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
        c.out_dir = j.value("out_dir", c.out_dir);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed experiment config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

inline std::string config_digest(const ExperimentConfig& c) {
    const std::string dump = config_to_json(c).dump();
    uint64_t h = 0xcbf29ce484222325ull;
    for (char ch : dump) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace corenet::harness

#endif  // CORENET_HARNESS_CONFIG_HPP
