#ifndef CORENET_LINEARIZE_STATE_HPP
#define CORENET_LINEARIZE_STATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "corenet/linearize/regularizer.hpp"
#include "corenet/pathgraph/mask.hpp"
#include "corenet/tensornet/network.hpp"

namespace corenet::linearize {

enum class ControllerPhase { regularizing, stopped };

// Book-keeping for a linearization run: which units froze and when, the
// current effective omega, and whether the controller has stopped.
// Frozen units never return to active.
struct LinearizationState {
    std::vector<std::vector<uint8_t>> active;      // 1 = active, per prelu layer
    std::vector<std::vector<int>> freeze_epoch;    // -1 while active
    double omega = 0.0;
    ControllerPhase phase = ControllerPhase::regularizing;

    static LinearizationState from_network(tensornet::Network& net, double initial_omega) {
        LinearizationState state;
        state.omega = initial_omega;
        for (auto* prelu : net.prelu_layers()) {
            state.active.push_back(prelu->channel_active());
            state.freeze_epoch.emplace_back(prelu->channels(), -1);
            for (size_t c = 0; c < prelu->channels(); ++c)
                if (!prelu->channel_is_active(c)) state.freeze_epoch.back()[c] = 0;
        }
        return state;
    }

    size_t total_units() const {
        size_t n = 0;
        for (const auto& layer : active) n += layer.size();
        return n;
    }

    size_t frozen_count() const {
        size_t n = 0;
        for (const auto& layer : active)
            for (uint8_t bit : layer) n += bit ? 0 : 1;
        return n;
    }

    double inactive_fraction() const {
        const size_t total = total_units();
        if (total == 0) throw EmptyMask("linearization state over zero units");
        return static_cast<double>(frozen_count()) / static_cast<double>(total);
    }

    pathgraph::ActivationMask mask() const {
        pathgraph::ActivationMask m;
        m.layers = active;
        return m;
    }
};

// Snap every active unit whose slope reached the threshold to exactly 1
// and freeze it permanently. Called after each optimizer step.
inline size_t freeze_sweep(LinearizationState& state, tensornet::Network& net,
                           const RegularizerConfig& config, int epoch) {
    const auto prelus = net.prelu_layers();
    if (prelus.size() != state.active.size())
        throw ShapeMismatch("state does not match network prelu layers");
    size_t newly_frozen = 0;
    for (size_t li = 0; li < prelus.size(); ++li) {
        auto* prelu = prelus[li];
        if (state.active[li].size() != prelu->channels())
            throw ShapeMismatch("state layer width mismatch");
        for (size_t c = 0; c < prelu->channels(); ++c) {
            if (!state.active[li][c]) continue;
            const double slope = prelu->slopes().value.data[c];
            if (slope >= config.freeze_threshold) {  // covers overshoot past 1
                prelu->deactivate_channel(c);
                state.active[li][c] = 0;
                state.freeze_epoch[li][c] = epoch;
                ++newly_frozen;
            }
        }
    }
    return newly_frozen;
}

// Stop (omega = 0) as soon as the inactive fraction enters the target band;
// decay omega when close. The stop check runs after every freeze sweep so a
// fast-moving run cannot blow far past the goal, while the decay applies at
// most once per epoch (epoch_boundary). Never stops below target - band.
inline void controller_step(LinearizationState& state, const RegularizerConfig& config,
                            bool epoch_boundary = true) {
    if (!config.target_inactive || state.phase == ControllerPhase::stopped) return;
    const double f = state.inactive_fraction();
    const double target = *config.target_inactive;
    if (f >= target - config.target_band) {
        state.omega = 0.0;
        state.phase = ControllerPhase::stopped;
    } else if (epoch_boundary && f >= target - config.slowdown_band) {
        state.omega *= config.omega_decay;
    }
}

// Total penalty over the network's active units.
inline double reg_penalty(tensornet::Network& net, const LinearizationState& state,
                          const RegularizerConfig& config) {
    double total = 0.0;
    const auto prelus = net.prelu_layers();
    for (size_t li = 0; li < prelus.size(); ++li)
        for (size_t c = 0; c < prelus[li]->channels(); ++c) {
            if (!state.active[li][c]) continue;
            total += reg_penalty_term(prelus[li]->slopes().value.data[c], state.omega,
                                      config.exponent);
        }
    return total;
}

// Add the penalty gradient onto the slope gradients of active units.
inline void accumulate_reg_gradient(tensornet::Network& net, const LinearizationState& state,
                                    const RegularizerConfig& config) {
    if (state.omega == 0.0) return;
    const auto prelus = net.prelu_layers();
    for (size_t li = 0; li < prelus.size(); ++li)
        for (size_t c = 0; c < prelus[li]->channels(); ++c) {
            if (!state.active[li][c]) continue;
            auto& slopes = prelus[li]->slopes();
            slopes.grad.data[c] += reg_gradient(slopes.value.data[c], state.omega,
                                                config.grad_clamp, config.exponent);
        }
}

inline nlohmann::ordered_json state_to_json(const LinearizationState& state) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["omega"] = state.omega;
    j["phase"] = state.phase == ControllerPhase::stopped ? "stopped" : "regularizing";
    j["active"] = state.active;
    j["freeze_epoch"] = state.freeze_epoch;
    return j;
}

inline LinearizationState state_from_json(const nlohmann::json& j) {
    try {
        LinearizationState state;
        state.omega = j.at("omega").get<double>();
        state.phase = j.at("phase").get<std::string>() == "stopped"
                          ? ControllerPhase::stopped
                          : ControllerPhase::regularizing;
        state.active = j.at("active").get<std::vector<std::vector<uint8_t>>>();
        state.freeze_epoch = j.at("freeze_epoch").get<std::vector<std::vector<int>>>();
        if (state.active.size() != state.freeze_epoch.size())
            throw InvalidSpec("state layer count mismatch");
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed linearization state: ") + e.what());
    }
}

}  // namespace corenet::linearize

#endif  // CORENET_LINEARIZE_STATE_HPP
