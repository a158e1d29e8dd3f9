#ifndef CORENET_LINEARIZE_RUN_HPP
#define CORENET_LINEARIZE_RUN_HPP

#include <cmath>

#include "corenet/harness/record.hpp"
#include "corenet/linearize/state.hpp"
#include "corenet/tensornet/stats.hpp"
#include "corenet/tensornet/train.hpp"

namespace corenet::linearize {

struct LinearizeRunArgs {
    tensornet::PhaseConfig phase;  // schedule restarts at the base learning rate
    RegularizerConfig reg;
    int epoch_offset = 0;          // global epoch numbering for the record
};

namespace detail {

// Optional post-stop pull of the surviving slopes toward 0 (turns the
// remaining PReLUs back into ReLUs). Off by default.
inline void accumulate_to_zero_gradient(tensornet::Network& net,
                                        const LinearizationState& state,
                                        const RegularizerConfig& config) {
    const auto prelus = net.prelu_layers();
    for (size_t li = 0; li < prelus.size(); ++li)
        for (size_t c = 0; c < prelus[li]->channels(); ++c) {
            if (!state.active[li][c]) continue;
            auto& slopes = prelus[li]->slopes();
            const double slope = slopes.value.data[c];
            const double mag = std::max(std::abs(slope), config.grad_clamp);
            const double sign = slope >= 0.0 ? 1.0 : -1.0;
            slopes.grad.data[c] += config.omega * config.exponent *
                                   std::pow(mag, config.exponent - 1.0) * sign;
        }
}

inline double to_zero_penalty(tensornet::Network& net, const LinearizationState& state,
                              const RegularizerConfig& config) {
    double total = 0.0;
    const auto prelus = net.prelu_layers();
    for (size_t li = 0; li < prelus.size(); ++li)
        for (size_t c = 0; c < prelus[li]->channels(); ++c) {
            if (!state.active[li][c]) continue;
            total += config.omega *
                     std::pow(std::abs(prelus[li]->slopes().value.data[c]), config.exponent);
        }
    return total;
}

}  // namespace detail

// The linearization phase: regularized training with per-step freezing and
// the per-epoch controller. Appends one metrics row per epoch when a record
// is given. Returns the final state.
inline LinearizationState linearization_run(tensornet::Network& net,
                                            const tensornet::DataSplit& train,
                                            const tensornet::DataSplit& test,
                                            const LinearizeRunArgs& args, SeededRng& rng,
                                            harness::ExperimentRecord* record) {
    args.phase.validate();
    args.reg.validate();
    if (net.prelu_layers().empty())
        throw InvalidSpec("linearization needs a network with PReLU activations");

    LinearizationState state = LinearizationState::from_network(net, args.reg.omega);
    tensornet::SgdMomentum optimizer(args.phase.momentum, args.phase.weight_decay);

    int current_epoch = args.epoch_offset;
    tensornet::StepHooks hooks;
    hooks.penalty = [&]() {
        double p = reg_penalty(net, state, args.reg);
        if (args.reg.regularize_remaining_to_zero && state.phase == ControllerPhase::stopped)
            p += detail::to_zero_penalty(net, state, args.reg);
        return p;
    };
    hooks.accumulate_grads = [&]() {
        accumulate_reg_gradient(net, state, args.reg);
        if (args.reg.regularize_remaining_to_zero && state.phase == ControllerPhase::stopped)
            detail::accumulate_to_zero_gradient(net, state, args.reg);
    };
    hooks.after_step = [&]() {
        freeze_sweep(state, net, args.reg, current_epoch);
        controller_step(state, args.reg, false);  // stop check only
    };

    for (size_t local = 0; local < args.phase.epochs; ++local) {
        current_epoch = args.epoch_offset + static_cast<int>(local) + 1;
        const double lr =
            tensornet::multistep_lr(local, args.phase.lr, args.phase.milestones, args.phase.gamma);
        const auto stats = tensornet::train_epoch(net, train, args.phase, optimizer, lr, rng,
                                                  &hooks);
        controller_step(state, args.reg);

        if (record) {
            const auto test_stats = tensornet::evaluate(net, test, args.phase.batch_size);
            const auto nl = tensornet::nonlinearity_stats(net, state.mask());
            harness::MetricsRow row;
            row.epoch = current_epoch;
            row.phase = "linearize";
            row.lr = lr;
            row.train_loss = stats.task_loss;
            row.train_acc = stats.accuracy;
            row.test_acc = test_stats.accuracy;
            row.active_fraction = nl.active_fraction;
            row.enw = nl.enw;
            row.apl = nl.apl;
            row.napl = nl.napl;
            row.omega = state.omega;
            record->rows.push_back(std::move(row));
        }
    }
    return state;
}

}  // namespace corenet::linearize

#endif  // CORENET_LINEARIZE_RUN_HPP
