#ifndef CORENET_HARNESS_EXPERIMENT_HPP
#define CORENET_HARNESS_EXPERIMENT_HPP

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include "corenet/harness/config.hpp"
#include "corenet/harness/record.hpp"
#include "corenet/linearize/run.hpp"
#include "corenet/tensornet/checkpoint.hpp"
#include "corenet/tensornet/stats.hpp"
#include "corenet/transfer/mask_transfer.hpp"

namespace corenet::harness {

struct RunResult {
    ExperimentRecord record;
    tensornet::Network net;
    std::optional<linearize::LinearizationState> state;  // set when linearization ran
    pathgraph::ActivationMask mask;
    double final_test_accuracy = 0.0;
};

// Reshape image tensors for dense stacks.
inline tensornet::DataSplit adapt_split(const tensornet::DataSplit& split,
                                        const tensornet::ArchConfig& arch) {
    if (arch.kind == "dense" && split.x.rank() == 4) {
        tensornet::DataSplit out;
        out.x = split.x.reshaped({split.x.shape[0], split.x.numel() / split.x.shape[0]});
        out.y = split.y;
        return out;
    }
    return split;
}

namespace detail {

inline MetricsRow snapshot_row(tensornet::Network& net, const pathgraph::ActivationMask& mask,
                               int epoch, const std::string& phase, double lr,
                               double train_loss, double train_acc,
                               const tensornet::DataSplit& test, size_t batch_size,
                               double omega, const tensornet::NonlinearityStats* cached = nullptr) {
    MetricsRow row;
    row.epoch = epoch;
    row.phase = phase;
    row.lr = lr;
    row.train_loss = train_loss;
    row.train_acc = train_acc;
    row.test_acc = tensornet::evaluate(net, test, batch_size).accuracy;
    const auto nl = cached ? *cached : tensornet::nonlinearity_stats(net, mask);
    row.active_fraction = nl.active_fraction;
    row.enw = nl.enw;
    row.apl = nl.apl;
    row.napl = nl.napl;
    row.omega = omega;
    return row;
}

// Channel- and neuron-granularity exports must tell the same story on
// dense stacks.
inline void cross_check_granularity(tensornet::Network& net,
                                    const pathgraph::ActivationMask& mask) {
    const auto chan = tensornet::network_to_dag(net, mask, tensornet::DagGranularity::channel);
    const auto neur = tensornet::network_to_dag(net, mask, tensornet::DagGranularity::neuron);
    for (const auto mode :
         {pathgraph::HistogramMode::unnormalized, pathgraph::HistogramMode::normalized}) {
        if (!(pathgraph::sink_histogram(chan, mode) == pathgraph::sink_histogram(neur, mode)))
            throw Error("granularity cross-check failed on a dense network");
    }
}

}  // namespace detail

// Training phase only: the conventional run with ReLU units.
inline RunResult train_phase(const ExperimentConfig& config, uint64_t seed,
                             ExperimentRecord* append_to = nullptr) {
    config.validate();
    auto dataset = gen_dataset(config.dataset);
    const auto train_split = adapt_split(dataset.train, config.arch);
    const auto test_split = adapt_split(dataset.test, config.arch);

    auto init_rng = SeededRng::derive(seed, "init");
    RunResult result;
    result.net = tensornet::build_network(config.arch, init_rng);

    ExperimentRecord local;
    ExperimentRecord& record = append_to ? *append_to : local;

    result.mask = tensornet::current_mask(result.net);
    const auto all_active_stats = tensornet::nonlinearity_stats(result.net, result.mask);
    record.rows.push_back(detail::snapshot_row(result.net, result.mask, 0, "init",
                                               config.train.lr, 0.0, 0.0, test_split,
                                               config.train.batch_size, 0.0,
                                               &all_active_stats));

    auto epoch_rng = SeededRng::derive(seed, "train-epochs");
    tensornet::SgdMomentum optimizer(config.train.momentum, config.train.weight_decay);
    for (size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
        const double lr = tensornet::multistep_lr(epoch, config.train.lr,
                                                  config.train.milestones, config.train.gamma);
        const auto stats =
            tensornet::train_epoch(result.net, train_split, config.train, optimizer, lr,
                                   epoch_rng);
        record.rows.push_back(detail::snapshot_row(
            result.net, result.mask, static_cast<int>(epoch) + 1, "train", lr, stats.task_loss,
            stats.accuracy, test_split, config.train.batch_size, 0.0, &all_active_stats));
    }
    result.final_test_accuracy =
        tensornet::evaluate(result.net, test_split, config.train.batch_size).accuracy;
    if (!append_to) result.record = std::move(local);
    return result;
}

// The full protocol: conventional training, then the linearization phase
// with the schedule restarted at the base learning rate.
inline RunResult run_experiment(const ExperimentConfig& config, uint64_t seed,
                                const std::string& out_dir = "") {
    const auto started = std::chrono::steady_clock::now();
    RunResult result = train_phase(config, seed, nullptr);
    result.record.manifest.config_digest = config_digest(config);
    result.record.manifest.seed = seed;

    const auto flush = [&](bool partial) {
        if (out_dir.empty()) return;
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        result.record.manifest.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write_text_file(out_dir + "/metrics.csv", metrics_csv(result.record));
        write_text_file(out_dir + "/manifest.json",
                        manifest_to_json(result.record.manifest).dump(2) + "\n");
        write_text_file(out_dir + "/config.json", config_to_json(config).dump(2) + "\n");
        if (!partial) {
            transfer::save_mask(result.mask, out_dir + "/mask.json");
            tensornet::save_checkpoint(result.net, out_dir + "/checkpoint.bin");
            if (result.state)
                write_text_file(out_dir + "/state.json",
                                linearize::state_to_json(*result.state).dump(2) + "\n");
        }
    };

    try {
        auto dataset = gen_dataset(config.dataset);
        const auto train_split = adapt_split(dataset.train, config.arch);
        const auto test_split = adapt_split(dataset.test, config.arch);

        linearize::attach_prelus(result.net, 0.0);

        linearize::LinearizeRunArgs args;
        args.phase = config.linearize_phase;
        args.reg = config.reg;
        args.epoch_offset = static_cast<int>(config.train.epochs);
        auto lin_rng = SeededRng::derive(seed, "linearize-epochs");
        result.state = linearize::linearization_run(result.net, train_split, test_split, args,
                                                    lin_rng, &result.record);
        result.mask = result.state->mask();
        result.final_test_accuracy =
            tensornet::evaluate(result.net, test_split, config.linearize_phase.batch_size)
                .accuracy;
        if (config.arch.kind == "dense")
            detail::cross_check_granularity(result.net, result.mask);
        result.record.validate();
    } catch (...) {
        flush(true);  // keep the partial record for post-mortem
        throw;
    }
    flush(false);
    return result;
}

// Single continuous run that switches the regularizer on at a chosen epoch:
// one schedule over all epochs, ReLU units before the switch, regularized
// PReLUs after. Grid points may override omega.
inline RunResult run_linearize_at(const ExperimentConfig& config, size_t start_epoch,
                                  uint64_t seed, std::optional<double> omega_override = {}) {
    config.validate();
    if (start_epoch > config.train.epochs)
        throw InvalidSpec("regularizer start epoch beyond total epochs");

    auto dataset = gen_dataset(config.dataset);
    const auto train_split = adapt_split(dataset.train, config.arch);
    const auto test_split = adapt_split(dataset.test, config.arch);

    auto init_rng = SeededRng::derive(seed, "init");
    RunResult result;
    result.net = tensornet::build_network(config.arch, init_rng);
    result.record.manifest.config_digest = config_digest(config);
    result.record.manifest.seed = seed;

    linearize::RegularizerConfig reg = config.reg;
    if (omega_override) reg.omega = *omega_override;

    result.mask = tensornet::current_mask(result.net);
    const auto all_active_stats = tensornet::nonlinearity_stats(result.net, result.mask);
    result.record.rows.push_back(detail::snapshot_row(result.net, result.mask, 0, "init",
                                                      config.train.lr, 0.0, 0.0, test_split,
                                                      config.train.batch_size, 0.0,
                                                      &all_active_stats));

    auto epoch_rng = SeededRng::derive(seed, "train-epochs");
    tensornet::SgdMomentum optimizer(config.train.momentum, config.train.weight_decay);
    std::optional<linearize::LinearizationState> state;
    int current_epoch = 0;

    tensornet::StepHooks hooks;
    hooks.penalty = [&]() { return state ? linearize::reg_penalty(result.net, *state, reg) : 0.0; };
    hooks.accumulate_grads = [&]() {
        if (state) linearize::accumulate_reg_gradient(result.net, *state, reg);
    };
    hooks.after_step = [&]() {
        if (!state) return;
        linearize::freeze_sweep(*state, result.net, reg, current_epoch);
        linearize::controller_step(*state, reg, false);
    };

    for (size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
        if (!state && epoch == start_epoch) {
            linearize::attach_prelus(result.net, 0.0);
            state = linearize::LinearizationState::from_network(result.net, reg.omega);
        }
        current_epoch = static_cast<int>(epoch) + 1;
        const double lr = tensornet::multistep_lr(epoch, config.train.lr,
                                                  config.train.milestones, config.train.gamma);
        const auto stats = tensornet::train_epoch(result.net, train_split, config.train,
                                                  optimizer, lr, epoch_rng,
                                                  state ? &hooks : nullptr);
        if (state) linearize::controller_step(*state, reg);

        const auto mask = state ? state->mask() : tensornet::current_mask(result.net);
        const tensornet::NonlinearityStats* cached = state ? nullptr : &all_active_stats;
        result.record.rows.push_back(detail::snapshot_row(
            result.net, mask, current_epoch, state ? "linearize" : "train", lr,
            stats.task_loss, stats.accuracy, test_split, config.train.batch_size,
            state ? state->omega : 0.0, cached));
    }

    if (!state) {  // start_epoch == total epochs: attach only
        linearize::attach_prelus(result.net, 0.0);
        state = linearize::LinearizationState::from_network(result.net, reg.omega);
    }
    result.state = std::move(state);
    result.mask = result.state->mask();
    result.final_test_accuracy =
        tensornet::evaluate(result.net, test_split, config.train.batch_size).accuracy;
    result.record.validate();
    return result;
}

}  // namespace corenet::harness

#endif  // CORENET_HARNESS_EXPERIMENT_HPP
