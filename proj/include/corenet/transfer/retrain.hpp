#ifndef CORENET_TRANSFER_RETRAIN_HPP
#define CORENET_TRANSFER_RETRAIN_HPP

#include <cmath>
#include <string>
#include <vector>

#include "corenet/format.hpp"
#include "corenet/parallel.hpp"
#include "corenet/tensornet/stats.hpp"
#include "corenet/tensornet/train.hpp"
#include "corenet/transfer/mask_transfer.hpp"

namespace corenet::transfer {

struct RetrainConfig {
    tensornet::ArchConfig arch;
    tensornet::PhaseConfig train;      // the full original training schedule
    std::vector<MaskPermutationMode> modes{MaskPermutationMode::exact,
                                           MaskPermutationMode::layerwise,
                                           MaskPermutationMode::global};
    size_t seeds = 5;
    uint64_t master_seed = 1;
    size_t threads = 1;
};

struct RetrainRow {
    std::string mode;
    uint64_t seed = 0;
    double final_accuracy = 0.0;
    double active_fraction = 0.0;
    double enw = 0.0;
    double napl = 0.0;
};

struct RetrainSummary {
    std::string mode;
    size_t runs = 0;
    double mean_accuracy = 0.0;
    double stddev_accuracy = 0.0;  // sample standard deviation
};

struct RetrainComparison {
    std::vector<RetrainRow> rows;          // mode-major, seed order within mode
    std::vector<RetrainSummary> summaries;
    double linearized_accuracy = 0.0;      // the network the masks came from
};

// From-scratch retraining with transferred masks: the mask is re-shuffled
// per seed, everything else (weights, optimizer) reinitializes from the
// seed's own streams, and training runs the full schedule without any
// regularizer.
inline RetrainComparison retrain_compare(const pathgraph::ActivationMask& baseline_mask,
                                         const tensornet::DataSplit& train,
                                         const tensornet::DataSplit& test,
                                         const RetrainConfig& config,
                                         double linearized_accuracy) {
    config.train.validate();
    config.arch.validate();
    if (config.modes.empty() || config.seeds == 0)
        throw InvalidSpec("retrain needs at least one mode and one seed");

    RetrainComparison result;
    result.linearized_accuracy = linearized_accuracy;
    const size_t total = config.modes.size() * config.seeds;
    result.rows.resize(total);

    parallel_for(total, config.threads, [&](size_t i) {
        const MaskPermutationMode mode = config.modes[i / config.seeds];
        const uint64_t seed_index = i % config.seeds;
        const std::string tag =
            std::string(mode_name(mode)) + "/" + std::to_string(seed_index);

        auto perm_rng = SeededRng::derive(config.master_seed, "permute/" + tag);
        const auto mask = permute_mask(baseline_mask, mode, perm_rng);

        auto init_rng = SeededRng::derive(config.master_seed, "retrain-init/" + tag);
        auto net = apply_mask_to_fresh(config.arch, mask, init_rng);

        auto train_rng = SeededRng::derive(config.master_seed, "retrain-epochs/" + tag);
        tensornet::SgdMomentum optimizer(config.train.momentum, config.train.weight_decay);
        for (size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
            const double lr = tensornet::multistep_lr(epoch, config.train.lr,
                                                      config.train.milestones,
                                                      config.train.gamma);
            tensornet::train_epoch(net, train, config.train, optimizer, lr, train_rng);
        }

        RetrainRow row;
        row.mode = mode_name(mode);
        row.seed = seed_index;
        row.final_accuracy = tensornet::evaluate(net, test, config.train.batch_size).accuracy;
        const auto nl = tensornet::nonlinearity_stats(net, mask);
        row.active_fraction = nl.active_fraction;
        row.enw = nl.enw;
        row.napl = nl.napl;
        result.rows[i] = std::move(row);
    });

    for (const auto mode : config.modes) {
        RetrainSummary summary;
        summary.mode = mode_name(mode);
        std::vector<double> accs;
        for (const auto& row : result.rows)
            if (row.mode == summary.mode) accs.push_back(row.final_accuracy);
        summary.runs = accs.size();
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        summary.mean_accuracy = mean;
        summary.stddev_accuracy =
            accs.size() > 1 ? std::sqrt(var / static_cast<double>(accs.size() - 1)) : 0.0;
        result.summaries.push_back(std::move(summary));
    }
    return result;
}

inline constexpr const char* kRetrainCsvHeader =
    "mode,seed,final_accuracy,active_fraction,enw,napl";

inline std::string retrain_csv(const RetrainComparison& comparison) {
    std::string out = std::string(kRetrainCsvHeader) + "\n";
    for (const auto& row : comparison.rows) {
        out += row.mode + "," + std::to_string(row.seed);
        for (double v : {row.final_accuracy, row.active_fraction, row.enw, row.napl})
            out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

inline std::string retrain_summary_text(const RetrainComparison& comparison) {
    std::string out =
        "linearized_accuracy," + format_double(comparison.linearized_accuracy) + "\n";
    out += "mode,runs,mean_accuracy,stddev_accuracy\n";
    for (const auto& s : comparison.summaries)
        out += s.mode + "," + std::to_string(s.runs) + "," + format_double(s.mean_accuracy) +
               "," + format_double(s.stddev_accuracy) + "\n";
    return out;
}

}  // namespace corenet::transfer

#endif  // CORENET_TRANSFER_RETRAIN_HPP
