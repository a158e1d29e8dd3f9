// corenet CLI: train / linearize / analyze / permute-retrain / sweep /
// report / oracle-check. Exit codes: 0 success, 1 validation error,
// 2 runtime failure, 3 oracle mismatch.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corenet/harness/experiment.hpp"
#include "corenet/harness/oracle.hpp"
#include "corenet/harness/report.hpp"
#include "corenet/harness/sweep.hpp"
#include "corenet/pathgraph/graph_io.hpp"
#include "corenet/transfer/retrain.hpp"

namespace {

using namespace corenet;

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> grid;
    for (const auto& item : split_list(csv)) {
        try {
            grid.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw InvalidSpec("bad grid value '" + item + "'");
        }
    }
    return grid;
}

std::vector<uint64_t> parse_seeds(const std::string& csv) {
    std::vector<uint64_t> seeds;
    for (const auto& item : split_list(csv)) {
        try {
            seeds.push_back(std::stoull(item));
        } catch (const std::exception&) {
            throw InvalidSpec("bad seed '" + item + "'");
        }
    }
    return seeds;
}

void write_run_outputs(const std::string& out_dir, const harness::ExperimentConfig& config,
                       harness::RunResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    harness::write_text_file(out_dir + "/metrics.csv", harness::metrics_csv(result.record));
    harness::write_text_file(out_dir + "/manifest.json",
                             harness::manifest_to_json(result.record.manifest).dump(2) + "\n");
    harness::write_text_file(out_dir + "/config.json",
                             harness::config_to_json(config).dump(2) + "\n");
    transfer::save_mask(result.mask, out_dir + "/mask.json");
    tensornet::save_checkpoint(result.net, out_dir + "/checkpoint.bin");
    if (result.state)
        harness::write_text_file(out_dir + "/state.json",
                                 linearize::state_to_json(*result.state).dump(2) + "\n");
}

int cmd_train(const std::string& config_path, std::optional<uint64_t> seed,
              std::string out_dir) {
    auto config = harness::load_config(config_path);
    const uint64_t run_seed = seed.value_or(config.seed);
    if (out_dir.empty()) out_dir = config.out_dir;

    auto result = harness::train_phase(config, run_seed);
    result.record.manifest.config_digest = harness::config_digest(config);
    result.record.manifest.seed = run_seed;
    write_run_outputs(out_dir, config, result);
    std::cout << "trained " << config.train.epochs << " epochs, test accuracy "
              << format_double(result.final_test_accuracy) << "\n"
              << "outputs in " << out_dir << "\n";
    return 0;
}

int cmd_linearize(const std::string& config_path, const std::string& checkpoint,
                  std::optional<uint64_t> seed, std::string out_dir) {
    auto config = harness::load_config(config_path);
    const uint64_t run_seed = seed.value_or(config.seed);
    if (out_dir.empty()) out_dir = config.out_dir;

    if (checkpoint.empty()) {
        // no checkpoint: run the full two-phase protocol
        auto result = harness::run_experiment(config, run_seed, out_dir);
        std::cout << "final test accuracy " << format_double(result.final_test_accuracy)
                  << ", inactive fraction "
                  << format_double(result.state->inactive_fraction()) << "\n"
                  << "outputs in " << out_dir << "\n";
        return 0;
    }

    auto dataset = harness::gen_dataset(config.dataset);
    const auto train_split = harness::adapt_split(dataset.train, config.arch);
    const auto test_split = harness::adapt_split(dataset.test, config.arch);

    auto init_rng = SeededRng::derive(run_seed, "init");
    harness::RunResult result;
    result.net = tensornet::build_network(config.arch, init_rng);
    tensornet::load_checkpoint(result.net, checkpoint);
    linearize::attach_prelus(result.net, 0.0);

    result.record.manifest.config_digest = harness::config_digest(config);
    result.record.manifest.seed = run_seed;

    linearize::LinearizeRunArgs args;
    args.phase = config.linearize_phase;
    args.reg = config.reg;
    args.epoch_offset = 0;
    auto lin_rng = SeededRng::derive(run_seed, "linearize-epochs");
    result.state =
        linearize::linearization_run(result.net, train_split, test_split, args, lin_rng,
                                     &result.record);
    result.mask = result.state->mask();
    result.final_test_accuracy =
        tensornet::evaluate(result.net, test_split, config.linearize_phase.batch_size).accuracy;

    write_run_outputs(out_dir, config, result);
    std::cout << "linearized for " << config.linearize_phase.epochs
              << " epochs, test accuracy " << format_double(result.final_test_accuracy)
              << ", inactive fraction " << format_double(result.state->inactive_fraction())
              << "\n"
              << "outputs in " << out_dir << "\n";
    return 0;
}

void print_histogram(const pathgraph::PathHistogram& hist, const std::string& label,
                     const std::string& format, std::ostream& out) {
    if (format == "csv") {
        out << "histogram," << label << "\nlength,count\n";
        for (const auto& [len, mass] : hist.counts())
            out << len << "," << exact_to_string(mass) << "\n";
    } else {
        nlohmann::ordered_json j;
        j["mode"] = label;
        j["histogram"] = pathgraph::histogram_to_json(hist);
        j["apl"] = pathgraph::apl(hist);
        out << j.dump(2) << "\n";
    }
}

int cmd_analyze(const std::string& graph_path, const std::string& checkpoint,
                const std::string& config_path, const std::string& format,
                const std::string& out_dir) {
    pathgraph::ComputationDag dag;
    std::optional<pathgraph::ActivationMask> mask;

    if (!graph_path.empty()) {
        dag = pathgraph::load_dag(graph_path);
    } else {
        if (checkpoint.empty() || config_path.empty())
            throw InvalidSpec("analyze needs --graph, or --checkpoint with --config");
        auto config = harness::load_config(config_path);
        auto init_rng = SeededRng::derive(config.seed, "init");
        auto net = tensornet::build_network(config.arch, init_rng);
        try {
            tensornet::load_checkpoint(net, checkpoint);
        } catch (const ShapeMismatch&) {
            // checkpoint was taken after PReLUs were attached
            linearize::attach_prelus(net, 0.0);
            tensornet::load_checkpoint(net, checkpoint);
        }
        mask = tensornet::current_mask(net);
        dag = tensornet::network_to_dag(net, *mask, tensornet::DagGranularity::channel);
    }

    pathgraph::validate_dag(dag);
    const auto unnorm = pathgraph::sink_histogram(dag, pathgraph::HistogramMode::unnormalized);
    const auto norm = pathgraph::sink_histogram(dag, pathgraph::HistogramMode::normalized);

    if (!mask) {
        // reconstruct per-layer counts from node annotations, when present
        std::map<int, std::vector<uint8_t>> by_layer;
        for (const auto& node : dag.nodes)
            if (node.kind == pathgraph::NodeKind::activation && node.layer)
                by_layer[*node.layer].push_back(node.active ? 1 : 0);
        if (!by_layer.empty()) {
            pathgraph::ActivationMask m;
            for (auto& [layer, bits] : by_layer) m.layers.push_back(std::move(bits));
            mask = std::move(m);
        }
    }

    std::ostringstream report;
    print_histogram(unnorm, "unnormalized", format, report);
    print_histogram(norm, "normalized", format, report);
    if (format == "csv") {
        report << "metric,value\n";
        report << "apl," << format_double(pathgraph::apl(unnorm)) << "\n";
        report << "napl," << format_double(pathgraph::apl(norm)) << "\n";
        report << "max_effective_depth," << pathgraph::max_effective_depth(dag) << "\n";
        if (mask) {
            report << "enw," << format_double(pathgraph::enw(*mask)) << "\n";
            report << "active_fraction," << format_double(pathgraph::active_fraction(*mask))
                   << "\n";
        }
    } else {
        nlohmann::ordered_json j;
        j["apl"] = pathgraph::apl(unnorm);
        j["napl"] = pathgraph::apl(norm);
        j["max_effective_depth"] = pathgraph::max_effective_depth(dag);
        if (mask) {
            j["enw"] = pathgraph::enw(*mask);
            j["active_fraction"] = pathgraph::active_fraction(*mask);
        }
        report << j.dump(2) << "\n";
    }

    std::cout << report.str();
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        harness::write_text_file(
            out_dir + (format == "csv" ? "/analysis.csv" : "/analysis.json"), report.str());
    }
    return 0;
}

int cmd_permute_retrain(const std::string& config_path, const std::string& mask_path,
                        const std::string& modes_csv, size_t seeds, double baseline_acc,
                        std::optional<uint64_t> seed, size_t threads, std::string out_dir) {
    auto config = harness::load_config(config_path);
    if (out_dir.empty()) out_dir = config.out_dir;
    const auto mask = transfer::load_mask(mask_path);
    auto dataset = harness::gen_dataset(config.dataset);
    const auto train_split = harness::adapt_split(dataset.train, config.arch);
    const auto test_split = harness::adapt_split(dataset.test, config.arch);

    transfer::RetrainConfig rc;
    rc.arch = config.arch;
    rc.train = config.train;
    rc.seeds = seeds;
    rc.master_seed = seed.value_or(config.seed);
    rc.threads = threads;
    rc.modes.clear();
    for (const auto& name : split_list(modes_csv))
        rc.modes.push_back(transfer::mode_from_name(name));

    const auto comparison =
        transfer::retrain_compare(mask, train_split, test_split, rc, baseline_acc);

    std::filesystem::create_directories(out_dir);
    harness::write_text_file(out_dir + "/comparison.csv", transfer::retrain_csv(comparison));
    harness::write_text_file(out_dir + "/comparison_summary.csv",
                             transfer::retrain_summary_text(comparison));
    std::cout << transfer::retrain_summary_text(comparison) << "outputs in " << out_dir << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& kind,
              const std::string& grid_csv, const std::string& omega_csv,
              const std::string& seeds_csv, std::optional<uint64_t> seed, size_t threads,
              std::string out_dir) {
    auto config = harness::load_config(config_path);
    if (seed) config.seed = *seed;
    if (out_dir.empty()) out_dir = config.out_dir;

    harness::SweepConfig sweep;
    sweep.kind = harness::sweep_kind_from_name(kind);
    sweep.grid = parse_grid(grid_csv);
    if (!omega_csv.empty()) sweep.omega_overrides = parse_grid(omega_csv);
    if (!seeds_csv.empty()) sweep.seeds = parse_seeds(seeds_csv);
    sweep.threads = threads;

    const auto result = harness::run_sweep(config, sweep, out_dir);
    size_t failures = 0;
    for (const auto& p : result.points)
        if (p.status != "ok") ++failures;
    std::cout << harness::sweep_summary_csv(result);
    std::cout << "sweep finished: " << result.points.size() - failures << "/"
              << result.points.size() << " points ok, outputs in " << out_dir << "\n";
    return failures == result.points.size() ? 2 : 0;
}

int cmd_report(const std::string& records_csv, const std::string& format,
               const std::string& out_dir) {
    std::vector<harness::ExperimentRecord> records;
    for (const auto& dir : split_list(records_csv)) {
        harness::ExperimentRecord record =
            harness::metrics_from_csv(harness::read_text_file(dir + "/metrics.csv"));
        try {
            record.manifest = harness::manifest_from_json(
                nlohmann::json::parse(harness::read_text_file(dir + "/manifest.json")));
        } catch (const IoError&) {
            // metrics without a manifest are still reportable
        }
        records.push_back(std::move(record));
    }
    const auto files =
        harness::emit_report(records, harness::report_format_from_name(format), out_dir);
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
    return 0;
}

int cmd_oracle_check(int trials, size_t max_nodes, uint64_t seed) {
    const auto report = harness::oracle_check(trials, max_nodes, seed);
    std::cout << "oracle check passed: " << report.unnormalized_checked
              << " unnormalized and " << report.normalized_checked
              << " normalized graphs, DP == enumeration exactly\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"corenet: nonlinearity pruning and exact path-length analysis for small networks"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint, graph_path, mask_path;
    std::string format = "json";
    std::optional<uint64_t> seed;
    size_t threads = 1;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "experiment config file (JSON)");
        if (needs_config) opt->required();
        cmd->add_option("--seed", seed, "seed override (u64)");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--threads", threads, "worker threads for independent runs");
        cmd->add_option("--format", format, "output format: csv|json|svg");
    };

    auto* train = app.add_subcommand("train", "training phase (ReLU units)");
    add_common(train, true);

    auto* linearize_cmd =
        app.add_subcommand("linearize", "linearization phase on a checkpoint (or full run)");
    add_common(linearize_cmd, true);
    linearize_cmd->add_option("--checkpoint", checkpoint, "checkpoint from the training phase");

    auto* analyze = app.add_subcommand("analyze", "histograms and APL/NAPL/ENW");
    add_common(analyze, false);
    analyze->add_option("--graph", graph_path, "graph file (JSON)");
    analyze->add_option("--checkpoint", checkpoint, "checkpoint to analyze");

    std::string modes = "exact,layerwise,global";
    size_t retrain_seeds = 5;
    double baseline_acc = 0.0;
    auto* retrain = app.add_subcommand("permute-retrain", "mask-transfer retraining comparison");
    add_common(retrain, true);
    retrain->add_option("--mask", mask_path, "mask file from a linearized run")->required();
    retrain->add_option("--modes", modes, "comma list of exact,layerwise,global");
    retrain->add_option("--seeds", retrain_seeds, "number of retraining seeds per mode");
    retrain->add_option("--baseline-acc", baseline_acc,
                        "accuracy of the linearized network, for the summary");

    std::string sweep_kind, grid_csv, omega_csv, seeds_csv;
    auto* sweep = app.add_subcommand("sweep", "grid of runs over one knob");
    add_common(sweep, true);
    sweep->add_option("--kind", sweep_kind, "linearize-at-epoch|omega|width|depth")->required();
    sweep->add_option("--grid", grid_csv, "comma-separated grid values")->required();
    sweep->add_option("--omega-overrides", omega_csv, "per-grid-point omega (at-epoch sweeps)");
    sweep->add_option("--seeds", seeds_csv, "comma-separated seeds per grid point");

    std::string records_csv;
    auto* report = app.add_subcommand("report", "render saved records");
    add_common(report, false);
    report->add_option("--records", records_csv, "comma list of run directories")->required();

    int trials = 1000;
    size_t max_nodes = 14;
    uint64_t oracle_seed = 7;
    auto* oracle = app.add_subcommand("oracle-check", "DP vs enumeration equivalence");
    oracle->add_option("--trials", trials, "random graphs per mode");
    oracle->add_option("--max-nodes", max_nodes, "node budget per graph");
    oracle->add_option("--seed", oracle_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, seed, out_dir);
        if (linearize_cmd->parsed())
            return cmd_linearize(config_path, checkpoint, seed, out_dir);
        if (analyze->parsed())
            return cmd_analyze(graph_path, checkpoint, config_path, format, out_dir);
        if (retrain->parsed())
            return cmd_permute_retrain(config_path, mask_path, modes, retrain_seeds,
                                       baseline_acc, seed, threads, out_dir);
        if (sweep->parsed())
            return cmd_sweep(config_path, sweep_kind, grid_csv, omega_csv, seeds_csv, seed,
                             threads, out_dir);
        if (report->parsed())
            return cmd_report(records_csv, format == "json" ? "json-manifest" : format, out_dir);
        if (oracle->parsed()) return cmd_oracle_check(trials, max_nodes, oracle_seed);
    } catch (const corenet::OracleMismatch& e) {
        std::cerr << "oracle mismatch: " << e.what() << "\ncounterexample graph:\n"
                  << e.counterexample() << "\n";
        return 3;
    } catch (const corenet::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
