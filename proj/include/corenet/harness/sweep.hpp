#ifndef CORENET_HARNESS_SWEEP_HPP
#define CORENET_HARNESS_SWEEP_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "corenet/harness/experiment.hpp"
#include "corenet/parallel.hpp"

namespace corenet::harness {

enum class SweepKind { linearize_at_epoch, omega, width, depth };

inline const char* sweep_kind_name(SweepKind kind) {
    switch (kind) {
        case SweepKind::linearize_at_epoch: return "linearize-at-epoch";
        case SweepKind::omega: return "omega";
        case SweepKind::width: return "width";
        case SweepKind::depth: return "depth";
    }
    return "?";
}

inline SweepKind sweep_kind_from_name(const std::string& name) {
    if (name == "linearize-at-epoch") return SweepKind::linearize_at_epoch;
    if (name == "omega") return SweepKind::omega;
    if (name == "width") return SweepKind::width;
    if (name == "depth") return SweepKind::depth;
    throw InvalidSpec("unknown sweep kind '" + name + "'");
}

struct SweepConfig {
    SweepKind kind = SweepKind::omega;
    std::vector<double> grid;
    std::vector<double> omega_overrides;  // optional, per grid point (at-epoch sweeps)
    std::vector<uint64_t> seeds;          // defaults to the base config's seed
    size_t threads = 1;

    void validate() const {
        if (grid.empty()) throw InvalidSpec("sweep grid must not be empty");
        if (!omega_overrides.empty() && omega_overrides.size() != grid.size())
            throw InvalidSpec("omega overrides must match the grid length");
    }
};

struct SweepPoint {
    double grid_value = 0.0;
    uint64_t seed = 0;
    std::string status = "ok";  // or "error: ..."
    double final_test_acc = 0.0;
    double final_active_fraction = 0.0;
    double enw = 0.0;
    double apl = 0.0;
    double napl = 0.0;
    ExperimentRecord record;
};

struct SweepResult {
    SweepKind kind = SweepKind::omega;
    std::vector<SweepPoint> points;  // grid-major, seeds within a grid point
};

inline constexpr const char* kSweepCsvHeader =
    "kind,grid_value,seed,status,final_test_acc,final_active_fraction,"
    "inverse_active_fraction,enw,apl,napl";

inline std::string sweep_summary_csv(const SweepResult& result) {
    std::string out = std::string(kSweepCsvHeader) + "\n";
    for (const auto& p : result.points) {
        std::string status = p.status;
        std::replace(status.begin(), status.end(), ',', ';');
        const double inverse_active =
            p.final_active_fraction > 0.0 ? 1.0 / p.final_active_fraction : 0.0;
        out += std::string(sweep_kind_name(result.kind)) + "," + format_double(p.grid_value) +
               "," + std::to_string(p.seed) + "," + status;
        for (double v :
             {p.final_test_acc, p.final_active_fraction, inverse_active, p.enw, p.apl, p.napl})
            out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

// One experiment per (grid value, seed); individual failures are recorded
// in the summary and do not abort the sweep.
inline SweepResult run_sweep(const ExperimentConfig& base, const SweepConfig& sweep,
                             const std::string& out_dir = "") {
    base.validate();
    sweep.validate();
    const std::vector<uint64_t> seeds = sweep.seeds.empty()
                                            ? std::vector<uint64_t>{base.seed}
                                            : sweep.seeds;

    SweepResult result;
    result.kind = sweep.kind;
    result.points.resize(sweep.grid.size() * seeds.size());

    parallel_for(result.points.size(), sweep.threads, [&](size_t i) {
        const size_t gi = i / seeds.size();
        const double value = sweep.grid[gi];
        const uint64_t seed = seeds[i % seeds.size()];
        SweepPoint point;
        point.grid_value = value;
        point.seed = seed;
        try {
            RunResult run = [&]() {
                switch (sweep.kind) {
                    case SweepKind::linearize_at_epoch: {
                        ExperimentConfig c = base;
                        if (!c.reg.target_inactive) c.reg.target_inactive = 0.80;
                        if (value < 0.0 || value != std::floor(value))
                            throw InvalidSpec("start epochs must be non-negative integers");
                        std::optional<double> omega;
                        if (!sweep.omega_overrides.empty()) omega = sweep.omega_overrides[gi];
                        return run_linearize_at(c, static_cast<size_t>(value), seed, omega);
                    }
                    case SweepKind::omega: {
                        ExperimentConfig c = base;
                        if (value < 0.0) throw InvalidSpec("omega must be >= 0");
                        c.reg.omega = value;
                        c.reg.target_inactive.reset();  // free-running
                        return run_experiment(c, seed);
                    }
                    case SweepKind::width: {
                        ExperimentConfig c = base;
                        if (value <= 0.0) throw InvalidSpec("width factor must be > 0");
                        c.arch.width_factor = value;
                        return run_experiment(c, seed);
                    }
                    case SweepKind::depth: {
                        ExperimentConfig c = base;
                        if (value < 1.0 || value != std::floor(value))
                            throw InvalidSpec("depth grid holds block counts >= 1");
                        c.arch.blocks = static_cast<size_t>(value);
                        return run_experiment(c, seed);
                    }
                }
                throw InvalidSpec("unreachable sweep kind");
            }();

            point.final_test_acc = run.final_test_accuracy;
            const auto nl = tensornet::nonlinearity_stats(run.net, run.mask);
            point.final_active_fraction = nl.active_fraction;
            point.enw = nl.enw;
            point.apl = nl.apl;
            point.napl = nl.napl;
            point.record = std::move(run.record);
        } catch (const std::exception& e) {
            point.status = std::string("error: ") + e.what();
        }
        result.points[i] = std::move(point);
    });

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        write_text_file(out_dir + "/summary.csv", sweep_summary_csv(result));
        for (size_t i = 0; i < result.points.size(); ++i) {
            const auto& p = result.points[i];
            if (p.status != "ok") continue;
            const std::string dir = out_dir + "/point_" + std::to_string(i / seeds.size()) +
                                    "_seed_" + std::to_string(p.seed);
            fs::create_directories(dir);
            write_text_file(dir + "/metrics.csv", metrics_csv(p.record));
            write_text_file(dir + "/manifest.json",
                            manifest_to_json(p.record.manifest).dump(2) + "\n");
        }
    }
    return result;
}

}  // namespace corenet::harness

#endif  // CORENET_HARNESS_SWEEP_HPP
