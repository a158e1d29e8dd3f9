// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "corenet/harness/experiment.hpp"
#include "corenet/harness/oracle.hpp"
#include "corenet/harness/sweep.hpp"
#include "corenet/linearize/run.hpp"
#include "corenet/pathgraph/brute_force.hpp"
#include "corenet/pathgraph/propagate.hpp"
#include "corenet/tensornet/stats.hpp"
#include "corenet/transfer/mask_transfer.hpp"
#include "../support/fixtures.hpp"
#include "../support/gradcheck.hpp"

using namespace corenet;
using pathgraph::HistogramMode;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure(what);
}

// ---------------------------------------------------------------- criteria

void small_mixed_histogram() {
    const auto dag = corenet::test::small_mixed_example();
    const auto dp = pathgraph::sink_histogram(dag, HistogramMode::unnormalized);
    require(dp.at(1) == BigRat(5) && dp.at(2) == BigRat(4) && dp.support_size() == 2,
            "DP sink histogram != {1->5, 2->4}");
    const auto bf = pathgraph::brute_force_histogram(dag, HistogramMode::unnormalized);
    require(dp == bf, "enumeration disagrees with the DP");
}

void dense_skip_normalized() {
    const auto ex = corenet::test::dense_skip_merge_example();
    const auto hists = pathgraph::propagate_histograms(ex.dag, HistogramMode::normalized);
    for (const auto& id : ex.merge_nodes) {
        const auto& h = hists.at(id);
        require(h.at(2) == BigRat(1, 2) && h.at(3) == BigRat(1, 2) && h.support_size() == 2,
                "merge node " + id + " != {2->1/2, 3->1/2}");
    }
}

void long_skip_fixture() {
    const auto dag = corenet::test::long_skip_fork_example();
    const auto paths = pathgraph::enumerate_weighted_paths(dag, HistogramMode::unnormalized);
    require(paths.size() == 257, "expected 257 paths, got " + std::to_string(paths.size()));

    size_t skips = 0, mains = 0;
    for (const auto& p : pathgraph::enumerate_weighted_paths(dag, HistogramMode::normalized)) {
        if (p.effective_length == 0) {
            require(p.weight == BigRat(1, 2), "skip path weight != 1/2");
            ++skips;
        } else {
            require(p.weight == BigRat(1, 512), "main path weight != 1/512");
            ++mains;
        }
    }
    require(skips == 1 && mains == 256, "path split is not 1 skip + 256 main");

    const double apl = pathgraph::apl(pathgraph::sink_histogram(dag, HistogramMode::unnormalized));
    require(std::abs(apl - 1024.0 / 257.0) < 1e-12, "unnormalized APL != 1024/257");
    require(pathgraph::sink_histogram(dag, HistogramMode::normalized).apl_exact() == BigRat(2),
            "normalized APL != 2");
}

void oracle_equivalence() {
    const auto report = harness::oracle_check(1000, 14, 20260808);
    require(report.unnormalized_checked == 1000 && report.normalized_checked == 1000,
            "oracle trials incomplete");
}

void block_chain_identities() {
    for (size_t k = 1; k <= 10; ++k) {
        const auto chain = corenet::test::ideal_block_chain(k);
        require(pathgraph::sink_histogram(chain, HistogramMode::normalized).apl_exact() ==
                    BigRat(k),
                "block chain k=" + std::to_string(k) + ": NAPL != k");
        const auto plain = corenet::test::plain_chain(k, true);
        require(pathgraph::sink_histogram(plain, HistogramMode::unnormalized).apl_exact() ==
                    BigRat(k),
                "plain chain d=" + std::to_string(k) + ": APL != d");
    }
}

void gradient_suite() {
    using corenet::test::central_diff;
    using corenet::test::grad_close;
    using namespace corenet::tensornet;
    size_t instances = 0;
    size_t bad = 0;
    SeededRng rng(424242);

    const auto random_tensor = [&](std::vector<size_t> shape, double min_abs = 0.0) {
        Tensor t(std::move(shape));
        for (auto& v : t.data) {
            do {
                v = rng.normal();
            } while (std::abs(v) < min_abs);
        }
        return t;
    };
    const auto dot_loss = [](const Tensor& y, const Tensor& up) {
        double total = 0.0;
        for (size_t i = 0; i < y.data.size(); ++i) total += up.data[i] * y.data[i];
        return total;
    };

    // channel-wise PReLU, inputs held away from the kink
    for (int t = 0; t < 25; ++t, ++instances) {
        Tensor x = random_tensor({2, 3, 2, 2}, 0.05);
        Tensor up = random_tensor({2, 3, 2, 2});
        std::vector<double> slopes{rng.uniform(0.0, 1.5), rng.uniform(0.0, 1.5),
                                   rng.uniform(0.0, 1.5)};
        const auto [dx, dslopes] = prelu_backward(x, slopes, up);
        const auto f = [&]() { return dot_loss(prelu_apply(x, slopes), up); };
        bad += corenet::test::check_tensor_grad(x, dx, f);
        for (size_t c = 0; c < slopes.size(); ++c)
            if (!grad_close(dslopes[c], central_diff(slopes[c], f))) ++bad;
    }

    // dense
    for (int t = 0; t < 25; ++t, ++instances) {
        Dense dense("d", 4, 3);
        for (auto& v : dense.weight().value.data) v = rng.normal(0.0, 0.5);
        for (auto& v : dense.bias().value.data) v = rng.normal(0.0, 0.1);
        Tensor x = random_tensor({3, 4});
        Tensor up = random_tensor({3, 3});
        const auto f = [&]() { return dot_loss(dense.forward(x, true), up); };
        f();
        const Tensor dx = dense.backward(up);
        bad += corenet::test::check_tensor_grad(dense.weight().value, dense.weight().grad, f);
        bad += corenet::test::check_tensor_grad(dense.bias().value, dense.bias().grad, f);
        bad += corenet::test::check_tensor_grad(x, dx, f);
    }

    // conv, both strides
    for (int t = 0; t < 10; ++t, ++instances) {
        Conv2d conv("c", 2, 2, 3, t % 2 ? 2 : 1, 1);
        for (auto& v : conv.weight().value.data) v = rng.normal(0.0, 0.3);
        for (auto& v : conv.bias().value.data) v = rng.normal(0.0, 0.1);
        Tensor x = random_tensor({2, 2, 5, 5});
        Tensor up = random_tensor(conv.forward(x, true).shape);
        const auto f = [&]() { return dot_loss(conv.forward(x, true), up); };
        f();
        const Tensor dx = conv.backward(up);
        bad += corenet::test::check_tensor_grad(conv.weight().value, conv.weight().grad, f);
        bad += corenet::test::check_tensor_grad(conv.bias().value, conv.bias().grad, f);
        bad += corenet::test::check_tensor_grad(x, dx, f);
    }

    // batchnorm (training mode)
    for (int t = 0; t < 15; ++t, ++instances) {
        BatchNorm bn("bn", 3);
        for (auto& v : bn.gamma().value.data) v = rng.uniform(0.5, 1.5);
        for (auto& v : bn.beta().value.data) v = rng.normal(0.0, 0.2);
        Tensor x = random_tensor({4, 3, 2, 2});
        Tensor up = random_tensor({4, 3, 2, 2});
        const auto f = [&]() { return dot_loss(bn.forward(x, true), up); };
        f();
        const Tensor dx = bn.backward(up);
        bad += corenet::test::check_tensor_grad(bn.gamma().value, bn.gamma().grad, f);
        bad += corenet::test::check_tensor_grad(bn.beta().value, bn.beta().grad, f);
        bad += corenet::test::check_tensor_grad(x, dx, f);
    }

    // softmax cross-entropy
    for (int t = 0; t < 25; ++t, ++instances) {
        Tensor logits = random_tensor({4, 5});
        std::vector<int> labels;
        for (int n = 0; n < 4; ++n) labels.push_back(static_cast<int>(rng.bounded(5)));
        const auto result = softmax_cross_entropy(logits, labels);
        const auto f = [&]() { return softmax_cross_entropy(logits, labels).loss; };
        bad += corenet::test::check_tensor_grad(logits, result.grad_logits, f);
    }

    // slope regularizer gradient, away from 1 +- clamp
    for (int t = 0; t < 25; ++t, ++instances) {
        double slope = rng.coin() ? rng.uniform(0.05, 0.9) : rng.uniform(1.1, 1.8);
        const double omega = rng.uniform(0.001, 1.0);
        const auto f = [&]() { return linearize::reg_penalty_term(slope, omega); };
        const double analytic = linearize::reg_gradient(slope, omega, 1e-8);
        if (!grad_close(analytic, central_diff(slope, f))) ++bad;
    }

    require(instances >= 100,
            "only " + std::to_string(instances) + " instances exercised");
    require(bad == 0, std::to_string(bad) + " gradient entries out of tolerance");
}

void freeze_identity_and_monotone() {
    using namespace corenet::tensornet;
    harness::DatasetSpec data_spec;
    data_spec.kind = "spirals";
    data_spec.classes = 5;
    data_spec.samples_per_class = 60;
    data_spec.noise = 0.05;
    data_spec.difficulty = 1.0;
    data_spec.seed = 31;
    const auto data = harness::gen_dataset(data_spec);

    ArchConfig arch;
    arch.kind = "dense";
    arch.input_shape = {2};
    arch.classes = 5;
    arch.width = 12;
    arch.blocks = 2;
    SeededRng init_rng(314159);
    auto net = build_network(arch, init_rng);
    linearize::attach_prelus(net, 0.0);

    linearize::RegularizerConfig reg;
    reg.omega = 0.15;
    tensornet::PhaseConfig phase;
    phase.epochs = 50;
    phase.lr = 0.05;
    phase.milestones = {};
    phase.batch_size = 32;

    auto state = linearize::LinearizationState::from_network(net, reg.omega);
    tensornet::SgdMomentum optimizer(phase.momentum, phase.weight_decay);
    auto rng = SeededRng::derive(4, "epochs");
    int epoch = 0;
    tensornet::StepHooks hooks;
    hooks.accumulate_grads = [&]() { linearize::accumulate_reg_gradient(net, state, reg); };
    hooks.after_step = [&]() { linearize::freeze_sweep(state, net, reg, epoch); };

    auto previous = state.active;
    for (epoch = 1; epoch <= static_cast<int>(phase.epochs); ++epoch) {
        tensornet::train_epoch(net, data.train, phase, optimizer, phase.lr, rng, &hooks);
        // monotone: no unit returns to active
        for (size_t l = 0; l < state.active.size(); ++l)
            for (size_t c = 0; c < state.active[l].size(); ++c)
                require(!(previous[l][c] == 0 && state.active[l][c] == 1),
                        "a frozen unit thawed");
        previous = state.active;
        // frozen slopes stay exactly 1
        for (auto* prelu : net.prelu_layers())
            for (size_t c = 0; c < prelu->channels(); ++c)
                if (!prelu->channel_is_active(c))
                    require(prelu->slopes().value.data[c] == 1.0, "frozen slope drifted");
    }
    require(state.frozen_count() > 0, "nothing froze in 50 epochs");

    // removal of any frozen channel changes no output bit
    Tensor probe = data.test.x;
    const auto baseline = net.forward(probe, false);
    const auto prelus = net.prelu_layers();
    for (size_t li = 0; li < prelus.size(); ++li) {
        for (size_t c = 0; c < prelus[li]->channels(); ++c) {
            if (prelus[li]->channel_is_active(c)) continue;
            // identity-bypass the channel by hand and compare
            struct Shim : Layer {
                ChannelPRelu* inner;
                size_t channel;
                Shim(ChannelPRelu* p, size_t ch) : inner(p), channel(ch) {}
                std::string kind() const override { return "shim"; }
                Tensor forward(const Tensor& in, bool training) override {
                    Tensor out = inner->forward(in, training);
                    const size_t width = in.shape[1];
                    for (size_t n = 0; n < in.shape[0]; ++n)
                        out.data[n * width + channel] = in.data[n * width + channel];
                    return out;
                }
                Tensor backward(const Tensor& g) override { return g; }
            };
            for (auto& layer : net.layers) {
                if (layer.get() != prelus[li]) continue;
                auto* raw = static_cast<ChannelPRelu*>(layer.release());
                layer = std::make_unique<Shim>(raw, c);
                break;
            }
            const auto bypassed = net.forward(probe, false);
            require(bypassed.data == baseline.data,
                    "removing a frozen channel changed the output");
            for (auto& layer : net.layers) {
                if (auto* shim = dynamic_cast<Shim*>(layer.get())) {
                    auto* inner = shim->inner;
                    layer.reset(inner);
                    break;
                }
            }
        }
    }
}

// Two-phase spirals task tuned so the controller has room to settle: 256
// units give 1/256 freeze granularity inside the +-0.01 band.
harness::ExperimentConfig spiral_task_config() {
    harness::ExperimentConfig cfg;
    cfg.arch.kind = "dense";
    cfg.arch.input_shape = {2};
    cfg.arch.classes = 10;
    cfg.arch.width = 64;
    cfg.arch.blocks = 4;
    cfg.arch.residual = true;
    cfg.arch.batchnorm = true;
    cfg.train.epochs = 40;
    cfg.train.lr = 0.1;
    cfg.train.milestones = {24, 34};
    cfg.train.batch_size = 64;
    cfg.linearize_phase.epochs = 30;
    cfg.linearize_phase.lr = 0.1;
    cfg.linearize_phase.milestones = {20, 26};
    cfg.linearize_phase.batch_size = 64;
    cfg.reg.omega = 0.01;
    cfg.reg.omega_decay = 0.7;
    cfg.reg.target_inactive = 0.80;
    cfg.dataset.kind = "spirals";
    cfg.dataset.classes = 10;
    cfg.dataset.samples_per_class = 200;
    cfg.dataset.noise = 0.04;
    cfg.dataset.difficulty = 0.8;
    cfg.dataset.seed = 2024;
    return cfg;
}

void controller_band() {
    const auto cfg = spiral_task_config();
    int in_band = 0;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        const auto result = harness::run_experiment(cfg, seed);
        const double inactive = result.state->inactive_fraction();
        std::printf("    seed %llu: inactive %.4f, accuracy %.4f\n",
                    static_cast<unsigned long long>(seed), inactive,
                    result.final_test_accuracy);
        if (inactive >= 0.79 && inactive <= 0.81) ++in_band;
    }
    require(in_band >= 4,
            "only " + std::to_string(in_band) + "/5 runs landed in [0.79, 0.81]");
}

void nonlinear_advantage() {
    // Single continuous schedule, regularizer switched on at the grid epoch,
    // omega raised for later starts so every run reaches the 80% target.
    // The task is the tightest desk-scale setting found: the 80% budget
    // visibly costs accuracy, so the start epoch has something to influence.
    harness::ExperimentConfig cfg;
    cfg.arch.kind = "dense";
    cfg.arch.input_shape = {2};
    cfg.arch.classes = 10;
    cfg.arch.width = 32;
    cfg.arch.blocks = 4;
    cfg.arch.residual = true;
    cfg.arch.batchnorm = true;
    cfg.train.epochs = 120;
    cfg.train.lr = 0.1;
    cfg.train.milestones = {80, 105};
    cfg.train.batch_size = 64;
    cfg.reg.target_inactive = 0.80;
    cfg.reg.omega_decay = 0.7;
    cfg.dataset.kind = "spirals";
    cfg.dataset.classes = 10;
    cfg.dataset.samples_per_class = 300;
    cfg.dataset.noise = 0.03;
    cfg.dataset.difficulty = 1.0;
    cfg.dataset.seed = 2024;

    const std::vector<size_t> grid = {0, 30, 60};
    const std::vector<double> omegas = {0.01, 0.012, 0.015};
    std::map<size_t, std::vector<double>> acc;
    for (size_t gi = 0; gi < grid.size(); ++gi) {
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            const auto result = harness::run_linearize_at(cfg, grid[gi], seed, omegas[gi]);
            acc[grid[gi]].push_back(result.final_test_accuracy);
            std::printf("    start %3zu seed %llu: final acc %.4f inactive %.3f\n", grid[gi],
                        static_cast<unsigned long long>(seed), result.final_test_accuracy,
                        result.state ? result.state->inactive_fraction() : 0.0);
            std::fflush(stdout);
        }
    }
    const auto mean = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m += x;
        return m / static_cast<double>(v.size());
    };
    const double mean_early = mean(acc[grid.front()]);
    const double mean_late = mean(acc[grid.back()]);
    std::printf("    mean accuracy: start-0 %.4f, start-%zu %.4f, start-%zu %.4f\n", mean_early,
                grid[1], mean(acc[grid[1]]), grid[2], mean_late);

    // one-sided sign test over paired seeds (ties dropped)
    int wins = 0, decided = 0;
    for (size_t s = 0; s < 5; ++s) {
        if (acc[grid.back()][s] > acc[grid.front()][s]) ++wins;
        if (acc[grid.back()][s] != acc[grid.front()][s]) ++decided;
    }
    double p = 0.0;
    for (int j = wins; j <= decided; ++j) {
        double binom = 1.0;
        for (int i = 0; i < j; ++i) binom = binom * (decided - i) / (i + 1);
        p += binom;
    }
    p /= std::pow(2.0, decided);
    std::printf("    sign test: %d/%d wins, one-sided p = %.4f\n", wins, decided, p);
    require(mean_late > mean_early, "late start did not beat epoch-0 start on average");
    require(p < 0.1, "sign test p >= 0.1");
}

void transfer_statistics() {
    SeededRng rng(88);
    // popcount conservation on random masks
    for (int trial = 0; trial < 200; ++trial) {
        pathgraph::ActivationMask mask;
        const size_t layers = 1 + rng.bounded(4);
        for (size_t l = 0; l < layers; ++l) {
            std::vector<uint8_t> bits(2 + rng.bounded(12));
            for (auto& b : bits) b = rng.coin() ? 1 : 0;
            mask.layers.push_back(std::move(bits));
        }
        if (mask.total_units() == 0) continue;

        const auto exact = transfer::permute_mask(mask, transfer::MaskPermutationMode::exact, rng);
        require(exact == mask, "exact mode changed the mask");

        const auto layerwise =
            transfer::permute_mask(mask, transfer::MaskPermutationMode::layerwise, rng);
        for (size_t l = 0; l < mask.layers.size(); ++l)
            require(layerwise.active_count_in(l) == mask.active_count_in(l),
                    "layerwise changed a per-layer popcount");

        const auto global =
            transfer::permute_mask(mask, transfer::MaskPermutationMode::global, rng);
        require(global.active_count() == mask.active_count(),
                "global changed the total popcount");
    }

    // uniformity: 4-bit layer with two zeros over 10^4 shuffles
    pathgraph::ActivationMask small;
    small.layers = {{1, 1, 0, 0}};
    std::map<std::vector<uint8_t>, int> counts;
    SeededRng shuffle_rng(4242);
    const int trials = 10000;
    for (int i = 0; i < trials; ++i)
        counts[transfer::permute_mask(small, transfer::MaskPermutationMode::layerwise,
                                      shuffle_rng)
                   .layers[0]] += 1;
    require(counts.size() == 6, "expected 6 arrangements");
    for (const auto& [pattern, n] : counts) {
        const double freq = static_cast<double>(n) / trials;
        require(std::abs(freq - 1.0 / 6.0) <= 0.02,
                "arrangement frequency " + std::to_string(freq) + " outside 1/6 +- 0.02");
    }
}

void forward_trick_equivalence() {
    using namespace corenet::tensornet;
    SeededRng rng(777);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t layers = 1 + rng.bounded(5);
        Network net;
        size_t prev = 1 + rng.bounded(4);
        for (size_t l = 0; l < layers; ++l) {
            const size_t w = 1 + rng.bounded(6);
            net.emplace<Dense>("fc" + std::to_string(l), prev, w);
            net.emplace<Relu>(w);
            prev = w;
        }
        net.emplace<Dense>("head", prev, 2);
        SeededRng init(1);
        init_kaiming(net, init);

        auto mask = current_mask(net);
        for (auto& layer : mask.layers)
            for (auto& bit : layer) bit = rng.coin() ? 1 : 0;

        const auto dag = network_to_dag(net, mask, DagGranularity::neuron);
        require(histogram_via_forward(net, mask) ==
                    pathgraph::sink_histogram(dag, HistogramMode::unnormalized),
                "trick != DP on trial " + std::to_string(trial));
    }
}

void reproducibility() {
    auto cfg = spiral_task_config();
    cfg.train.epochs = 6;
    cfg.train.milestones = {4};
    cfg.linearize_phase.epochs = 8;
    cfg.linearize_phase.milestones = {3, 6};
    const auto a = harness::run_experiment(cfg, 99);
    const auto b = harness::run_experiment(cfg, 99);
    require(harness::metrics_csv(a.record) == harness::metrics_csv(b.record),
            "metrics CSVs differ between identical runs");
}

// ----------------------------------------------------------------- driver

struct Criterion {
    std::string name;
    double budget_seconds;
    std::function<void()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::string filter = argc > 1 ? argv[1] : "";
    const std::vector<Criterion> criteria = {
        {"fixture-small-mixed-histogram", 1.0, small_mixed_histogram},
        {"fixture-dense-skip-normalized", 1.0, dense_skip_normalized},
        {"fixture-long-skip-paths", 1.0, long_skip_fixture},
        {"oracle-equivalence-1000", 30.0, oracle_equivalence},
        {"block-chain-identities", 5.0, block_chain_identities},
        {"gradient-suite", 60.0, gradient_suite},
        {"freeze-identity-monotone", 120.0, freeze_identity_and_monotone},
        {"controller-band", 600.0, controller_band},
        {"nonlinear-advantage", 3600.0, nonlinear_advantage},
        {"transfer-statistics", 30.0, transfer_statistics},
        {"forward-trick-equivalence", 30.0, forward_trick_equivalence},
        {"reproducibility", 300.0, reproducibility},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        if (!filter.empty() && criterion.name.find(filter) == std::string::npos) continue;
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            criterion.run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (error.empty() && elapsed > criterion.budget_seconds)
            error = "exceeded runtime budget of " + std::to_string(criterion.budget_seconds) +
                    "s (" + std::to_string(elapsed) + "s)";
        if (error.empty()) {
            std::printf("PASS  %-32s (%.2fs)\n", criterion.name.c_str(), elapsed);
        } else {
            std::printf("FAIL  %-32s (%.2fs): %s\n", criterion.name.c_str(), elapsed,
                        error.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
