#include <gtest/gtest.h>

#include <cmath>

#include "corenet/harness/dataset.hpp"
#include "corenet/linearize/attach.hpp"
#include "corenet/linearize/run.hpp"
#include "corenet/linearize/state.hpp"
#include "corenet/tensornet/arch.hpp"

using namespace corenet;
using namespace corenet::linearize;
using tensornet::ArchConfig;
using tensornet::Network;

namespace {

Network small_prelu_net(uint64_t seed, size_t width = 6, size_t blocks = 2) {
    SeededRng rng(seed);
    ArchConfig arch;
    arch.kind = "dense";
    arch.input_shape = {2};
    arch.classes = 3;
    arch.width = width;
    arch.blocks = blocks;
    auto net = tensornet::build_network(arch, rng);
    attach_prelus(net, 0.0);
    return net;
}

tensornet::DataSplit toy_data(uint64_t seed, size_t n = 60) {
    harness::DatasetSpec spec;
    spec.kind = "spirals";
    spec.classes = 3;
    spec.samples_per_class = n / 3 * 2;
    spec.noise = 0.05;
    spec.difficulty = 1.0;
    spec.seed = seed;
    return harness::gen_dataset(spec).train;
}

}  // namespace

TEST(RegPenalty, ClosedForms) {
    EXPECT_DOUBLE_EQ(reg_penalty_term(1.0, 0.003), 0.0);
    EXPECT_NEAR(reg_penalty_term(0.75, 0.003) + reg_penalty_term(0.96, 0.003), 0.0021, 1e-15);
    EXPECT_DOUBLE_EQ(reg_penalty_term(0.0, 1.0), 1.0);
}

TEST(RegPenalty, NetworkSumSkipsFrozenUnits) {
    auto net = small_prelu_net(1);
    RegularizerConfig cfg;
    cfg.omega = 1.0;
    auto state = LinearizationState::from_network(net, cfg.omega);

    auto prelus = net.prelu_layers();
    for (auto* p : prelus)
        for (auto& s : p->slopes().value.data) s = 0.75;
    const size_t total = state.total_units();
    EXPECT_NEAR(reg_penalty(net, state, cfg),
                static_cast<double>(total) * std::sqrt(0.25), 1e-12);

    // freezing a unit removes its contribution
    prelus[0]->slopes().value.data[0] = 0.995;
    freeze_sweep(state, net, cfg, 1);
    EXPECT_NEAR(reg_penalty(net, state, cfg),
                static_cast<double>(total - 1) * std::sqrt(0.25), 1e-12);
}

TEST(RegPenalty, ZeroIffAllActiveSlopesAtOne) {
    auto net = small_prelu_net(2);
    RegularizerConfig cfg;
    cfg.omega = 0.5;
    auto state = LinearizationState::from_network(net, cfg.omega);
    for (auto* p : net.prelu_layers())
        for (auto& s : p->slopes().value.data) s = 1.0;
    EXPECT_DOUBLE_EQ(reg_penalty(net, state, cfg), 0.0);

    net.prelu_layers()[1]->slopes().value.data[2] = 0.9;
    const double one_off = reg_penalty(net, state, cfg);
    EXPECT_GT(one_off, 0.0);
    // strictly increasing in |1 - slope|
    net.prelu_layers()[1]->slopes().value.data[2] = 0.8;
    EXPECT_GT(reg_penalty(net, state, cfg), one_off);
}

TEST(RegGradient, ClosedFormsAndClamp) {
    EXPECT_NEAR(reg_gradient(0.75, 1.0, 1e-4), -1.0, 1e-12);

    const double delta = 1e-4;
    const double at_clamp = reg_gradient(1.0 - delta, 1.0, delta);
    EXPECT_NEAR(std::abs(at_clamp), 0.5 / std::sqrt(delta), 1e-9);
    // closer to 1 the clamp caps the magnitude
    EXPECT_NEAR(std::abs(reg_gradient(1.0 - delta / 10, 1.0, delta)), 0.5 / std::sqrt(delta),
                1e-9);

    EXPECT_GT(reg_gradient(1.2, 1.0, delta), 0.0);   // pushes back down toward 1
    EXPECT_LT(reg_gradient(0.5, 1.0, delta), 0.0);   // pushes up toward 1
}

TEST(RegGradient, MatchesFiniteDifferenceAwayFromKink) {
    for (double slope : {0.1, 0.4, 0.7, 1.3, 1.6}) {
        const double h = 1e-6;
        const double numeric =
            (reg_penalty_term(slope + h, 0.3) - reg_penalty_term(slope - h, 0.3)) / (2 * h);
        EXPECT_NEAR(reg_gradient(slope, 0.3, 1e-8), numeric, 1e-5) << slope;
    }
}

TEST(FreezeSweep, ThresholdAndOvershoot) {
    auto net = small_prelu_net(3);
    RegularizerConfig cfg;
    auto state = LinearizationState::from_network(net, cfg.omega);
    auto* prelu = net.prelu_layers()[0];
    prelu->slopes().value.data[0] = 0.995;
    prelu->slopes().value.data[1] = 0.98;
    prelu->slopes().value.data[2] = 1.03;

    const size_t frozen = freeze_sweep(state, net, cfg, 7);
    EXPECT_EQ(frozen, 2u);
    EXPECT_DOUBLE_EQ(prelu->slopes().value.data[0], 1.0);
    EXPECT_DOUBLE_EQ(prelu->slopes().value.data[2], 1.0);
    EXPECT_FALSE(prelu->channel_is_active(0));
    EXPECT_TRUE(prelu->channel_is_active(1));
    EXPECT_FALSE(prelu->channel_is_active(2));
    EXPECT_EQ(state.freeze_epoch[0][0], 7);
    EXPECT_EQ(state.freeze_epoch[0][2], 7);
    EXPECT_EQ(state.freeze_epoch[0][1], -1);

    // frozen units never thaw
    prelu->slopes().value.data[0] = 0.5;  // simulated corruption attempt
    prelu->slopes().value.data[0] = 1.0;
    const size_t again = freeze_sweep(state, net, cfg, 8);
    EXPECT_EQ(again, 0u);
    EXPECT_EQ(state.freeze_epoch[0][0], 7);
}

TEST(Controller, StopDecaySteady) {
    RegularizerConfig cfg;
    cfg.omega = 0.8;
    cfg.target_inactive = 0.80;

    const auto make_state = [&](size_t frozen_of_1000) {
        LinearizationState state;
        state.omega = cfg.omega;
        state.active = {std::vector<uint8_t>(1000, 1)};
        state.freeze_epoch = {std::vector<int>(1000, -1)};
        for (size_t i = 0; i < frozen_of_1000; ++i) state.active[0][i] = 0;
        return state;
    };

    auto stop = make_state(802);
    controller_step(stop, cfg);
    EXPECT_EQ(stop.phase, ControllerPhase::stopped);
    EXPECT_DOUBLE_EQ(stop.omega, 0.0);

    auto slow = make_state(760);
    controller_step(slow, cfg);
    EXPECT_EQ(slow.phase, ControllerPhase::regularizing);
    EXPECT_DOUBLE_EQ(slow.omega, 0.4);

    auto far = make_state(500);
    controller_step(far, cfg);
    EXPECT_DOUBLE_EQ(far.omega, 0.8);

    // exactly at target - band stops; just below does not
    auto edge = make_state(790);
    controller_step(edge, cfg);
    EXPECT_EQ(edge.phase, ControllerPhase::stopped);
    auto below = make_state(789);
    controller_step(below, cfg);
    EXPECT_EQ(below.phase, ControllerPhase::regularizing);

    // stopped is sticky even if the fraction later looks different
    controller_step(stop, cfg);
    EXPECT_EQ(stop.phase, ControllerPhase::stopped);
    EXPECT_DOUBLE_EQ(stop.omega, 0.0);
}

TEST(Controller, NoTargetMeansNoAction) {
    RegularizerConfig cfg;
    cfg.omega = 0.8;
    LinearizationState state;
    state.omega = cfg.omega;
    state.active = {std::vector<uint8_t>(10, 0)};  // fully frozen
    state.freeze_epoch = {std::vector<int>(10, 0)};
    controller_step(state, cfg);
    EXPECT_EQ(state.phase, ControllerPhase::regularizing);
    EXPECT_DOUBLE_EQ(state.omega, 0.8);
}

TEST(LinearizationRun, OmegaZeroIsBitIdenticalToPlainFinetune) {
    const auto data = toy_data(50);

    auto net_a = small_prelu_net(10);
    auto net_b = small_prelu_net(10);

    tensornet::PhaseConfig phase;
    phase.epochs = 3;
    phase.lr = 0.05;
    phase.milestones = {2};
    phase.batch_size = 16;

    // run A: the linearization loop with omega = 0 and no target
    LinearizeRunArgs args;
    args.phase = phase;
    args.reg.omega = 0.0;
    args.reg.target_inactive.reset();
    auto rng_a = SeededRng::derive(77, "epochs");
    const auto state = linearization_run(net_a, data, data, args, rng_a, nullptr);
    EXPECT_DOUBLE_EQ(state.inactive_fraction(), 0.0);

    // run B: a plain loop without the module attached
    auto rng_b = SeededRng::derive(77, "epochs");
    tensornet::SgdMomentum opt(phase.momentum, phase.weight_decay);
    for (size_t e = 0; e < phase.epochs; ++e) {
        const double lr = tensornet::multistep_lr(e, phase.lr, phase.milestones, phase.gamma);
        tensornet::train_epoch(net_b, data, phase, opt, lr, rng_b);
    }

    auto pa = net_a.parameters();
    auto pb = net_b.parameters();
    ASSERT_EQ(pa.size(), pb.size());
    for (size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value.data, pb[i]->value.data);
}

TEST(LinearizationRun, LargeOmegaFreezesEverything) {
    const auto data = toy_data(51);
    auto net = small_prelu_net(11, 4, 1);

    LinearizeRunArgs args;
    args.phase.epochs = 12;
    args.phase.lr = 0.05;
    args.phase.milestones = {};
    args.phase.batch_size = 16;
    args.reg.omega = 5.0;
    args.reg.target_inactive.reset();

    harness::ExperimentRecord record;
    auto rng = SeededRng::derive(3, "epochs");
    const auto state = linearization_run(net, data, data, args, rng, &record);
    EXPECT_DOUBLE_EQ(state.inactive_fraction(), 1.0);
    EXPECT_DOUBLE_EQ(record.rows.back().apl, 0.0);
    EXPECT_DOUBLE_EQ(record.rows.back().napl, 0.0);
}

TEST(LinearizationRun, MonotoneFreezingAndNonIncreasingApl) {
    const auto data = toy_data(52);
    auto net = small_prelu_net(12, 8, 2);

    LinearizeRunArgs args;
    args.phase.epochs = 10;
    args.phase.lr = 0.05;
    args.phase.milestones = {};
    args.phase.batch_size = 16;
    args.reg.omega = 0.8;
    args.reg.target_inactive.reset();

    harness::ExperimentRecord record;
    auto rng = SeededRng::derive(4, "epochs");
    linearization_run(net, data, data, args, rng, &record);

    double prev_active = 1.0;
    double prev_apl = 1e9;
    bool froze_something = false;
    for (const auto& row : record.rows) {
        EXPECT_LE(row.active_fraction, prev_active);
        EXPECT_LE(row.apl, prev_apl + 1e-12);
        if (row.active_fraction < 1.0) froze_something = true;
        prev_active = row.active_fraction;
        prev_apl = row.apl;
    }
    EXPECT_TRUE(froze_something);
}

TEST(StateJson, RoundTrip) {
    auto net = small_prelu_net(13);
    auto state = LinearizationState::from_network(net, 0.25);
    state.active[0][1] = 0;
    state.freeze_epoch[0][1] = 3;
    state.phase = ControllerPhase::stopped;

    const auto j = state_to_json(state);
    const auto back = state_from_json(j);
    EXPECT_EQ(back.active, state.active);
    EXPECT_EQ(back.freeze_epoch, state.freeze_epoch);
    EXPECT_EQ(back.phase, ControllerPhase::stopped);
    EXPECT_DOUBLE_EQ(back.omega, 0.25);
}
