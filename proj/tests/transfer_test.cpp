#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "corenet/harness/dataset.hpp"
#include "corenet/tensornet/stats.hpp"
#include "corenet/transfer/retrain.hpp"
#include "corenet/transfer/mask_transfer.hpp"

using namespace corenet;
using namespace corenet::transfer;
using pathgraph::ActivationMask;

namespace {

tensornet::ArchConfig small_arch() {
    tensornet::ArchConfig arch;
    arch.kind = "dense";
    arch.input_shape = {2};
    arch.classes = 3;
    arch.width = 6;
    arch.blocks = 2;
    return arch;
}

ActivationMask example_mask() {
    ActivationMask mask;
    mask.layers = {{1, 0, 1, 1, 0, 0}, {0, 0, 1, 0, 1, 1},
                   {1, 1, 1, 0, 0, 0}, {0, 1, 0, 0, 0, 0}};
    return mask;
}

size_t popcount(const std::vector<uint8_t>& bits) {
    size_t n = 0;
    for (uint8_t b : bits) n += b ? 1 : 0;
    return n;
}

}  // namespace

TEST(ExtractMask, EndpointsAndRoundTrip) {
    SeededRng rng(1);
    const auto arch = small_arch();

    // nothing frozen -> all ones
    auto net = apply_mask_to_fresh(arch, [&] {
        ActivationMask all;
        all.layers.assign(4, std::vector<uint8_t>(6, 1));
        return all;
    }(), rng);
    auto state = linearize::LinearizationState::from_network(net, 0.1);
    auto ones = extract_mask(state, net);
    EXPECT_EQ(ones.active_count(), ones.total_units());

    // round trip: extract(apply(mask)) == mask
    const auto mask = example_mask();
    auto net2 = apply_mask_to_fresh(arch, mask, rng);
    auto state2 = linearize::LinearizationState::from_network(net2, 0.1);
    EXPECT_EQ(extract_mask(state2, net2), mask);

    // everything frozen -> all zeros
    ActivationMask zeros;
    zeros.layers.assign(4, std::vector<uint8_t>(6, 0));
    auto net3 = apply_mask_to_fresh(arch, zeros, rng);
    auto state3 = linearize::LinearizationState::from_network(net3, 0.1);
    EXPECT_EQ(extract_mask(state3, net3).active_count(), 0u);
}

TEST(PermuteMask, ExactIsIdentity) {
    SeededRng rng(2);
    const auto mask = example_mask();
    EXPECT_EQ(permute_mask(mask, MaskPermutationMode::exact, rng), mask);
}

TEST(PermuteMask, LayerwisePreservesPerLayerPopcounts) {
    SeededRng rng(3);
    const auto mask = example_mask();
    for (int i = 0; i < 20; ++i) {
        const auto shuffled = permute_mask(mask, MaskPermutationMode::layerwise, rng);
        ASSERT_EQ(shuffled.layers.size(), mask.layers.size());
        for (size_t l = 0; l < mask.layers.size(); ++l)
            EXPECT_EQ(popcount(shuffled.layers[l]), popcount(mask.layers[l]));
    }
}

TEST(PermuteMask, GlobalPreservesTotalOnly) {
    SeededRng rng(4);
    const auto mask = example_mask();
    bool layer_counts_changed = false;
    for (int i = 0; i < 20; ++i) {
        const auto shuffled = permute_mask(mask, MaskPermutationMode::global, rng);
        EXPECT_EQ(shuffled.active_count(), mask.active_count());
        EXPECT_EQ(shuffled.total_units(), mask.total_units());
        for (size_t l = 0; l < mask.layers.size(); ++l) {
            EXPECT_EQ(shuffled.layers[l].size(), mask.layers[l].size());
            if (popcount(shuffled.layers[l]) != popcount(mask.layers[l]))
                layer_counts_changed = true;
        }
    }
    EXPECT_TRUE(layer_counts_changed);
}

TEST(PermuteMask, ShufflesAreUniform) {
    // 4-bit layer with two zeros: all 6 arrangements within 1/6 +- 0.02
    ActivationMask mask;
    mask.layers = {{1, 1, 0, 0}};
    std::map<std::vector<uint8_t>, int> counts;
    const int trials = 10000;
    SeededRng rng(123);
    for (int i = 0; i < trials; ++i)
        counts[permute_mask(mask, MaskPermutationMode::layerwise, rng).layers[0]] += 1;
    ASSERT_EQ(counts.size(), 6u);
    for (const auto& [pattern, n] : counts) {
        const double freq = static_cast<double>(n) / trials;
        EXPECT_NEAR(freq, 1.0 / 6.0, 0.02);
    }
}

TEST(PermuteMask, SeedDeterminism) {
    const auto mask = example_mask();
    SeededRng a(42), b(42), c(43);
    const auto ma = permute_mask(mask, MaskPermutationMode::global, a);
    const auto mb = permute_mask(mask, MaskPermutationMode::global, b);
    EXPECT_EQ(ma, mb);
    bool any_diff = false;
    SeededRng a2(42);
    for (int i = 0; i < 5 && !any_diff; ++i)
        any_diff = !(permute_mask(mask, MaskPermutationMode::global, a2) ==
                     permute_mask(mask, MaskPermutationMode::global, c));
    EXPECT_TRUE(any_diff);
}

TEST(PermuteMask, EmptyMaskRejected) {
    SeededRng rng(5);
    ActivationMask empty;
    EXPECT_THROW(permute_mask(empty, MaskPermutationMode::global, rng), EmptyMask);
}

TEST(ApplyMask, FrozenCountsAndShapes) {
    SeededRng rng(6);
    const auto arch = small_arch();
    const auto mask = example_mask();
    auto net = apply_mask_to_fresh(arch, mask, rng);

    const auto prelus = net.prelu_layers();
    ASSERT_EQ(prelus.size(), 4u);
    size_t frozen = 0;
    for (size_t l = 0; l < prelus.size(); ++l)
        for (size_t c = 0; c < prelus[l]->channels(); ++c) {
            if (!prelus[l]->channel_is_active(c)) {
                ++frozen;
                EXPECT_DOUBLE_EQ(prelus[l]->slopes().value.data[c], 1.0);
            } else {
                EXPECT_DOUBLE_EQ(prelus[l]->slopes().value.data[c], 0.0);
            }
        }
    EXPECT_EQ(frozen, mask.total_units() - mask.active_count());

    ActivationMask wrong = mask;
    wrong.layers[0].pop_back();
    EXPECT_THROW(apply_mask_to_fresh(arch, wrong, rng), ShapeMismatch);
}

TEST(ApplyMask, AllZeroMaskGivesAffineNetwork) {
    SeededRng rng(7);
    const auto arch = small_arch();
    ActivationMask zeros;
    zeros.layers.assign(4, std::vector<uint8_t>(6, 0));
    auto net = apply_mask_to_fresh(arch, zeros, rng);

    tensornet::Tensor a({1, 2}, {0.3, -0.8});
    tensornet::Tensor b({1, 2}, {-1.1, 0.4});
    tensornet::Tensor sum({1, 2}, {0.3 - 1.1, -0.8 + 0.4});
    tensornet::Tensor zero({1, 2});
    const auto fa = net.forward(a, false);
    const auto fb = net.forward(b, false);
    const auto fs = net.forward(sum, false);
    const auto f0 = net.forward(zero, false);
    for (size_t i = 0; i < fa.data.size(); ++i)
        EXPECT_NEAR(fs.data[i], fa.data[i] + fb.data[i] - f0.data[i], 1e-9);
}

TEST(MaskFile, RoundTripAndDigest) {
    const auto mask = example_mask();
    const auto path = std::string(::testing::TempDir()) + "/mask_roundtrip.json";
    save_mask(mask, path);
    EXPECT_EQ(load_mask(path), mask);

    auto j = mask_to_json(mask);
    j["layers"][0][0] = 0;  // corrupt a bit without updating the digest
    EXPECT_THROW(mask_from_json(j), InvalidSpec);
}

TEST(RetrainCompare, RowsSummariesDeterminism) {
    harness::DatasetSpec spec;
    spec.kind = "blobs";
    spec.classes = 3;
    spec.samples_per_class = 30;
    spec.noise = 0.08;
    spec.difficulty = 0.0;
    spec.seed = 9;
    const auto data = harness::gen_dataset(spec);

    RetrainConfig rc;
    rc.arch = small_arch();
    rc.train.epochs = 3;
    rc.train.lr = 0.02;
    rc.train.milestones = {2};
    rc.train.batch_size = 16;
    rc.seeds = 3;
    rc.master_seed = 17;
    rc.modes = {MaskPermutationMode::exact, MaskPermutationMode::layerwise,
                MaskPermutationMode::global};

    const auto mask = example_mask();
    const auto first = retrain_compare(mask, data.train, data.test, rc, 0.9);
    const auto second = retrain_compare(mask, data.train, data.test, rc, 0.9);

    ASSERT_EQ(first.rows.size(), 9u);
    ASSERT_EQ(first.summaries.size(), 3u);
    for (const auto& summary : first.summaries) EXPECT_EQ(summary.runs, 3u);
    EXPECT_DOUBLE_EQ(first.linearized_accuracy, 0.9);

    // identical inputs, identical outputs, row for row
    for (size_t i = 0; i < first.rows.size(); ++i) {
        EXPECT_EQ(first.rows[i].mode, second.rows[i].mode);
        EXPECT_EQ(first.rows[i].seed, second.rows[i].seed);
        EXPECT_DOUBLE_EQ(first.rows[i].final_accuracy, second.rows[i].final_accuracy);
    }

    // exact rows all share the same mask-derived structure stats
    for (const auto& row : first.rows) {
        if (row.mode == "exact") {
            EXPECT_DOUBLE_EQ(row.active_fraction, pathgraph::active_fraction(mask));
        }
    }

    const auto csv = retrain_csv(first);
    EXPECT_NE(csv.find("mode,seed,final_accuracy,active_fraction,enw,napl"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);  // header + 9 rows

    // retraining runs in parallel produce the same rows
    RetrainConfig par = rc;
    par.threads = 3;
    const auto third = retrain_compare(mask, data.train, data.test, par, 0.9);
    for (size_t i = 0; i < first.rows.size(); ++i)
        EXPECT_DOUBLE_EQ(first.rows[i].final_accuracy, third.rows[i].final_accuracy);
}
