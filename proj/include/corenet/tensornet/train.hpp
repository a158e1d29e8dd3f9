#ifndef CORENET_TENSORNET_TRAIN_HPP
#define CORENET_TENSORNET_TRAIN_HPP

#include <functional>
#include <numeric>
#include <vector>

#include "corenet/rng.hpp"
#include "corenet/tensornet/network.hpp"
#include "corenet/tensornet/optimizer.hpp"

namespace corenet::tensornet {

struct DataSplit {
    Tensor x;                 // [N, ...]
    std::vector<int> y;

    size_t size() const { return x.rank() == 0 ? 0 : x.shape[0]; }

    void validate() const {
        if (x.rank() < 2) throw ShapeMismatch("dataset tensor must be batched");
        if (y.size() != x.shape[0]) throw ShapeMismatch("dataset label count mismatch");
    }
};

// One training phase's hyperparameters (both phases share the shape).
struct PhaseConfig {
    size_t epochs = 200;
    double lr = 0.1;
    std::vector<size_t> milestones = {100, 150};
    double gamma = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    size_t batch_size = 256;
    bool augment_flip = false;

    void validate() const {
        if (lr <= 0.0) throw InvalidSpec("lr must be > 0");
        if (batch_size == 0) throw InvalidSpec("batch size must be >= 1");
        for (size_t i = 1; i < milestones.size(); ++i)
            if (milestones[i] <= milestones[i - 1])
                throw InvalidSpec("milestones must be strictly increasing");
    }
};

// Per-step extension points used by the linearization phase.
struct StepHooks {
    std::function<double()> penalty;          // extra loss term, for the record
    std::function<void()> accumulate_grads;   // runs after backward
    std::function<void()> after_step;         // runs after the optimizer step
};

namespace detail {

inline Tensor gather_rows(const Tensor& x, const std::vector<size_t>& indices, size_t begin,
                          size_t end) {
    const size_t row = x.numel() / x.shape[0];
    std::vector<size_t> shape = x.shape;
    shape[0] = end - begin;
    Tensor out(shape);
    for (size_t i = begin; i < end; ++i)
        std::copy_n(&x.data[indices[i] * row], row, &out.data[(i - begin) * row]);
    return out;
}

inline void flip_horizontal(Tensor& batch, SeededRng& rng) {
    if (batch.rank() != 4) throw InvalidSpec("horizontal flip needs [N,C,H,W] inputs");
    const size_t n = batch.shape[0], c = batch.shape[1], h = batch.shape[2], w = batch.shape[3];
    for (size_t i = 0; i < n; ++i) {
        if (!rng.coin()) continue;
        for (size_t ch = 0; ch < c; ++ch)
            for (size_t row = 0; row < h; ++row) {
                double* line = &batch.data[((i * c + ch) * h + row) * w];
                for (size_t a = 0, b = w - 1; a < b; ++a, --b) std::swap(line[a], line[b]);
            }
    }
}

}  // namespace detail

struct EpochStats {
    double task_loss = 0.0;    // mean cross-entropy over the epoch
    double penalty = 0.0;      // mean extra penalty (0 when no hooks)
    double accuracy = 0.0;
};

// One pass over the training split: shuffled batches, SGD step per batch,
// hooks interleaved for regularization and freezing.
inline EpochStats train_epoch(Network& net, const DataSplit& train, const PhaseConfig& cfg,
                              SgdMomentum& optimizer, double lr, SeededRng& rng,
                              const StepHooks* hooks = nullptr) {
    train.validate();
    const size_t n = train.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    EpochStats stats;
    size_t correct = 0;
    size_t batches = 0;
    auto params = net.parameters();
    for (size_t begin = 0; begin < n; begin += cfg.batch_size) {
        const size_t end = std::min(n, begin + cfg.batch_size);
        Tensor bx = detail::gather_rows(train.x, order, begin, end);
        if (cfg.augment_flip) detail::flip_horizontal(bx, rng);
        std::vector<int> by(end - begin);
        for (size_t i = begin; i < end; ++i) by[i - begin] = train.y[order[i]];

        net.zero_grad();
        auto loss = forward_loss(net, bx, by, true);
        stats.task_loss += loss.loss;
        if (hooks && hooks->penalty) stats.penalty += hooks->penalty();
        correct += correct_predictions(loss.logits, by);
        backward(net, loss);
        if (hooks && hooks->accumulate_grads) hooks->accumulate_grads();
        optimizer.step(params, lr);
        if (hooks && hooks->after_step) hooks->after_step();
        ++batches;
    }
    stats.task_loss /= static_cast<double>(batches);
    stats.penalty /= static_cast<double>(batches);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return stats;
}

struct EvalStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

inline EvalStats evaluate(Network& net, const DataSplit& data, size_t batch_size = 256) {
    data.validate();
    const size_t n = data.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    EvalStats stats;
    size_t correct = 0;
    double loss_sum = 0.0;
    for (size_t begin = 0; begin < n; begin += batch_size) {
        const size_t end = std::min(n, begin + batch_size);
        Tensor bx = detail::gather_rows(data.x, order, begin, end);
        std::vector<int> by(data.y.begin() + begin, data.y.begin() + end);
        auto loss = forward_loss(net, bx, by, false);
        loss_sum += loss.loss * static_cast<double>(end - begin);
        correct += correct_predictions(loss.logits, by);
    }
    stats.loss = loss_sum / static_cast<double>(n);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return stats;
}

}  // namespace corenet::tensornet

#endif  // CORENET_TENSORNET_TRAIN_HPP
