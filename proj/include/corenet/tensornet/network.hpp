#ifndef CORENET_TENSORNET_NETWORK_HPP
#define CORENET_TENSORNET_NETWORK_HPP

#include <cmath>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "corenet/rng.hpp"
#include "corenet/tensornet/layers.hpp"

namespace corenet::tensornet {

// A layer stack with residual-block wiring. Single-writer: one training
// loop owns and mutates an instance.
class Network {
public:
    std::vector<std::unique_ptr<Layer>> layers;

    Network() = default;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    template <typename L, typename... Args>
    L* emplace(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L* raw = layer.get();
        layers.push_back(std::move(layer));
        return raw;
    }

    Tensor forward(const Tensor& input, bool training) {
        validate_residual_structure();
        std::vector<Tensor> saved;
        Tensor x = input;
        for (auto& layer : layers) {
            if (dynamic_cast<ResidualBegin*>(layer.get())) {
                saved.push_back(x);
            } else if (auto* end = dynamic_cast<ResidualEnd*>(layer.get())) {
                if (saved.empty()) throw InvalidSpec("residual end without begin");
                x = end->combine(x, saved.back(), training);
                saved.pop_back();
            } else {
                x = layer->forward(x, training);
            }
        }
        forward_ran_ = true;
        return x;
    }

    // Reverse pass; gradients accumulate into Parameter::grad. Requires a
    // preceding forward on the same instance.
    void backward(const Tensor& grad_logits) {
        if (!forward_ran_)
            throw GraphStateError("backward without a preceding forward");
        std::vector<Tensor> skip_grads;
        Tensor g = grad_logits;
        for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
            if (auto* end = dynamic_cast<ResidualEnd*>(it->get())) {
                skip_grads.push_back(end->skip_grad(g));
            } else if (dynamic_cast<ResidualBegin*>(it->get())) {
                if (skip_grads.empty()) throw InvalidSpec("residual begin without end");
                const Tensor& sg = skip_grads.back();
                check_same_shape(g, sg, "residual skip gradient");
                for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += sg.data[i];
                skip_grads.pop_back();
            } else {
                g = (*it)->backward(g);
            }
        }
        forward_ran_ = false;
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> params;
        for (auto& layer : layers)
            for (Parameter* p : layer->parameters()) params.push_back(p);
        return params;
    }

    void zero_grad() {
        for (Parameter* p : parameters()) p->zero_grad();
    }

    size_t parameter_count() {
        size_t n = 0;
        for (Parameter* p : parameters()) n += p->value.numel();
        return n;
    }

    std::vector<ChannelPRelu*> prelu_layers() {
        std::vector<ChannelPRelu*> out;
        for (auto& layer : layers)
            if (auto* p = dynamic_cast<ChannelPRelu*>(layer.get())) out.push_back(p);
        return out;
    }

    std::vector<Relu*> relu_layers() {
        std::vector<Relu*> out;
        for (auto& layer : layers)
            if (auto* r = dynamic_cast<Relu*>(layer.get())) out.push_back(r);
        return out;
    }

private:
    void validate_residual_structure() const {
        int depth = 0;
        for (const auto& layer : layers) {
            if (dynamic_cast<const ResidualBegin*>(layer.get())) ++depth;
            if (dynamic_cast<const ResidualEnd*>(layer.get())) {
                if (--depth < 0) throw InvalidSpec("residual end without begin");
            }
        }
        if (depth != 0) throw InvalidSpec("unmatched residual begin");
    }

    bool forward_ran_ = false;
};

// Kaiming-style fan-in init for Dense and Conv2d weights; biases zero.
inline void init_kaiming(Network& net, SeededRng& rng) {
    for (auto& layer : net.layers) {
        if (auto* dense = dynamic_cast<Dense*>(layer.get())) {
            const double scale = std::sqrt(2.0 / static_cast<double>(dense->in_features()));
            for (double& v : dense->weight().value.data) v = rng.normal(0.0, scale);
            dense->bias().value.fill(0.0);
        } else if (auto* conv = dynamic_cast<Conv2d*>(layer.get())) {
            const size_t fan_in = conv->weight().value.numel() / conv->out_channels();
            const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (double& v : conv->weight().value.data) v = rng.normal(0.0, scale);
            conv->bias().value.fill(0.0);
        } else if (auto* end = dynamic_cast<ResidualEnd*>(layer.get())) {
            if (auto* proj = end->projection()) {
                const double scale = std::sqrt(2.0 / static_cast<double>(proj->in_features()));
                for (double& v : proj->weight().value.data) v = rng.normal(0.0, scale);
                proj->bias().value.fill(0.0);
            }
        }
    }
}

struct LossResult {
    double loss = 0.0;
    Tensor logits;
    Tensor grad_logits;  // d(mean cross-entropy)/d(logits)
};

// Mean softmax cross-entropy over the batch.
inline LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ShapeMismatch("loss expects logits [N,K]");
    const size_t batch = logits.shape[0], classes = logits.shape[1];
    if (labels.size() != batch)
        throw ShapeMismatch("label count does not match batch size");

    LossResult result;
    result.logits = logits;
    result.grad_logits = Tensor::zeros_like(logits);
    double total = 0.0;
    for (size_t n = 0; n < batch; ++n) {
        const int label = labels[n];
        if (label < 0 || static_cast<size_t>(label) >= classes)
            throw ShapeMismatch("label out of range");
        const double* row = &logits.data[n * classes];
        double max = row[0];
        for (size_t k = 1; k < classes; ++k) max = std::max(max, row[k]);
        double denom = 0.0;
        for (size_t k = 0; k < classes; ++k) denom += std::exp(row[k] - max);
        const double log_denom = std::log(denom);
        total += -(row[label] - max - log_denom);
        for (size_t k = 0; k < classes; ++k) {
            const double softmax = std::exp(row[k] - max) / denom;
            result.grad_logits.data[n * classes + k] =
                (softmax - (static_cast<size_t>(label) == k ? 1.0 : 0.0)) /
                static_cast<double>(batch);
        }
    }
    result.loss = total / static_cast<double>(batch);
    if (!std::isfinite(result.loss))
        throw NonFiniteLoss("loss is not finite (divergence)");
    return result;
}

inline LossResult forward_loss(Network& net, const Tensor& inputs, std::span<const int> labels,
                               bool training) {
    return softmax_cross_entropy(net.forward(inputs, training), labels);
}

inline void backward(Network& net, const LossResult& loss) { net.backward(loss.grad_logits); }

inline size_t correct_predictions(const Tensor& logits, std::span<const int> labels) {
    const size_t batch = logits.shape[0], classes = logits.shape[1];
    size_t correct = 0;
    for (size_t n = 0; n < batch; ++n) {
        const double* row = &logits.data[n * classes];
        size_t best = 0;
        for (size_t k = 1; k < classes; ++k)
            if (row[k] > row[best]) best = k;
        if (static_cast<int>(best) == labels[n]) ++correct;
    }
    return correct;
}

}  // namespace corenet::tensornet

#endif  // CORENET_TENSORNET_NETWORK_HPP
