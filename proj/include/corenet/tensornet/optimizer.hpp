#ifndef CORENET_TENSORNET_OPTIMIZER_HPP
#define CORENET_TENSORNET_OPTIMIZER_HPP

#include <cmath>
#include <vector>

#include "corenet/tensornet/tensor.hpp"

namespace corenet::tensornet {

// Piecewise-constant schedule: lr = base * gamma^(milestones passed).
inline double multistep_lr(size_t epoch, double base_lr, const std::vector<size_t>& milestones,
                           double gamma) {
    for (size_t i = 1; i < milestones.size(); ++i)
        if (milestones[i] <= milestones[i - 1])
            throw InvalidSpec("milestones must be strictly increasing");
    size_t passed = 0;
    for (size_t m : milestones)
        if (m <= epoch) ++passed;
    return base_lr * std::pow(gamma, static_cast<double>(passed));
}

// SGD with momentum; weight decay is folded into the gradient before the
// momentum update:  g' = g + wd*w;  v' = mu*v + g';  w' = w - lr*v'.
class SgdMomentum {
public:
    SgdMomentum(double momentum, double weight_decay)
        : momentum_(momentum), weight_decay_(weight_decay) {}

    double momentum() const { return momentum_; }
    double weight_decay() const { return weight_decay_; }

    void step(const std::vector<Parameter*>& params, double lr) {
        if (velocity_.size() != params.size()) {
            velocity_.clear();
            velocity_.reserve(params.size());
            for (Parameter* p : params) velocity_.push_back(Tensor::zeros_like(p->value));
        }
        for (size_t pi = 0; pi < params.size(); ++pi) {
            Parameter& p = *params[pi];
            if (p.frozen) continue;
            Tensor& v = velocity_[pi];
            if (!v.same_shape(p.value))
                throw ShapeMismatch("optimizer state shape drifted for '" + p.name + "'");
            const double wd = p.decay_exempt ? 0.0 : weight_decay_;
            for (size_t i = 0; i < p.value.numel(); ++i) {
                if (p.element_frozen(i)) continue;
                const double g = p.grad.data[i] + wd * p.value.data[i];
                v.data[i] = momentum_ * v.data[i] + g;
                p.value.data[i] -= lr * v.data[i];
            }
        }
    }

    void reset() { velocity_.clear(); }

private:
    double momentum_;
    double weight_decay_;
    std::vector<Tensor> velocity_;
};

}  // namespace corenet::tensornet

#endif  // CORENET_TENSORNET_OPTIMIZER_HPP
