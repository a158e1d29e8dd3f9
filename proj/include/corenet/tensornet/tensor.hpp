#ifndef CORENET_TENSORNET_TENSOR_HPP
#define CORENET_TENSORNET_TENSOR_HPP

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "corenet/error.hpp"

namespace corenet::tensornet {

// Dense row-major tensor of doubles. Value semantics throughout; shapes are
// checked at operation boundaries, not per element.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), 0.0);
    }

    Tensor(std::vector<size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel_of(shape))
            throw ShapeMismatch("tensor data length " + std::to_string(data.size()) +
                                " does not match shape (numel " +
                                std::to_string(numel_of(shape)) + ")");
    }

    static size_t numel_of(const std::vector<size_t>& shape) {
        size_t n = 1;
        for (size_t d : shape) {
            if (d == 0) throw ShapeMismatch("zero-sized tensor dimension");
            n *= d;
        }
        return n;
    }

    static Tensor zeros(std::vector<size_t> shape) { return Tensor(std::move(shape)); }

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape); }

    size_t numel() const { return data.size(); }
    size_t rank() const { return shape.size(); }
    size_t dim(size_t i) const { return shape.at(i); }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    Tensor reshaped(std::vector<size_t> new_shape) const {
        if (numel_of(new_shape) != numel())
            throw ShapeMismatch("reshape changes element count");
        Tensor t;
        t.shape = std::move(new_shape);
        t.data = data;
        return t;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i)
            s += (i ? "," : "") + std::to_string(shape[i]);
        return s + "]";
    }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b))
        throw ShapeMismatch(std::string(where) + ": shapes " + a.shape_str() + " vs " +
                            b.shape_str());
}

// Trainable tensor plus its gradient. Frozen parameters (whole or per
// element) receive no optimizer updates and no regularizer gradient;
// decay-exempt parameters skip weight decay.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool frozen = false;
    bool decay_exempt = false;
    std::vector<uint8_t> frozen_mask;  // empty, or one flag per element

    Parameter() = default;
    Parameter(std::string n, Tensor v)
        : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}

    bool element_frozen(size_t i) const {
        return frozen || (!frozen_mask.empty() && frozen_mask[i]);
    }

    void zero_grad() { grad.fill(0.0); }

    void freeze_element(size_t i) {
        if (frozen_mask.empty()) frozen_mask.assign(value.numel(), 0);
        frozen_mask[i] = 1;
    }
};

}  // namespace corenet::tensornet

#endif  // CORENET_TENSORNET_TENSOR_HPP
