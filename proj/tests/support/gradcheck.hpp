#ifndef CORENET_TESTS_GRADCHECK_HPP
#define CORENET_TESTS_GRADCHECK_HPP

#include <cmath>
#include <functional>

#include "corenet/tensornet/tensor.hpp"

namespace corenet::test {

inline constexpr double kGradStep = 1e-4;
inline constexpr double kGradTol = 1e-4;

// Mixed absolute/relative criterion: |a - n| <= tol * max(1, |a|, |n|).
inline bool grad_close(double analytic, double numeric, double tol = kGradTol) {
    const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) <= tol * scale;
}

// Central difference through an arbitrary scalar function of one slot.
inline double central_diff(double& slot, const std::function<double()>& f,
                           double h = kGradStep) {
    const double saved = slot;
    slot = saved + h;
    const double up = f();
    slot = saved - h;
    const double down = f();
    slot = saved;
    return (up - down) / (2.0 * h);
}

// Checks every element of a tensor's analytic gradient against central
// differences of f. Returns the number of mismatching elements.
inline size_t check_tensor_grad(tensornet::Tensor& values, const tensornet::Tensor& analytic,
                                const std::function<double()>& f, double tol = kGradTol) {
    size_t bad = 0;
    for (size_t i = 0; i < values.numel(); ++i) {
        const double numeric = central_diff(values.data[i], f);
        if (!grad_close(analytic.data[i], numeric, tol)) ++bad;
    }
    return bad;
}

}  // namespace corenet::test

#endif  // CORENET_TESTS_GRADCHECK_HPP
