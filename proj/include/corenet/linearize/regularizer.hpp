#ifndef CORENET_LINEARIZE_REGULARIZER_HPP
#define CORENET_LINEARIZE_REGULARIZER_HPP

#include <cmath>
#include <optional>

#include "corenet/error.hpp"

namespace corenet::linearize {

// The sparsity pressure on PReLU slopes: omega * sum_i |1 - a_i|^p over
// active units, plus the freeze rule and the target-percentage controller
// that steers the run toward a goal inactive fraction.
struct RegularizerConfig {
    double omega = 0.003;
    double exponent = 0.5;
    double freeze_threshold = 0.99;   // slope >= threshold -> snap to 1, freeze
    double active_margin = 0.01;      // unit is active iff |slope - 1| > margin
    double grad_clamp = 1e-4;         // lower clamp on |1 - a| in the gradient
    std::optional<double> target_inactive;  // goal inactive fraction, when set
    double target_band = 0.01;        // stop inside [target - band, ...]
    double slowdown_band = 0.05;      // decay omega once within this distance
    double omega_decay = 0.5;         // per-epoch decay factor near the target
    bool regularize_remaining_to_zero = false;  // post-stop pull toward slope 0

    void validate() const {
        if (omega < 0.0) throw InvalidSpec("regularizer omega must be >= 0");
        if (exponent <= 0.0 || exponent > 1.0)
            throw InvalidSpec("regularizer exponent must be in (0, 1]");
        if (freeze_threshold <= 0.0 || freeze_threshold >= 1.0)
            throw InvalidSpec("freeze threshold must be in (0, 1)");
        if (grad_clamp <= 0.0) throw InvalidSpec("gradient clamp must be > 0");
        if (target_inactive && (*target_inactive < 0.0 || *target_inactive > 1.0))
            throw InvalidSpec("target inactive fraction must be in [0, 1]");
        if (omega_decay <= 0.0 || omega_decay > 1.0)
            throw InvalidSpec("omega decay must be in (0, 1]");
    }
};

// Penalty contribution of a single active unit: omega * |1 - a|^p.
inline double reg_penalty_term(double slope, double omega, double exponent = 0.5) {
    return omega * std::pow(std::abs(1.0 - slope), exponent);
}

// d(penalty)/d(slope) for an active unit, with |1 - a| clamped below by
// delta so the derivative stays bounded as the slope approaches 1
// (freezing takes over well before the singularity matters).
inline double reg_gradient(double slope, double omega, double grad_clamp,
                           double exponent = 0.5) {
    const double diff = 1.0 - slope;
    const double mag = std::max(std::abs(diff), grad_clamp);
    const double sign = diff >= 0.0 ? 1.0 : -1.0;
    return -omega * exponent * std::pow(mag, exponent - 1.0) * sign;
}

}  // namespace corenet::linearize

#endif  // CORENET_LINEARIZE_REGULARIZER_HPP
