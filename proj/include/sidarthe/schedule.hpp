#pragma once

#include <cmath>
#include <cstddef>

#include "sidarthe/errors.hpp"

namespace sidarthe {

/// Per-node step-size and momentum schedules over node times t = 0, 1, ....
///
///   pi(t)    = pi0 / (1 + a t)       (decaying step size)
///   omega(t) = 1 / (1 + exp(-b t))   (logistic momentum, 1/2 at t = 0)
struct MomentumSchedule {
    double pi0 = 1e-4;
    double a = 0.0;
    double b = 0.0;

    bool valid() const { return pi0 > 0.0 && a >= 0.0 && b >= 0.0; }
};

struct StepFactors {
    double pi;
    double omega;
};

inline StepFactors schedule_at(const MomentumSchedule& s, double t) {
    if (!s.valid()) throw domain_error("schedule_at: invalid schedule");
    if (t < 0.0) throw range_error("schedule_at: negative time");
    return {s.pi0 / (1.0 + s.a * t), 1.0 / (1.0 + std::exp(-s.b * t))};
}

/// pi(t) / (1 - omega(t)), evaluated in the algebraically equivalent form
/// pi(t) * (1 + exp(b t)). The naive quotient loses all precision once
/// omega(t) rounds to 1 (b t beyond ~37); this form is exact for any t and
/// equals 2 pi0 at t = 0.
inline double effective_learning_rate(const MomentumSchedule& s, double t) {
    if (!s.valid()) throw domain_error("effective_learning_rate: invalid schedule");
    if (t < 0.0) throw range_error("effective_learning_rate: negative time");
    return (s.pi0 / (1.0 + s.a * t)) * (1.0 + std::exp(s.b * t));
}

} // namespace sidarthe
