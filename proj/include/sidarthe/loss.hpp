#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "sidarthe/errors.hpp"
#include "sidarthe/flatten.hpp"
#include "sidarthe/integrate.hpp"
#include "sidarthe/observations.hpp"

namespace sidarthe {

/// Weights of the objective: five fidelity weights, the derivative-penalty
/// weight m, and the positivity weight e_p. All non-negative.
struct LossWeights {
    double e_d = 1.0;
    double e_r = 1.0;
    double e_t = 1.0;
    double e_h = 1.0;
    double e_e = 1.0;
    double m = 0.0;
    double e_p = 0.0;

    double fidelity_weight(Series s) const {
        switch (s) {
            case Series::D: return e_d;
            case Series::R: return e_r;
            case Series::T: return e_t;
            case Series::H: return e_h;
            case Series::E: return e_e;
        }
        return 0.0;
    }

    static LossWeights uniform_fidelity(double e, double m_ = 0.0, double e_p_ = 0.0) {
        return LossWeights{e, e, e, e, e, m_, e_p_};
    }
};

/// Augmented-state component each observed series is fitted against. H is
/// matched to the integrated diagnosed-recovered count h_d, not to the healed
/// compartment (which also counts undetected recoveries).
inline constexpr std::size_t series_component(Series s) {
    switch (s) {
        case Series::D: return 2;
        case Series::R: return 4;
        case Series::T: return 5;
        case Series::H: return 8;
        case Series::E: return 7;
    }
    return 0;
}

/// Per-term decomposition of the objective. `positivity_penalty` is the
/// differentiable squared-hinge surrogate that enters `total`;
/// `positivity_indicator` is the plain indicator integral, reported as a
/// metric only.
struct ObjectiveBreakdown {
    std::array<double, kNumSeries> fidelity{};
    double derivative_penalty = 0.0;
    double positivity_penalty = 0.0;
    double positivity_indicator = 0.0;
    double total = 0.0;

    double fidelity_total() const {
        double s = 0.0;
        for (double f : fidelity) s += f;
        return s;
    }
};

namespace detail {
inline void require_daily(const TimeGrid& g, const char* who) {
    if (!g.is_daily())
        throw shape_error(std::string(who) + ": grid must have dt = 1 day and an integer "
                                             "start to align with daily observations");
}
} // namespace detail

/// Quadratic data misfit, dt * sum over nodes of
/// sum_s e_s/2 (model_s - observed_s)^2; days with a missing target simply
/// contribute nothing for that series. Breakdown is per series.
inline std::array<double, kNumSeries> data_fidelity_terms(const Trajectory& traj,
                                                          const ObservedSeries& obs,
                                                          const LossWeights& w) {
    detail::require_daily(traj.grid, "data_fidelity");
    std::array<double, kNumSeries> out{};
    const double dt = traj.grid.dt();
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto day = static_cast<std::int64_t>(std::llround(traj.grid.node_time(i)));
        const Vec9 y = pack(traj.states[i]);
        for (std::size_t s = 0; s < kNumSeries; ++s) {
            const auto target = obs.at(static_cast<Series>(s), day);
            if (!target) continue;
            const double e = w.fidelity_weight(static_cast<Series>(s));
            const double diff = y[series_component(static_cast<Series>(s))] - *target;
            out[s] += dt * 0.5 * e * diff * diff;
        }
    }
    return out;
}

inline double data_fidelity(const Trajectory& traj, const ObservedSeries& obs,
                            const LossWeights& w) {
    const auto terms = data_fidelity_terms(traj, obs, w);
    double total = 0.0;
    for (double t : terms) total += t;
    return total;
}

/// Forward-difference discretization of (m/2) * integral of |du/dt|^2:
/// (m/2) * sum_i |x_{i+1} - x_i|^2 / dt.
inline double derivative_penalty(const FlatParams& x, double m, const TimeGrid& grid) {
    check_shape(x, grid);
    if (m == 0.0) return 0.0;
    const double dt = grid.dt();
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.n_intervals; ++i) {
        const double* a = x.slice(i);
        const double* b = x.slice(i + 1);
        for (std::size_t j = 0; j < kNumRates; ++j) {
            const double d = b[j] - a[j];
            acc += d * d;
        }
    }
    return 0.5 * m * acc / dt;
}

/// Smooth positivity surrogate e_p * dt * sum max(0, -x)^2 (the term that is
/// differentiated) and the printed indicator e_p * dt * #{x < 0} (metric).
struct PositivityValue {
    double surrogate = 0.0;
    double indicator = 0.0;
};

inline PositivityValue positivity_penalty(const FlatParams& x, double e_p,
                                          const TimeGrid& grid) {
    check_shape(x, grid);
    PositivityValue out;
    if (e_p == 0.0) return out;
    const double dt = grid.dt();
    double sq = 0.0;
    std::size_t count = 0;
    for (double xi : x.v) {
        if (xi < 0.0) {
            sq += xi * xi;
            ++count;
        }
    }
    out.surrogate = e_p * dt * sq;
    out.indicator = e_p * dt * static_cast<double>(count);
    return out;
}

/// Discretized functional risk: integrate the model under the parameters in
/// `x`, then sum fidelity, derivative penalty and positivity surrogate.
inline ObjectiveBreakdown objective(const FlatParams& x, const TimeGrid& grid,
                                    const InitialCondition& ic, const ObservedSeries& obs,
                                    const LossWeights& w) {
    const Trajectory traj = integrate_heun(ic, unflatten(x, grid));
    ObjectiveBreakdown b;
    b.fidelity = data_fidelity_terms(traj, obs, w);
    b.derivative_penalty = derivative_penalty(x, w.m, grid);
    const PositivityValue pos = positivity_penalty(x, w.e_p, grid);
    b.positivity_penalty = pos.surrogate;
    b.positivity_indicator = pos.indicator;
    b.total = b.fidelity_total() + b.derivative_penalty + b.positivity_penalty;
    return b;
}

/// Squared l2 norm of the forward differences of the parameter samples,
/// sum_i |x_{i+1} - x_i|^2. Smoothness diagnostic used by the sweeps.
inline double param_derivative_norm(const FlatParams& x, const TimeGrid& grid) {
    check_shape(x, grid);
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.n_intervals; ++i) {
        const double* a = x.slice(i);
        const double* b = x.slice(i + 1);
        for (std::size_t j = 0; j < kNumRates; ++j) {
            const double d = b[j] - a[j];
            acc += d * d;
        }
    }
    return acc;
}

} // namespace sidarthe
