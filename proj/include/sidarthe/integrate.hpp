#pragma once

#include <cstddef>
#include <vector>

#include "sidarthe/errors.hpp"
#include "sidarthe/grid.hpp"
#include "sidarthe/model.hpp"
#include "sidarthe/params.hpp"
#include "sidarthe/state.hpp"

namespace sidarthe {

/// Integrated solution sampled at the grid nodes.
struct Trajectory {
    TimeGrid grid;
    std::vector<AugmentedState> states; // size grid.n_nodes(); states[0] == ic exactly

    const AugmentedState& at(std::size_t node) const { return states[node]; }
};

namespace detail {

/// One explicit Heun (trapezoidal predictor-corrector) substep.
/// u_pred is the rate sample at the substep start, u_corr at its end.
inline Vec9 heun_step(const Vec9& y, const RateVector& u_pred, const RateVector& u_corr,
                      double h, double population) {
    const Vec9 k1 = rhs(y, u_pred, population);
    Vec9 mid;
    for (std::size_t c = 0; c < kDim; ++c) mid[c] = y[c] + h * k1[c];
    const Vec9 k2 = rhs(mid, u_corr, population);
    Vec9 out;
    for (std::size_t c = 0; c < kDim; ++c) out[c] = y[c] + 0.5 * h * (k1[c] + k2[c]);
    return out;
}

inline bool finite(const Vec9& y) {
    for (double x : y)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Rate sample used by the corrector stage of substep `s` inside interval `i`.
/// All substeps end strictly inside the interval except the last one, whose
/// end coincides with node i+1; under zero-order hold that node carries the
/// next sample.
inline const RateVector& corrector_rate(const ParamTrajectory& p, std::size_t i,
                                        std::size_t s, std::size_t substeps) {
    return (s + 1 == substeps) ? p.values[i + 1] : p.values[i];
}

/// Forward sweep shared by the plain integrator and the gradient tape. Calls
/// `on_substep(global_step, y_before)` before each substep and records node
/// states. Deterministic: identical inputs give bitwise-identical output.
template <typename OnSubstep>
inline std::vector<AugmentedState> heun_sweep(const InitialCondition& ic,
                                              const ParamTrajectory& params,
                                              OnSubstep&& on_substep) {
    const TimeGrid& g = params.grid;
    const std::size_t sub = g.substeps;
    const double h = g.dt() / static_cast<double>(sub);

    std::vector<AugmentedState> nodes;
    nodes.reserve(g.n_nodes());
    Vec9 y = pack(AugmentedState{ic.z0, ic.h_d0});
    nodes.push_back(unpack(y));

    std::size_t step = 0;
    for (std::size_t i = 0; i < g.n_intervals; ++i) {
        for (std::size_t s = 0; s < sub; ++s, ++step) {
            on_substep(step, y);
            y = heun_step(y, params.values[i], corrector_rate(params, i, s, sub), h,
                          ic.population);
            if (!finite(y)) throw divergence_error(step);
        }
        nodes.push_back(unpack(y));
    }
    return nodes;
}

} // namespace detail

/// Integrate the augmented system over the parameter grid with Heun's method,
/// recording the state at every node.
inline Trajectory integrate_heun(const InitialCondition& ic, const ParamTrajectory& params) {
    if (!params.all_finite()) throw domain_error("integrate_heun: non-finite parameters");
    if (!ic.z0.all_finite() || !std::isfinite(ic.h_d0) || !(ic.population > 0.0))
        throw domain_error("integrate_heun: invalid initial condition");
    Trajectory traj;
    traj.grid = params.grid;
    traj.states = detail::heun_sweep(ic, params, [](std::size_t, const Vec9&) {});
    return traj;
}

} // namespace sidarthe
