#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "sidarthe/loss.hpp"

namespace sidarthe {

struct GradientResult {
    FlatParams grad;
    ObjectiveBreakdown value;
};

namespace detail {

/// Adds the direct derivative of the node fidelity term,
/// dt * e_s * (model - observed), to the state adjoint.
inline void add_fidelity_adjoint(Vec9& adj, const Vec9& y, std::int64_t day,
                                 const ObservedSeries& obs, const LossWeights& w, double dt) {
    for (std::size_t s = 0; s < kNumSeries; ++s) {
        const auto target = obs.at(static_cast<Series>(s), day);
        if (!target) continue;
        const std::size_t c = series_component(static_cast<Series>(s));
        adj[c] += dt * w.fidelity_weight(static_cast<Series>(s)) * (y[c] - *target);
    }
}

} // namespace detail

/// Exact gradient of the differentiated objective (fidelity + derivative
/// penalty + positivity surrogate) with respect to every parameter sample.
///
/// The data-fidelity part is obtained by reverse accumulation through the
/// Heun sweep: the forward pass records the state at every substep, the
/// backward pass pulls one 9-dimensional adjoint vector through each substep
/// (recomputing the predictor stage) and deposits rate contributions into the
/// owning node slices. Reduction order is fixed, so repeated evaluations are
/// bitwise identical.
inline GradientResult gradient(const FlatParams& x, const TimeGrid& grid,
                               const InitialCondition& ic, const ObservedSeries& obs,
                               const LossWeights& w) {
    check_shape(x, grid);
    detail::require_daily(grid, "gradient");
    const ParamTrajectory params = unflatten(x, grid);
    if (!params.all_finite()) throw domain_error("gradient: non-finite parameters");

    const std::size_t n_int = grid.n_intervals;
    const std::size_t sub = grid.substeps;
    const double h = grid.dt() / static_cast<double>(sub);
    const double dt = grid.dt();
    const double n_pop = ic.population;

    // Forward sweep, taping the state at the start of every substep.
    std::vector<Vec9> tape(n_int * sub);
    std::vector<AugmentedState> nodes = detail::heun_sweep(
        ic, params, [&](std::size_t step, const Vec9& y) { tape[step] = y; });

    GradientResult res;
    res.grad = FlatParams::zeros(grid.n_nodes());

    Trajectory traj;
    traj.grid = grid;
    traj.states = std::move(nodes);
    res.value.fidelity = data_fidelity_terms(traj, obs, w);
    res.value.derivative_penalty = derivative_penalty(x, w.m, grid);
    const PositivityValue pos = positivity_penalty(x, w.e_p, grid);
    res.value.positivity_penalty = pos.surrogate;
    res.value.positivity_indicator = pos.indicator;
    res.value.total =
        res.value.fidelity_total() + res.value.derivative_penalty + res.value.positivity_penalty;

    // Backward sweep for the fidelity part.
    Vec9 adj{};
    {
        const Vec9 y_end = pack(traj.states[n_int]);
        const auto day = static_cast<std::int64_t>(std::llround(grid.node_time(n_int)));
        detail::add_fidelity_adjoint(adj, y_end, day, obs, w, dt);
    }
    for (std::size_t ii = n_int; ii-- > 0;) {
        for (std::size_t ss = sub; ss-- > 0;) {
            const Vec9& y = tape[ii * sub + ss];
            const RateVector& u_pred = params.values[ii];
            const std::size_t corr_node = (ss + 1 == sub) ? ii + 1 : ii;
            const RateVector& u_corr = params.values[corr_node];

            // Recompute the predictor stage of this substep.
            const Vec9 k1 = rhs(y, u_pred, n_pop);
            Vec9 mid;
            for (std::size_t c = 0; c < kDim; ++c) mid[c] = y[c] + h * k1[c];

            // y_next = y + h/2 (k1 + k2), mid = y + h k1, k2 = rhs(mid, u_corr).
            Vec9 k2_adj;
            for (std::size_t c = 0; c < kDim; ++c) k2_adj[c] = 0.5 * h * adj[c];
            const Vec9 mid_adj = rhs_state_vjp(mid, u_corr, n_pop, k2_adj);
            const Vec18 g_corr = rhs_rate_vjp(mid, u_corr, n_pop, k2_adj);

            Vec9 k1_adj;
            for (std::size_t c = 0; c < kDim; ++c) k1_adj[c] = 0.5 * h * adj[c] + h * mid_adj[c];
            const Vec9 y_adj_from_k1 = rhs_state_vjp(y, u_pred, n_pop, k1_adj);
            const Vec18 g_pred = rhs_rate_vjp(y, u_pred, n_pop, k1_adj);

            double* gc = res.grad.slice(corr_node);
            double* gp = res.grad.slice(ii);
            for (std::size_t j = 0; j < kNumRates; ++j) {
                gc[j] += g_corr[j];
                gp[j] += g_pred[j];
            }
            for (std::size_t c = 0; c < kDim; ++c) adj[c] += mid_adj[c] + y_adj_from_k1[c];
        }
        if (ii > 0) {
            const Vec9 y_node = pack(traj.states[ii]);
            const auto day = static_cast<std::int64_t>(std::llround(grid.node_time(ii)));
            detail::add_fidelity_adjoint(adj, y_node, day, obs, w, dt);
        }
    }

    // Derivative penalty: m/dt * (x_i - x_{i-1}) enters node i with + and
    // node i-1 with -, summed over the forward differences.
    if (w.m != 0.0) {
        const double c = w.m / dt;
        for (std::size_t i = 0; i < n_int; ++i) {
            const double* a = x.slice(i);
            const double* b = x.slice(i + 1);
            double* ga = res.grad.slice(i);
            double* gb = res.grad.slice(i + 1);
            for (std::size_t j = 0; j < kNumRates; ++j) {
                const double d = c * (b[j] - a[j]);
                gb[j] += d;
                ga[j] -= d;
            }
        }
    }

    // Positivity surrogate: d/dx of e_p * dt * max(0, -x)^2 is 2 e_p dt x on
    // the negative side.
    if (w.e_p != 0.0) {
        for (std::size_t k = 0; k < x.size(); ++k)
            if (x[k] < 0.0) res.grad[k] += 2.0 * w.e_p * dt * x[k];
    }

    return res;
}

} // namespace sidarthe
