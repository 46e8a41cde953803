#pragma once

#include <cstddef>
#include <cstring>

#include "sidarthe/flatten.hpp"
#include "sidarthe/integrate.hpp"
#include "sidarthe/loss.hpp"
#include "sidarthe/observations.hpp"

namespace sidarthe {

/// Extend a parameter vector from `grid` to the longer `ext` grid (same
/// start, same substeps) by holding the last node's values constant — the
/// forecasting rule: beyond the fitted horizon, rates stay frozen at their
/// final fitted values.
inline FlatParams extend_hold_last(const FlatParams& x, const TimeGrid& grid,
                                   const TimeGrid& ext) {
    check_shape(x, grid);
    if (ext.n_nodes() < grid.n_nodes() || ext.substeps != grid.substeps ||
        ext.t_start != grid.t_start)
        throw shape_error("extend_hold_last: extension grid must prolong the source grid");
    FlatParams out = FlatParams::zeros(ext.n_nodes());
    for (std::size_t i = 0; i < grid.n_nodes(); ++i)
        std::memcpy(out.slice(i), x.slice(i), kNumRates * sizeof(double));
    const double* last = x.slice(grid.n_nodes() - 1);
    for (std::size_t i = grid.n_nodes(); i < ext.n_nodes(); ++i)
        std::memcpy(out.slice(i), last, kNumRates * sizeof(double));
    return out;
}

/// Integrate `horizon_days` past the fitted grid, holding the last rates.
/// The returned trajectory covers the full span (fit window + forecast).
inline Trajectory forecast(const FlatParams& x, const TimeGrid& grid, const InitialCondition& ic,
                           std::size_t horizon_days) {
    check_shape(x, grid);
    detail::require_daily(grid, "forecast");
    const std::size_t total = grid.n_intervals + horizon_days;
    const TimeGrid ext{grid.t_start, static_cast<double>(total), total, grid.substeps};
    return integrate_heun(ic, unflatten(extend_hold_last(x, grid, ext), ext));
}

/// Daily values of one observable series along a trajectory.
inline std::vector<double> series_prediction(const Trajectory& traj, Series s) {
    detail::require_daily(traj.grid, "series_prediction");
    const std::size_t c = series_component(s);
    std::vector<double> out(traj.grid.n_nodes());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pack(traj.states[i])[c];
    return out;
}

} // namespace sidarthe
