#pragma once

#include <cmath>
#include <cstdint>

#include "sidarthe/integrate.hpp"
#include "sidarthe/loss.hpp"
#include "sidarthe/observations.hpp"

namespace sidarthe {

/// Read the five observable series off a daily trajectory, producing a
/// fully populated observation set (ground truth for recovery studies).
inline ObservedSeries observations_from_trajectory(const Trajectory& traj, double population) {
    detail::require_daily(traj.grid, "observations_from_trajectory");
    ObservedSeries obs = ObservedSeries::empty(traj.grid.n_nodes(), population);
    obs.start_day = static_cast<std::int64_t>(std::llround(traj.grid.t_start));
    for (std::size_t si = 0; si < kNumSeries; ++si) {
        const auto s = static_cast<Series>(si);
        const std::size_t c = series_component(s);
        auto& col = obs.of(s);
        for (std::size_t i = 0; i < traj.grid.n_nodes(); ++i)
            col[i] = pack(traj.states[i])[c];
    }
    return obs;
}

/// Split a series into consecutive train / validation / test windows.
/// Missing entries are carried through; each part keeps the absolute
/// day-of-origin so later alignment is automatic. Lengths must sum to the
/// source length exactly.
struct SplitSeries {
    ObservedSeries train;
    ObservedSeries validation;
    ObservedSeries test;
};

inline SplitSeries split_series(const ObservedSeries& obs, const SplitSpec& spec) {
    if (spec.total() != obs.days())
        throw range_error("split_series: split lengths must sum to the series length");
    SplitSeries out;
    const auto take = [&](std::size_t from, std::size_t len) {
        ObservedSeries part = ObservedSeries::empty(len, obs.population);
        part.start_day = obs.start_day + static_cast<std::int64_t>(from);
        part.date0 = obs.date0; // date of the *original* day 0 kept for reference
        for (std::size_t si = 0; si < kNumSeries; ++si) {
            const auto s = static_cast<Series>(si);
            for (std::size_t i = 0; i < len; ++i) part.of(s)[i] = obs.of(s)[from + i];
        }
        return part;
    };
    out.train = take(0, spec.train);
    out.validation = take(spec.train, spec.validation);
    out.test = take(spec.train + spec.validation, spec.test);
    return out;
}

} // namespace sidarthe
