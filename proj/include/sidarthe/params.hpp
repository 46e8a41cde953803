#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sidarthe/errors.hpp"
#include "sidarthe/grid.hpp"
#include "sidarthe/rates.hpp"

namespace sidarthe {

/// The learnable object: one RateVector per grid node.
struct ParamTrajectory {
    TimeGrid grid;
    std::vector<RateVector> values; // size grid.n_nodes()

    ParamTrajectory() = default;
    ParamTrajectory(TimeGrid g, std::vector<RateVector> vals)
        : grid(g), values(std::move(vals)) {
        if (values.size() != grid.n_nodes())
            throw shape_error("ParamTrajectory: values.size() != n_nodes");
    }

    /// Same rates at every node.
    static ParamTrajectory constant(TimeGrid g, const RateVector& r) {
        return ParamTrajectory(g, std::vector<RateVector>(g.n_nodes(), r));
    }

    bool all_finite() const {
        for (const auto& r : values)
            if (!r.all_finite()) return false;
        return true;
    }
};

/// Zero-order hold evaluation: the value at node t_i holds on [t_i, t_{i+1});
/// the grid end maps to the last node.
inline const RateVector& rate_at(const ParamTrajectory& params, double t) {
    const TimeGrid& g = params.grid;
    if (!(t >= g.t_start) || !(t <= g.t_end()))
        throw range_error("rate_at: t outside the grid");
    auto i = static_cast<std::size_t>(std::floor((t - g.t_start) / g.dt()));
    if (i > g.n_intervals) i = g.n_intervals;
    return params.values[i];
}

} // namespace sidarthe
