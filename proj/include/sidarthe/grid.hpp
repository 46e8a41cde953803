#pragma once

#include <cmath>
#include <cstddef>

#include "sidarthe/errors.hpp"

namespace sidarthe {

/// Uniform time grid t_i = t_start + i*dt, i = 0..n_intervals, with optional
/// integration substeps inside each interval.
struct TimeGrid {
    double t_start = 0.0;
    double horizon = 0.0;          // total span in days
    std::size_t n_intervals = 1;   // number of dt-intervals (nodes = n_intervals + 1)
    std::size_t substeps = 1;      // integration substeps per interval

    TimeGrid() = default;
    TimeGrid(double start, double span, std::size_t intervals, std::size_t sub = 1)
        : t_start(start), horizon(span), n_intervals(intervals), substeps(sub) {
        if (!(span > 0.0) || intervals < 1 || sub < 1)
            throw shape_error("TimeGrid: need horizon > 0, n_intervals >= 1, substeps >= 1");
    }

    /// Daily grid over `days` consecutive days (nodes 0..days-1, dt = 1).
    static TimeGrid daily(std::size_t days, std::size_t sub = 1) {
        if (days < 2) throw shape_error("TimeGrid::daily: need at least 2 days");
        return TimeGrid(0.0, static_cast<double>(days - 1), days - 1, sub);
    }

    double dt() const { return horizon / static_cast<double>(n_intervals); }
    std::size_t n_nodes() const { return n_intervals + 1; }
    double node_time(std::size_t i) const { return t_start + static_cast<double>(i) * dt(); }
    double t_end() const { return t_start + horizon; }

    /// True when nodes land on consecutive integer days (daily data cadence).
    bool is_daily() const {
        return std::abs(dt() - 1.0) < 1e-12 &&
               std::abs(t_start - std::round(t_start)) < 1e-9;
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

} // namespace sidarthe
