#pragma once

#include <cstddef>
#include <vector>

#include "sidarthe/errors.hpp"
#include "sidarthe/grid.hpp"
#include "sidarthe/params.hpp"
#include "sidarthe/rates.hpp"

namespace sidarthe {

/// Time-major flat view of a ParamTrajectory: components 18*i .. 18*i+17 are
/// the 18 rates at node t_i. Round-trips losslessly with flatten/unflatten.
struct FlatParams {
    std::vector<double> v;

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    std::size_t n_nodes() const { return v.size() / kNumRates; }

    double* slice(std::size_t node) { return v.data() + node * kNumRates; }
    const double* slice(std::size_t node) const { return v.data() + node * kNumRates; }

    static FlatParams zeros(std::size_t n_nodes) {
        return FlatParams{std::vector<double>(n_nodes * kNumRates, 0.0)};
    }
};

inline void check_shape(const FlatParams& x, const TimeGrid& grid) {
    if (x.size() != grid.n_nodes() * kNumRates)
        throw shape_error("FlatParams: length " + std::to_string(x.size()) +
                          " != 18 * n_nodes (" + std::to_string(grid.n_nodes() * kNumRates) +
                          ")");
}

inline FlatParams flatten(const ParamTrajectory& params) {
    FlatParams x;
    x.v.resize(params.values.size() * kNumRates);
    for (std::size_t i = 0; i < params.values.size(); ++i)
        for (std::size_t j = 0; j < kNumRates; ++j) x.v[i * kNumRates + j] = params.values[i][j];
    return x;
}

inline ParamTrajectory unflatten(const FlatParams& x, const TimeGrid& grid) {
    check_shape(x, grid);
    std::vector<RateVector> vals(grid.n_nodes());
    for (std::size_t i = 0; i < vals.size(); ++i)
        for (std::size_t j = 0; j < kNumRates; ++j) vals[i][j] = x.v[i * kNumRates + j];
    return ParamTrajectory(grid, std::move(vals));
}

} // namespace sidarthe
