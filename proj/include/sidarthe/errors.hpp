#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sidarthe {

/// Base class for all errors thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise out-of-domain numeric input.
struct domain_error : error {
    using error::error;
};

/// A denominator of a derived quantity vanished; `group` names the rate sum.
struct singularity_error : error {
    std::string group;
    explicit singularity_error(std::string g)
        : error("singular denominator: " + g + " must be > 0"), group(std::move(g)) {}
};

/// Query outside the time grid, or a split that overflows the series.
struct range_error : error {
    using error::error;
};

/// Vector/trajectory length does not match the grid.
struct shape_error : error {
    using error::error;
};

/// Malformed input file; carries the 1-based row where parsing failed (0 = n/a).
struct parse_error : error {
    std::size_t row = 0;
    parse_error(const std::string& msg, std::size_t r)
        : error(r ? msg + " (row " + std::to_string(r) + ")" : msg), row(r) {}
    explicit parse_error(const std::string& msg) : error(msg) {}
};

/// Integration produced a non-finite state; `step` is the global substep index.
struct divergence_error : error {
    std::size_t step = 0;
    explicit divergence_error(std::size_t s)
        : error("integration diverged at substep " + std::to_string(s)), step(s) {}
};

} // namespace sidarthe
