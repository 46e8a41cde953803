#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string_view>

#include "sidarthe/errors.hpp"

namespace sidarthe {

inline constexpr std::size_t kNumRates = 18;

/// Canonical index of each flow rate. The ordering is fixed and is the one
/// every flattened parameter vector uses.
enum class Rate : std::size_t {
    alpha = 0,  // S -> I infection via I
    beta = 1,   // S -> I infection via D
    gamma = 2,  // S -> I infection via A
    delta = 3,  // S -> I infection via R
    epsilon = 4, // I -> D detection (asymptomatic)
    zeta = 5,   // I -> A symptoms onset (undetected)
    eta = 6,    // D -> R symptoms onset (detected)
    theta = 7,  // A -> R detection (symptomatic)
    kappa = 8,  // A -> H recovery
    lambda = 9, // I -> H recovery
    mu = 10,    // A -> T aggravation
    nu = 11,    // R -> T aggravation
    xi = 12,    // R -> H recovery
    rho = 13,   // D -> H recovery
    sigma = 14, // T -> H recovery
    phi = 15,   // A -> E death outside ICU
    chi = 16,   // R -> E death outside ICU
    tau = 17,   // T -> E death in ICU
};

inline constexpr std::array<std::string_view, kNumRates> kRateNames = {
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "kappa",
    "lambda", "mu", "nu", "xi", "rho", "sigma", "phi", "chi", "tau"};

/// The 18 instantaneous flow rates, units 1/day. Plain value type; rates may
/// be transiently negative during optimization (positivity is a soft
/// constraint), see is_admissible().
struct RateVector {
    std::array<double, kNumRates> v{};

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    double& operator[](Rate r) { return v[static_cast<std::size_t>(r)]; }
    double operator[](Rate r) const { return v[static_cast<std::size_t>(r)]; }

    double alpha() const { return v[0]; }
    double beta() const { return v[1]; }
    double gamma() const { return v[2]; }
    double delta() const { return v[3]; }
    double epsilon() const { return v[4]; }
    double zeta() const { return v[5]; }
    double eta() const { return v[6]; }
    double theta() const { return v[7]; }
    double kappa() const { return v[8]; }
    double lambda() const { return v[9]; }
    double mu() const { return v[10]; }
    double nu() const { return v[11]; }
    double xi() const { return v[12]; }
    double rho() const { return v[13]; }
    double sigma() const { return v[14]; }
    double phi() const { return v[15]; }
    double chi() const { return v[16]; }
    double tau() const { return v[17]; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    friend bool operator==(const RateVector&, const RateVector&) = default;
};

/// True iff every rate is >= 0 (the model's soft assumption holds).
inline bool is_admissible(const RateVector& r) {
    for (double x : r.v)
        if (!(x >= 0.0)) return false;
    return true;
}

/// Literature baseline for the early Italian outbreak (day-0 piecewise
/// values of the original eight-compartment calibration); the two
/// out-of-ICU death rates are zero there.
inline RateVector italy_reference_rates() {
    RateVector r;
    r[Rate::alpha] = 0.570;
    r[Rate::beta] = 0.011;
    r[Rate::gamma] = 0.456;
    r[Rate::delta] = 0.011;
    r[Rate::epsilon] = 0.171;
    r[Rate::zeta] = 0.125;
    r[Rate::eta] = 0.125;
    r[Rate::theta] = 0.371;
    r[Rate::kappa] = 0.017;
    r[Rate::lambda] = 0.034;
    r[Rate::mu] = 0.017;
    r[Rate::nu] = 0.027;
    r[Rate::xi] = 0.017;
    r[Rate::rho] = 0.034;
    r[Rate::sigma] = 0.017;
    r[Rate::phi] = 0.0;
    r[Rate::chi] = 0.0;
    r[Rate::tau] = 0.01;
    return r;
}

} // namespace sidarthe
