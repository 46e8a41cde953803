#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string_view>

#include "sidarthe/errors.hpp"

namespace sidarthe {

inline constexpr std::size_t kNumCompartments = 8;

/// Compartment index, fixed ordering.
enum class Comp : std::size_t {
    S = 0, // susceptible
    I = 1, // infected, asymptomatic, undetected
    D = 2, // infected, asymptomatic, detected
    A = 3, // infected, symptomatic, undetected
    R = 4, // infected, symptomatic, detected
    T = 5, // infected, acutely symptomatic, detected
    H = 6, // healed
    E = 7, // deceased
};

inline constexpr std::array<std::string_view, kNumCompartments> kCompNames = {
    "S", "I", "D", "A", "R", "T", "H", "E"};

/// The eight compartment populations. Values may be absolute counts or
/// fractions of the total; the dynamics normalize the bilinear term by the
/// population constant so both conventions give the same per-day rates.
struct StateVector {
    std::array<double, kNumCompartments> v{};

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    double& operator[](Comp c) { return v[static_cast<std::size_t>(c)]; }
    double operator[](Comp c) const { return v[static_cast<std::size_t>(c)]; }

    double susceptible() const { return v[0]; }
    double infected_undet() const { return v[1]; }
    double diagnosed() const { return v[2]; }
    double ailing() const { return v[3]; }
    double recognized() const { return v[4]; }
    double threatened() const { return v[5]; }
    double healed() const { return v[6]; }
    double extinct() const { return v[7]; }

    double sum() const {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    friend bool operator==(const StateVector&, const StateVector&) = default;
};

/// Compartments plus the diagnosed-recovered count h_d, integrated as a
/// ninth state so the loss stays local in time.
struct AugmentedState {
    StateVector z;
    double h_d = 0.0;

    bool all_finite() const { return z.all_finite() && std::isfinite(h_d); }

    friend bool operator==(const AugmentedState&, const AugmentedState&) = default;
};

/// Starting point of an integration. `population` is the conserved total N.
struct InitialCondition {
    StateVector z0;
    double h_d0 = 0.0;
    double population = 1.0;

    /// All components non-negative and the compartments sum to the population.
    bool valid(double tol = 1e-9) const {
        if (!(population > 0.0) || !z0.all_finite() || !std::isfinite(h_d0)) return false;
        if (h_d0 < 0.0) return false;
        for (double x : z0.v)
            if (x < 0.0) return false;
        return std::abs(z0.sum() - population) <= tol * population;
    }
};

} // namespace sidarthe
