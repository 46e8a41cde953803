#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "sidarthe/errors.hpp"
#include "sidarthe/rates.hpp"
#include "sidarthe/state.hpp"

namespace sidarthe {

// Augmented phase space: the 8 compartments followed by h_d.
inline constexpr std::size_t kDim = kNumCompartments + 1;
using Vec9 = std::array<double, kDim>;
using Vec18 = std::array<double, kNumRates>;

inline Vec9 pack(const AugmentedState& s) {
    Vec9 y;
    for (std::size_t i = 0; i < kNumCompartments; ++i) y[i] = s.z[i];
    y[8] = s.h_d;
    return y;
}

inline AugmentedState unpack(const Vec9& y) {
    AugmentedState s;
    for (std::size_t i = 0; i < kNumCompartments; ++i) s.z[i] = y[i];
    s.h_d = y[8];
    return s;
}

/// Instantaneous time derivative of the augmented state.
///
/// The compartments follow the eight-equation flow model; h_d accumulates the
/// three recovery flows out of the detected compartments (rho*D + xi*R +
/// sigma*T). The bilinear contagion term is computed as S/population *
/// (alpha*I + beta*D + gamma*A + delta*R): states may be absolute counts or
/// fractions of the total, the rates keep their per-day meaning either way.
///
/// Each inter-compartment flow is evaluated once and entered with opposite
/// signs in its two compartments, so the eight compartment derivatives sum to
/// zero up to a few ulps.
inline Vec9 rhs(const Vec9& y, const RateVector& u, double population) {
    const double s = y[0], i = y[1], d = y[2], a = y[3], r = y[4], t = y[5];
    // y[6] (H) and y[7] (E) are sinks; y[8] (h_d) is a pure accumulator.

    const double contagion =
        s / population * (u.alpha() * i + u.beta() * d + u.gamma() * a + u.delta() * r);
    const double f_ie = u.epsilon() * i; // I -> D
    const double f_iz = u.zeta() * i;    // I -> A
    const double f_il = u.lambda() * i;  // I -> H
    const double f_de = u.eta() * d;     // D -> R
    const double f_dr = u.rho() * d;     // D -> H
    const double f_at = u.theta() * a;   // A -> R
    const double f_am = u.mu() * a;      // A -> T
    const double f_ak = u.kappa() * a;   // A -> H
    const double f_ap = u.phi() * a;     // A -> E
    const double f_rn = u.nu() * r;      // R -> T
    const double f_rx = u.xi() * r;      // R -> H
    const double f_rc = u.chi() * r;     // R -> E
    const double f_ts = u.sigma() * t;   // T -> H
    const double f_tt = u.tau() * t;     // T -> E

    Vec9 dy;
    dy[0] = -contagion;
    dy[1] = contagion - f_ie - f_iz - f_il;
    dy[2] = f_ie - f_de - f_dr;
    dy[3] = f_iz - f_at - f_am - f_ak - f_ap;
    dy[4] = f_de + f_at - f_rn - f_rx - f_rc;
    dy[5] = f_am + f_rn - f_ts - f_tt;
    dy[6] = f_il + f_dr + f_ak + f_rx + f_ts;
    dy[7] = f_ap + f_rc + f_tt;
    dy[8] = f_dr + f_rx + f_ts;
    return dy;
}

inline AugmentedState rhs(const AugmentedState& state, const RateVector& rates,
                          double population) {
    if (!state.all_finite() || !rates.all_finite())
        throw domain_error("rhs: non-finite state or rates");
    if (!(population > 0.0) || !std::isfinite(population))
        throw domain_error("rhs: population must be finite and > 0");
    return unpack(rhs(pack(state), rates, population));
}

/// v^T * d(rhs)/d(state): pulls an adjoint vector back through the state
/// dependence of the dynamics.
inline Vec9 rhs_state_vjp(const Vec9& y, const RateVector& u, double population,
                          const Vec9& v) {
    const double s = y[0], i = y[1], d = y[2], a = y[3], r = y[4];
    const double inv_n = 1.0 / population;
    const double load = inv_n * (u.alpha() * i + u.beta() * d + u.gamma() * a + u.delta() * r);
    const double sn = s * inv_n;

    Vec9 g{};
    // dS, dI rows: contagion enters with -/+; drain of I by (eps+zeta+lambda).
    g[0] = load * (v[1] - v[0]);
    g[1] = sn * u.alpha() * (v[1] - v[0]) +
           u.epsilon() * (v[2] - v[1]) + u.zeta() * (v[3] - v[1]) + u.lambda() * (v[6] - v[1]);
    g[2] = sn * u.beta() * (v[1] - v[0]) +
           u.eta() * (v[4] - v[2]) + u.rho() * (v[6] - v[2] + v[8]);
    g[3] = sn * u.gamma() * (v[1] - v[0]) +
           u.theta() * (v[4] - v[3]) + u.mu() * (v[5] - v[3]) + u.kappa() * (v[6] - v[3]) +
           u.phi() * (v[7] - v[3]);
    g[4] = sn * u.delta() * (v[1] - v[0]) +
           u.nu() * (v[5] - v[4]) + u.xi() * (v[6] - v[4] + v[8]) + u.chi() * (v[7] - v[4]);
    g[5] = u.sigma() * (v[6] - v[5] + v[8]) + u.tau() * (v[7] - v[5]);
    g[6] = 0.0;
    g[7] = 0.0;
    g[8] = 0.0;
    return g;
}

/// v^T * d(rhs)/d(rates): pulls an adjoint vector back to the 18 rates.
inline Vec18 rhs_rate_vjp(const Vec9& y, const RateVector& /*u*/, double population,
                          const Vec9& v) {
    const double s = y[0], i = y[1], d = y[2], a = y[3], r = y[4], t = y[5];
    const double sn = s / population;

    Vec18 g{};
    g[0] = sn * i * (v[1] - v[0]);                // alpha
    g[1] = sn * d * (v[1] - v[0]);                // beta
    g[2] = sn * a * (v[1] - v[0]);                // gamma
    g[3] = sn * r * (v[1] - v[0]);                // delta
    g[4] = i * (v[2] - v[1]);                     // epsilon
    g[5] = i * (v[3] - v[1]);                     // zeta
    g[6] = d * (v[4] - v[2]);                     // eta
    g[7] = a * (v[4] - v[3]);                     // theta
    g[8] = a * (v[6] - v[3]);                     // kappa
    g[9] = i * (v[6] - v[1]);                     // lambda
    g[10] = a * (v[5] - v[3]);                    // mu
    g[11] = r * (v[5] - v[4]);                    // nu
    g[12] = r * (v[6] - v[4] + v[8]);             // xi
    g[13] = d * (v[6] - v[2] + v[8]);             // rho
    g[14] = t * (v[6] - v[5] + v[8]);             // sigma
    g[15] = a * (v[7] - v[3]);                    // phi
    g[16] = r * (v[7] - v[4]);                    // chi
    g[17] = t * (v[7] - v[5]);                    // tau
    return g;
}

namespace detail {
inline double checked_denominator(double d, const char* group) {
    if (!(d > 0.0)) throw singularity_error(group);
    return d;
}
} // namespace detail

/// Basic reproduction number of the extended model, evaluated exactly as the
/// closed form is written (the leading denominator is epsilon+xi and the last
/// inner denominator omits phi; both are kept verbatim, see README).
inline double basic_reproduction_number(const RateVector& u) {
    using detail::checked_denominator;
    if (!u.all_finite()) throw domain_error("basic_reproduction_number: non-finite rates");
    const double d_lead = checked_denominator(u.epsilon() + u.xi(), "epsilon+xi");
    const double d_eta_rho = checked_denominator(u.eta() + u.rho(), "eta+rho");
    const double d_tmkp =
        checked_denominator(u.theta() + u.mu() + u.kappa() + u.phi(), "theta+mu+kappa+phi");
    const double d_nxc = checked_denominator(u.nu() + u.xi() + u.chi(), "nu+xi+chi");
    const double d_tmk = checked_denominator(u.theta() + u.mu() + u.kappa(), "theta+mu+kappa");

    const double inner = u.eta() * u.epsilon() / d_eta_rho + u.zeta() * u.theta() / d_tmk;
    return (u.alpha() + u.beta() * u.epsilon() / d_eta_rho + u.gamma() * u.zeta() / d_tmkp +
            u.delta() / d_nxc * inner) /
           d_lead;
}

} // namespace sidarthe
