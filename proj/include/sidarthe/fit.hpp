#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "sidarthe/forecast.hpp"
#include "sidarthe/gradient.hpp"
#include "sidarthe/schedule.hpp"
#include "sidarthe/tying.hpp"

namespace sidarthe {

/// One pass of the time-coupled update. Nodes are visited in ascending
/// order; node 0 takes a plain descent step, and each later node i adds
/// omega_i times the displacement its left neighbour just made:
///
///   x_0 <- x_0 - pi_0 g_0
///   x_i <- x_i - pi_i g_i + omega_i (x_{i-1}^new - x_{i-1}^old),  i > 0.
///
/// With momentum disabled (use_momentum = false) omega is forced to zero
/// and the pass is exactly coordinate-wise gradient descent.
inline void gf_step(FlatParams& x, const FlatParams& g, const TimeGrid& grid,
                    const MomentumSchedule& sched, bool use_momentum = true) {
    check_shape(x, grid);
    if (g.size() != x.size()) throw shape_error("gf_step: gradient shape mismatch");
    const std::size_t n = grid.n_nodes();
    std::array<double, kNumRates> prev_disp{};
    for (std::size_t i = 0; i < n; ++i) {
        const StepFactors f = schedule_at(sched, grid.node_time(i) - grid.t_start);
        const double omega = (use_momentum && i > 0) ? f.omega : 0.0;
        double* xi = x.slice(i);
        const double* gi = g.slice(i);
        for (std::size_t j = 0; j < kNumRates; ++j) {
            const double disp = -f.pi * gi[j] + omega * prev_disp[j];
            xi[j] += disp;
            prev_disp[j] = disp;
        }
    }
}

/// Draw one value per tying group from U[0, 0.6] and hold it constant in
/// time. Deterministic in (grid, map, seed).
inline FlatParams random_constant_init(const TimeGrid& grid, const TyingMap& map,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 0.6);
    std::array<double, kNumRates> base{};
    // Groups are canonically ordered, so draw order is stable.
    for (const auto& grp : map.groups) {
        const double v = unif(rng);
        for (std::size_t j : grp) base[j] = v;
    }
    FlatParams x = FlatParams::zeros(grid.n_nodes());
    for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
        double* s = x.slice(i);
        for (std::size_t j = 0; j < kNumRates; ++j) s[j] = base[j];
    }
    return x;
}

struct FitConfig {
    MomentumSchedule schedule;
    LossWeights weights;
    TyingMap tying = TyingMap::standard();
    std::size_t max_epochs = 1000;
    bool use_momentum = true;
    /// 0 disables early stopping; otherwise stop after this many epochs
    /// without improving the selection loss.
    std::size_t patience = 0;
};

struct EpochRecord {
    ObjectiveBreakdown train;
    double selection_loss; // validation fidelity when present, else train total
};

/// Spread of the inter-node forward differences |x_{i+1} - x_i| (Euclidean,
/// over all 18 rates) of the returned parameters. A large first/last entry
/// relative to the median flags boundary artefacts.
struct BoundaryDiagnostics {
    double first = 0.0;
    double last = 0.0;
    double max = 0.0;
    double median = 0.0;
};

inline BoundaryDiagnostics boundary_diagnostics(const FlatParams& x, const TimeGrid& grid) {
    check_shape(x, grid);
    BoundaryDiagnostics d;
    const std::size_t n = grid.n_intervals;
    if (n == 0) return d;
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = x.slice(i);
        const double* b = x.slice(i + 1);
        double s = 0.0;
        for (std::size_t j = 0; j < kNumRates; ++j) {
            const double dj = b[j] - a[j];
            s += dj * dj;
        }
        norms[i] = std::sqrt(s);
    }
    d.first = norms.front();
    d.last = norms.back();
    d.max = *std::max_element(norms.begin(), norms.end());
    std::vector<double> sorted = norms;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = n / 2;
    d.median = (n % 2 == 1) ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    return d;
}

struct FitResult {
    FlatParams params;      // best iterate under the selection loss
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    bool diverged = false;
    std::size_t divergence_step = 0; // substep index when diverged
    std::vector<EpochRecord> history; // epoch 0 = initial point; length epochs_run + 1
    BoundaryDiagnostics boundary;
    bool used_validation = false;
};

namespace detail {

/// Selection loss for one iterate: validation fidelity under the
/// hold-last-value extension when validation days exist, else train total.
inline double selection_loss(const FlatParams& x, const TimeGrid& grid,
                             const InitialCondition& ic, const ObservedSeries& val_obs,
                             const LossWeights& w, bool has_val, double train_total) {
    if (!has_val) return train_total;
    const auto t0 = static_cast<std::int64_t>(std::llround(grid.t_start));
    const std::int64_t last_day =
        val_obs.start_day + static_cast<std::int64_t>(val_obs.days()) - 1;
    const auto train_intervals = static_cast<std::int64_t>(std::llround(grid.horizon));
    const std::size_t horizon =
        static_cast<std::size_t>(std::max(last_day - t0, train_intervals));
    const TimeGrid ext{grid.t_start, static_cast<double>(horizon), horizon, grid.substeps};
    const FlatParams xe = extend_hold_last(x, grid, ext);
    Trajectory traj = integrate_heun(ic, unflatten(xe, ext));
    const auto terms = data_fidelity_terms(traj, val_obs, w);
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

} // namespace detail

/// Gradient-flow fitting loop. Each epoch computes the exact gradient of
/// the training objective, sums it within tying groups, takes one gf_step
/// pass, and re-ties the parameters. The returned parameters are the best
/// iterate seen under the selection loss (validation fidelity when
/// validation data is supplied, training total otherwise). Divergence of
/// the forward model marks the result instead of throwing; history up to
/// the failing epoch is preserved.
inline FitResult fit(const FlatParams& init, const TimeGrid& grid, const InitialCondition& ic,
                     const ObservedSeries& train_obs, const FitConfig& cfg,
                     const ObservedSeries* val_obs = nullptr) {
    check_shape(init, grid);
    if (!cfg.schedule.valid()) throw domain_error("fit: invalid schedule");

    const bool has_val = val_obs != nullptr && val_obs->days() > 0;

    FitResult out;
    out.params = init;
    out.used_validation = has_val;

    FlatParams x = init;
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0;; ++epoch) {
        GradientResult gr;
        try {
            gr = gradient(x, grid, ic, train_obs, cfg.weights);
        } catch (const divergence_error& e) {
            out.diverged = true;
            out.divergence_step = e.step;
            break;
        }
        double sel;
        try {
            sel = detail::selection_loss(x, grid, ic, has_val ? *val_obs : train_obs, cfg.weights,
                                         has_val, gr.value.total);
        } catch (const divergence_error& e) {
            out.diverged = true;
            out.divergence_step = e.step;
            break;
        }
        out.history.push_back({gr.value, sel});
        if (sel < best) {
            best = sel;
            out.best_epoch = epoch;
            out.params = x;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (epoch == cfg.max_epochs) break;
        if (cfg.patience > 0 && since_best >= cfg.patience) break;

        tie_gradient(gr.grad, cfg.tying);
        gf_step(x, gr.grad, grid, cfg.schedule, cfg.use_momentum);
        tie_params(x, cfg.tying);
        out.epochs_run = epoch + 1;
    }

    out.boundary = boundary_diagnostics(out.params, grid);
    return out;
}

} // namespace sidarthe
