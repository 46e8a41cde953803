// Fit time-varying rates to synthetic observations and score the forecast.
// Generates 40 days of data from known constant rates, fits the first 28
// days (with 6 validation days) from a random initialization, then forecasts
// the remaining 6 and prints per-series errors.

#include <cstdio>

#include "sidarthe/fit.hpp"
#include "sidarthe/forecast.hpp"
#include "sidarthe/metrics.hpp"
#include "sidarthe/synthetic.hpp"

using namespace sidarthe;

int main() {
    // Ground truth: a mild outbreak on a unit population.
    InitialCondition ic;
    ic.population = 1.0;
    ic.z0[Comp::I] = 2e-4;
    ic.z0[Comp::D] = 4e-5;
    ic.z0[Comp::A] = 1e-5;
    ic.z0[Comp::R] = 1e-5;
    ic.z0[Comp::T] = 5e-6;
    ic.z0[Comp::S] = 1.0 - 2.65e-4;
    ic.h_d0 = 1e-6;

    RateVector truth;
    truth[Rate::alpha] = 0.25;
    truth[Rate::gamma] = 0.20;
    truth[Rate::beta] = truth[Rate::delta] = 0.006;
    truth[Rate::epsilon] = 0.12;
    truth[Rate::zeta] = truth[Rate::eta] = 0.08;
    truth[Rate::theta] = 0.25;
    truth[Rate::kappa] = truth[Rate::xi] = truth[Rate::nu] = truth[Rate::sigma] = 0.02;
    truth[Rate::lambda] = truth[Rate::rho] = 0.03;
    truth[Rate::mu] = 0.015;
    truth[Rate::tau] = 0.015;
    truth[Rate::phi] = truth[Rate::chi] = 0.004;

    const TimeGrid full = TimeGrid::daily(40);
    const Trajectory ref = integrate_heun(ic, ParamTrajectory::constant(full, truth));
    const ObservedSeries obs = observations_from_trajectory(ref, ic.population);
    const SplitSeries parts = split_series(obs, SplitSpec{28, 6, 6});

    // Scale each series' weight by 1/max^2 so all five contribute equally.
    LossWeights w = LossWeights::uniform_fidelity(1.0, 10.0, 300.0);
    {
        double mx[kNumSeries] = {};
        for (std::size_t si = 0; si < kNumSeries; ++si)
            for (const auto& v : parts.train.of(static_cast<Series>(si)))
                if (v) mx[si] = std::max(mx[si], std::abs(*v));
        w.e_d = 1.0 / (mx[0] * mx[0]);
        w.e_r = 1.0 / (mx[1] * mx[1]);
        w.e_t = 1.0 / (mx[2] * mx[2]);
        w.e_h = 1.0 / (mx[3] * mx[3]);
        w.e_e = 1.0 / (mx[4] * mx[4]);
    }

    FitConfig cfg;
    cfg.schedule = MomentumSchedule{2e-5, 0.0, 0.1};
    cfg.weights = w;
    cfg.max_epochs = 400000;

    const TimeGrid g = TimeGrid::daily(28);
    const FlatParams init = random_constant_init(g, cfg.tying, /*seed=*/1);
    const FitResult fr = fit(init, g, ic, parts.train, cfg, &parts.validation);
    if (fr.diverged) {
        std::printf("fit diverged at substep %zu\n", fr.divergence_step);
        return 1;
    }
    std::printf("fit: %zu epochs, best at %zu, selection loss %.3e\n", fr.epochs_run,
                fr.best_epoch, fr.history[fr.best_epoch].selection_loss);

    // Forecast through the validation + test window and score the test days.
    const Trajectory fc = forecast(fr.params, g, ic, 12);
    const ForecastReport rep = evaluate_forecast(fc, parts.test, 0.30);
    const char* names[kNumSeries] = {"home-isolated", "hospitalized", "ICU", "healed",
                                     "deceased"};
    for (std::size_t si = 0; si < kNumSeries; ++si) {
        const SeriesScore& sc = rep.per_series[si];
        if (sc.mape_percent)
            std::printf("%-14s MAPE %6.2f%%  within 30%%: %zu/%zu\n", names[si],
                        *sc.mape_percent, sc.within.num, sc.within.den);
        else
            std::printf("%-14s no evaluable days\n", names[si]);
    }
    return 0;
}
