// Acceptance gate. Runs ten end-to-end checks against the library and prints
// one [PASS]/[FAIL]/[SKIP] line per criterion; the exit status is nonzero iff
// any criterion fails. Criterion 10 needs a real data file and is skipped
// unless SIDARTHE_ITALY_CSV points at one.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sidarthe/fit.hpp"
#include "sidarthe/forecast.hpp"
#include "sidarthe/metrics.hpp"
#include "sidarthe/model.hpp"
#include "sidarthe/run_cli.hpp"
#include "sidarthe/synthetic.hpp"

using namespace sidarthe;

namespace {

int failures = 0;

void report(bool ok, int id, const std::string& what) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
    if (!ok) ++failures;
}

void report_skip(int id, const std::string& why) {
    std::printf("[SKIP] criterion %d: %s\n", id, why.c_str());
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// Small outbreak on a unit population; k scales the infected seed.
InitialCondition small_ic(double k) {
    InitialCondition ic;
    ic.population = 1.0;
    ic.z0[Comp::I] = 2e-3 * k;
    ic.z0[Comp::D] = 4e-4 * k;
    ic.z0[Comp::A] = 1e-4 * k;
    ic.z0[Comp::R] = 1e-4 * k;
    ic.z0[Comp::T] = 5e-5 * k;
    ic.z0[Comp::S] = 1.0 - 2.65e-3 * k;
    ic.h_d0 = 1e-5 * k;
    return ic;
}

RateVector mild_rates() {
    RateVector r;
    r[Rate::alpha] = 0.25;
    r[Rate::beta] = 0.006;
    r[Rate::gamma] = 0.20;
    r[Rate::delta] = 0.006;
    r[Rate::epsilon] = 0.12;
    r[Rate::zeta] = 0.08;
    r[Rate::eta] = 0.08;
    r[Rate::theta] = 0.25;
    r[Rate::kappa] = 0.02;
    r[Rate::lambda] = 0.03;
    r[Rate::mu] = 0.015;
    r[Rate::nu] = 0.02;
    r[Rate::xi] = 0.02;
    r[Rate::rho] = 0.03;
    r[Rate::sigma] = 0.02;
    r[Rate::phi] = 0.004;
    r[Rate::chi] = 0.004;
    r[Rate::tau] = 0.015;
    return r;
}

FlatParams constant_params(const TimeGrid& g, const RateVector& r) {
    FlatParams x = FlatParams::zeros(g.n_nodes());
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        double* s = x.slice(i);
        for (std::size_t j = 0; j < kNumRates; ++j) s[j] = r[j];
    }
    return x;
}

FlatParams random_params(const TimeGrid& g, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    FlatParams x = FlatParams::zeros(g.n_nodes());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = dist(gen);
    return x;
}

ObservedSeries synthetic_obs(const InitialCondition& ic, const RateVector& truth,
                             std::size_t days) {
    const TimeGrid g = TimeGrid::daily(days);
    const Trajectory ref = integrate_heun(ic, ParamTrajectory::constant(g, truth));
    return observations_from_trajectory(ref, ic.population);
}

// Fidelity weights scaled per series so every series contributes at the same
// order: e_s = c / max_s^2 over the observed values of `obs`.
LossWeights normalized_weights(const ObservedSeries& obs, double c, double m, double e_p) {
    std::array<double, kNumSeries> mx{};
    for (std::size_t si = 0; si < kNumSeries; ++si)
        for (const auto& v : obs.of(static_cast<Series>(si)))
            if (v) mx[si] = std::max(mx[si], std::abs(*v));
    LossWeights w = LossWeights::uniform_fidelity(1.0, m, e_p);
    w.e_d = c / (mx[0] * mx[0]);
    w.e_r = c / (mx[1] * mx[1]);
    w.e_t = c / (mx[2] * mx[2]);
    w.e_h = c / (mx[3] * mx[3]);
    w.e_e = c / (mx[4] * mx[4]);
    return w;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// 95% half-width from the sample standard deviation; 0 for fewer than 2 runs.
double ci95_halfwidth(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
}

using big = boost::multiprecision::cpp_bin_float_50;

// Closed-form reproduction number evaluated at 50 significant digits,
// written off the formula independently of the library implementation.
big r0_oracle(const RateVector& u) {
    big al = u.alpha(), be = u.beta(), ga = u.gamma(), de = u.delta();
    big ep = u.epsilon(), ze = u.zeta(), et = u.eta(), th = u.theta();
    big ka = u.kappa(), mu = u.mu(), nu = u.nu(), xi = u.xi();
    big rh = u.rho(), ph = u.phi(), ch = u.chi();
    big r = al;
    r += be * ep / (et + rh);
    r += ga * ze / (th + mu + ka + ph);
    r += de / (nu + xi + ch) * (et * ep / (et + rh) + ze * th / (th + mu + ka));
    return r / (ep + xi);
}

// --- the shared synthetic instance for criteria 5-7 -------------------------
//
// A small outbreak (0.03% of the population infected at day 0) keeps the
// dynamics in the near-linear regime, where the observed series identify the
// forecast; 60 days of daily truth split 44 / 6 / 10.

struct Instance {
    InitialCondition ic;
    TimeGrid g = TimeGrid::daily(44);
    SplitSeries parts;
};

Instance make_instance() {
    Instance inst;
    inst.ic = small_ic(0.1);
    const ObservedSeries obs = synthetic_obs(inst.ic, mild_rates(), 60);
    inst.parts = split_series(obs, SplitSpec{44, 6, 10});
    return inst;
}

struct SeedRun {
    bool diverged = false;
    FitResult fr;
};

SeedRun run_seed(const Instance& inst, const LossWeights& w, const MomentumSchedule& sched,
                 bool use_momentum, std::size_t max_epochs, std::uint64_t seed) {
    FitConfig cfg;
    cfg.schedule = sched;
    cfg.weights = w;
    cfg.tying = TyingMap::standard();
    cfg.max_epochs = max_epochs;
    cfg.use_momentum = use_momentum;
    const FlatParams init = random_constant_init(inst.g, cfg.tying, seed);
    SeedRun r;
    r.fr = fit(init, inst.g, inst.ic, inst.parts.train, cfg, &inst.parts.validation);
    r.diverged = r.fr.diverged;
    return r;
}

double test_fidelity(const Instance& inst, const FlatParams& params, const LossWeights& w) {
    const Trajectory traj = forecast(params, inst.g, inst.ic, 16);
    return data_fidelity(traj, inst.parts.test, w);
}

// ---------------------------------------------------------------------------

void criterion_1() {
    Timer timer;
    double worst = 0.0;
    int instances = 0;
    std::mt19937_64 gen(100);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t sub = (rep % 4 == 3) ? 2 : 1;
        const TimeGrid g = TimeGrid::daily(10, sub);
        const InitialCondition ic = small_ic(1.0);
        // Fit point with a few negative entries so the positivity term is live.
        const FlatParams x = random_params(g, gen(), -0.05, 0.55);
        ObservedSeries obs = synthetic_obs(ic, mild_rates(), 10);
        obs.of(Series::R)[3] = std::nullopt; // a hole must not break the adjoint
        const LossWeights w{1.0, 1.5, 2.0, 0.5, 1.0, 0.05, 0.5};

        const GradientResult r = gradient(x, g, ic, obs, w);
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double hj = 1e-5 * (1.0 + std::abs(x[j]));
            FlatParams xp = x, xm = x;
            xp[j] += hj;
            xm[j] -= hj;
            const double fd =
                (objective(xp, g, ic, obs, w).total - objective(xm, g, ic, obs, w).total) /
                (2.0 * hj);
            const double gj = r.grad[j];
            if (std::abs(gj) <= 1e-10 && std::abs(fd) <= 1e-8) continue;
            worst = std::max(worst,
                             std::abs(gj - fd) / std::max(std::abs(gj), std::abs(fd)));
        }
        ++instances;
    }
    const double secs = timer.seconds();
    report(worst <= 1e-4 && secs < 60.0, 1,
           "analytic gradient vs central differences on " + std::to_string(instances) +
               " random 10-day instances: max rel err " + fmt("%.2e", worst) + " (limit 1e-04, " +
               fmt("%.1f", secs) + " s)");
}

void criterion_2() {
    const double n = 6.0e7;
    InitialCondition ic;
    ic.population = n;
    ic.z0[Comp::I] = 2000.0;
    ic.z0[Comp::D] = 1500.0;
    ic.z0[Comp::A] = 600.0;
    ic.z0[Comp::R] = 400.0;
    ic.z0[Comp::T] = 100.0;
    ic.z0[Comp::H] = 80.0;
    ic.z0[Comp::E] = 20.0;
    ic.z0[Comp::S] = n - (2000.0 + 1500.0 + 600.0 + 400.0 + 100.0 + 80.0 + 20.0);

    double worst = 0.0;
    const auto scan = [&](const Trajectory& traj) {
        for (const auto& s : traj.states) worst = std::max(worst, std::abs(s.z.sum() - n));
    };
    scan(integrate_heun(
        ic, ParamTrajectory::constant(TimeGrid::daily(201, 4), italy_reference_rates())));
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const TimeGrid g = TimeGrid::daily(201, 2);
        ParamTrajectory p = ParamTrajectory::constant(g, RateVector{});
        std::mt19937_64 gen(seed);
        std::uniform_real_distribution<double> dist(0.0, 0.6);
        for (auto& rv : p.values)
            for (std::size_t j = 0; j < kNumRates; ++j) rv[j] = dist(gen);
        scan(integrate_heun(ic, p));
    }
    report(worst <= 1e-9 * n, 2,
           "population conserved over 200 days (constant + time-varying rates): worst |sum-N| " +
               fmt("%.2e", worst) + " vs limit " + fmt("%.2e", 1e-9 * n));
}

void criterion_3() {
    const double tau = 0.3, t0_pop = 1000.0;
    RateVector u;
    u[Rate::tau] = tau;
    InitialCondition ic;
    ic.population = t0_pop;
    ic.z0[Comp::T] = t0_pop;

    const auto max_err = [&](std::size_t sub) {
        const TimeGrid g(0.0, 10.0, 10, sub);
        const Trajectory traj = integrate_heun(ic, ParamTrajectory::constant(g, u));
        double e = 0.0;
        for (std::size_t i = 0; i < g.n_nodes(); ++i)
            e = std::max(e, std::abs(traj.states[i].z[Comp::T] -
                                     t0_pop * std::exp(-tau * g.node_time(i))));
        return e;
    };
    const double r12 = max_err(1) / max_err(2);
    const double r24 = max_err(2) / max_err(4);
    const bool ok = r12 >= 3.2 && r12 <= 4.8 && r24 >= 3.2 && r24 <= 4.8;
    report(ok, 3,
           "halving dt on the analytic ICU decay shrinks max error by " + fmt("%.2f", r12) +
               " then " + fmt("%.2f", r24) + " (expected within [3.2, 4.8])");
}

void criterion_4() {
    std::mt19937_64 gen(200);
    std::uniform_real_distribution<double> dist(0.02, 0.9);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        RateVector u;
        for (std::size_t j = 0; j < kNumRates; ++j) u[j] = dist(gen);
        const big exact = r0_oracle(u);
        const big rel = boost::multiprecision::abs((big(basic_reproduction_number(u)) - exact) /
                                                   exact);
        worst = std::max(worst, rel.convert_to<double>());
    }
    report(worst <= 1e-12, 4,
           "reproduction number vs 50-digit independent evaluation on 100 random rate vectors: "
           "max rel err " +
               fmt("%.2e", worst) + " (limit 1e-12)");
}

void criterion_5(const Instance& inst) {
    Timer timer;
    const LossWeights w = normalized_weights(inst.parts.train, 1.0, 10.0, 300.0);
    const MomentumSchedule sched{2e-5, 0.0, 0.1};

    int passing = 0, diverged = 0;
    double worst_passing = 0.0;
    std::ostringstream seeds_note;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SeedRun r = run_seed(inst, w, sched, true, 300000, seed);
        if (r.diverged) {
            ++diverged;
            seeds_note << " s" << seed << "=div";
            continue;
        }
        const Trajectory traj = forecast(r.fr.params, inst.g, inst.ic, 16);
        const ForecastReport rep = evaluate_forecast(traj, inst.parts.test, 0.30);
        double worst_series = 0.0;
        bool all_scored = true;
        for (const auto& sc : rep.per_series) {
            if (!sc.mape_percent) {
                all_scored = false;
                break;
            }
            worst_series = std::max(worst_series, *sc.mape_percent);
        }
        seeds_note << " s" << seed << "=" << fmt("%.2f", worst_series) << "%";
        if (all_scored && worst_series <= 5.0) {
            ++passing;
            worst_passing = std::max(worst_passing, worst_series);
        }
    }
    const double secs = timer.seconds();
    report(passing >= 8 && secs < 600.0, 5,
           "random-init fits recover the held-out 10 days to <=5% MAPE on all series in " +
               std::to_string(passing) + "/10 seeds (" + std::to_string(diverged) +
               " diverged; need >=8); worst passing " + fmt("%.2f", worst_passing) + "%, " +
               fmt("%.0f", secs) + " s (limit 600):" + seeds_note.str());
}

void criterion_6(const Instance& inst) {
    const LossWeights w = normalized_weights(inst.parts.train, 1.0, 10.0, 300.0);
    const MomentumSchedule sched{2e-5, 0.0, 0.2};

    std::vector<double> with, without;
    int div_with = 0, div_without = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SeedRun a = run_seed(inst, w, sched, true, 300000, seed);
        if (a.diverged)
            ++div_with;
        else
            with.push_back(test_fidelity(inst, a.fr.params, w));
        const SeedRun b = run_seed(inst, w, sched, false, 300000, seed);
        if (b.diverged)
            ++div_without;
        else
            without.push_back(test_fidelity(inst, b.fr.params, w));
    }
    const double mw = mean_of(with), mo = mean_of(without);
    const double hw = ci95_halfwidth(with), ho = ci95_halfwidth(without);
    const bool ok = !with.empty() && !without.empty() && mw < mo && hw <= ho;
    report(ok, 6,
           "time-propagated updates beat plain descent: mean test loss " + fmt("%.3e", mw) +
               " (" + std::to_string(with.size()) + "/10 completed) < " + fmt("%.3e", mo) + " (" +
               std::to_string(without.size()) + "/10), CI half-width " + fmt("%.1e", hw) +
               " <= " + fmt("%.1e", ho));
}

void criterion_7(const Instance& inst) {
    const MomentumSchedule sched{2e-9, 0.0, 0.0};
    const double ms[3] = {0.0, 1e5, 1e8};
    double dnorm[3], loss[3];
    int completed[3];
    for (int k = 0; k < 3; ++k) {
        const LossWeights w = normalized_weights(inst.parts.train, 1e4, ms[k], 3e6);
        std::vector<double> dn, tl;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const SeedRun r = run_seed(inst, w, sched, false, 100000, seed);
            if (r.diverged) continue;
            dn.push_back(param_derivative_norm(r.fr.params, inst.g));
            tl.push_back(test_fidelity(inst, r.fr.params, w));
        }
        dnorm[k] = mean_of(dn);
        loss[k] = mean_of(tl);
        completed[k] = static_cast<int>(dn.size());
    }
    const double ch1 = (loss[1] - loss[0]) / loss[0];
    const double ch2 = (loss[2] - loss[0]) / loss[0];
    const bool ok = dnorm[0] > dnorm[1] && dnorm[1] > dnorm[2] && std::abs(ch1) < 0.5 &&
                    std::abs(ch2) < 0.5;
    report(ok, 7,
           "derivative penalty smooths the fitted rates: mean derivative norm " +
               fmt("%.2e", dnorm[0]) + " > " + fmt("%.2e", dnorm[1]) + " > " +
               fmt("%.2e", dnorm[2]) + " across m in {0, 1e5, 1e8} (" +
               std::to_string(completed[0]) + "/" + std::to_string(completed[1]) + "/" +
               std::to_string(completed[2]) + " of 10 completed); test loss changes " +
               fmt("%+.1f", 100.0 * ch1) + "%, " + fmt("%+.1f", 100.0 * ch2) + "% (|x| < 50%)");
}

void criterion_8() {
    const MomentumSchedule s{1e-4, 0.0, 0.1};
    bool ok = effective_learning_rate(s, 0.0) == 2.0 * s.pi0;
    double prev = -1.0;
    for (int k = 0; k < 1000; ++k) {
        const double t = 188.0 * static_cast<double>(k) / 999.0;
        const double v = effective_learning_rate(s, t);
        if (!(v > prev)) ok = false;
        prev = v;
    }
    report(ok, 8,
           "effective learning rate pi/(1-omega) equals 2*pi0 at t=0 exactly and is strictly "
           "increasing on a 1000-point grid over [0, 188]");
}

void criterion_9() {
    // Hand-unrolled three-day example with a one-day lag.
    FrenchRawSeries toy;
    toy.cumulative_cases = {10.0, 12.0, 15.0};
    toy.icu = {2.0, 2.0, 2.0};
    toy.hospitalized = {3.0, 3.0, 3.0};
    toy.hospital_recovered = {0.0, 4.0, 9.0};
    toy.deaths = {0.0, 1.0, 1.0};
    toy.date0 = "2020-03-18";
    toy.population = 100.0;
    const ObservedSeries d1 = derive_french(toy, 1).obs;
    const auto eq3 = [&](Series s, double a, double b, double c) {
        const auto& v = d1.of(s);
        return v.size() == 3 && v[0] == a && v[1] == b && v[2] == c;
    };
    bool ok = eq3(Series::D, 5.0, 2.0, 8.0) && eq3(Series::H, 0.0, 9.0, 11.0) &&
              eq3(Series::T, 2.0, 2.0, 2.0) && eq3(Series::R, 3.0, 3.0, 3.0) &&
              eq3(Series::E, 0.0, 1.0, 1.0);

    // Causality of the 14-day recursion: pushing any input at day t must not
    // move any output before day t.
    FrenchRawSeries raw;
    raw.date0 = "2020-03-18";
    raw.population = 1e6;
    std::mt19937_64 gen(77);
    std::uniform_int_distribution<int> step(0, 9);
    double cases = 50.0, rec = 0.0, dead = 0.0;
    for (int t = 0; t < 40; ++t) {
        cases += step(gen);
        rec += step(gen) % 7;
        dead += step(gen) % 4;
        raw.cumulative_cases.push_back(cases);
        raw.icu.push_back(static_cast<double>(step(gen)));
        raw.hospitalized.push_back(static_cast<double>(step(gen) * 3));
        raw.hospital_recovered.push_back(rec);
        raw.deaths.push_back(dead);
    }
    const ObservedSeries base = derive_french(raw, 14).obs;
    for (int t : {17, 26, 35}) {
        for (int field = 0; field < 5; ++field) {
            FrenchRawSeries bumped = raw;
            auto& col = field == 0   ? bumped.cumulative_cases
                        : field == 1 ? bumped.icu
                        : field == 2 ? bumped.hospitalized
                        : field == 3 ? bumped.hospital_recovered
                                     : bumped.deaths;
            *col[t] += 7.0;
            const ObservedSeries changed = derive_french(bumped, 14).obs;
            for (std::size_t si = 0; si < kNumSeries; ++si)
                for (int k = 0; k < t; ++k)
                    if (changed.of(static_cast<Series>(si))[k] !=
                        base.of(static_cast<Series>(si))[k])
                        ok = false;
        }
    }
    report(ok, 9,
           "three-day derivation toy gives home=(5,2,8), healed=(0,9,11) exactly, and the "
           "14-day-lag recursion is causal under input perturbations");
}

void criterion_10() {
    const char* path = std::getenv("SIDARTHE_ITALY_CSV");
    if (!path) {
        report_skip(10,
                    "real-data smoke run; set SIDARTHE_ITALY_CSV to the official national daily "
                    "CSV (and optionally SIDARTHE_ITALY_POP, default 6.0e7) to run it");
        return;
    }
    try {
        const char* pop_env = std::getenv("SIDARTHE_ITALY_POP");
        const double pop = pop_env ? std::atof(pop_env) : 6.0e7;
        const ObservedSeries full = load_series_csv(path, ColumnMap{}, pop);
        const SplitSpec spec{188, 7, 7};
        if (full.days() < spec.total()) {
            report(false, 10,
                   "data file has only " + std::to_string(full.days()) +
                       " days; need >= " + std::to_string(spec.total()));
            return;
        }
        ObservedSeries prefix = ObservedSeries::empty(spec.total(), full.population);
        prefix.start_day = full.start_day;
        prefix.date0 = full.date0;
        for (std::size_t si = 0; si < kNumSeries; ++si)
            for (std::size_t i = 0; i < spec.total(); ++i)
                prefix.series[si][i] = full.series[si][i];
        const SplitSeries parts = split_series(prefix, spec);
        const InitialCondition ic = build_initial_condition(parts.train);
        const TimeGrid g = TimeGrid::daily(188);

        FitConfig cfg;
        cfg.schedule = MomentumSchedule{2e-5, 0.0, 0.1};
        cfg.weights = normalized_weights(parts.train, 1.0, 10.0, 300.0);
        cfg.max_epochs = 300000;
        const FitResult fr =
            fit(random_constant_init(g, cfg.tying, 0), g, ic, parts.train, cfg,
                &parts.validation);
        if (fr.diverged) {
            report(false, 10, "fit diverged at substep " + std::to_string(fr.divergence_step));
            return;
        }
        const Trajectory traj = forecast(fr.params, g, ic, 14);
        const ForecastReport rep = evaluate_forecast(traj, parts.test, 0.30);
        const auto& h = rep.of(Series::H);
        const auto& e = rep.of(Series::E);
        const bool ok = h.mape_percent && e.mape_percent && *h.mape_percent <= 8.0 &&
                        *e.mape_percent <= 12.0;
        report(ok, 10,
               "188-day fit, 7-day-ahead test: healed MAPE " +
                   (h.mape_percent ? fmt("%.2f", *h.mape_percent) : std::string("n/a")) +
                   "% (limit 8%), deaths MAPE " +
                   (e.mape_percent ? fmt("%.2f", *e.mape_percent) : std::string("n/a")) +
                   "% (limit 12%)");
    } catch (const std::exception& ex) {
        report(false, 10, std::string("real-data run failed: ") + ex.what());
    }
}

} // namespace

int main() {
    std::printf("acceptance gate: %s %s\n", kLibraryName, kVersion);
    try {
        criterion_1();
        criterion_2();
        criterion_3();
        criterion_4();
        const Instance inst = make_instance();
        criterion_5(inst);
        criterion_6(inst);
        criterion_7(inst);
        criterion_8();
        criterion_9();
        criterion_10();
    } catch (const std::exception& ex) {
        std::printf("[FAIL] acceptance gate aborted: %s\n", ex.what());
        return 2;
    }
    std::printf("%s\n", failures == 0 ? "all criteria passed or skipped"
                                      : "one or more criteria FAILED");
    return failures == 0 ? 0 : 1;
}
