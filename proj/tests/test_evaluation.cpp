#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sidarthe/metrics.hpp"
#include "sidarthe/sweep.hpp"

using namespace sidarthe;

namespace {

using OptVec = std::vector<std::optional<double>>;

InitialCondition small_ic() {
    InitialCondition ic;
    ic.population = 1.0;
    ic.z0[Comp::I] = 2e-3;
    ic.z0[Comp::D] = 4e-4;
    ic.z0[Comp::A] = 1e-4;
    ic.z0[Comp::R] = 1e-4;
    ic.z0[Comp::T] = 5e-5;
    ic.z0[Comp::S] = 1.0 - 2.65e-3;
    ic.h_d0 = 1e-5;
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

// 18 days of synthetic truth, to be carved 12 / 3 / 3.
SweepData toy_sweep_data() {
    SweepData data;
    const InitialCondition ic = small_ic();
    const TimeGrid g = TimeGrid::daily(18);
    const Trajectory ref = integrate_heun(ic, ParamTrajectory::constant(g, mild_rates()));
    data.full = observations_from_trajectory(ref, ic.population);
    data.split = SplitSpec{12, 3, 3};
    return data;
}

bool same_record(const RunRecord& x, const RunRecord& y) {
    return x.config_hash == y.config_hash && x.seed == y.seed && x.diverged == y.diverged &&
           x.cell.key() == y.cell.key() && x.train_total == y.train_total &&
           x.val_fidelity == y.val_fidelity && x.test_fidelity == y.test_fidelity &&
           x.test_total == y.test_total && x.deriv_norm == y.deriv_norm &&
           x.test_mape == y.test_mape && x.epochs_run == y.epochs_run &&
           x.best_epoch == y.best_epoch;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("mape: exact values and skip accounting", "[evaluation]") {
    const MapeResult r = mape_detail({110.0, 90.0}, OptVec{100.0, 100.0});
    REQUIRE(r.percent == 10.0);
    REQUIRE(r.evaluated == 2);
    REQUIRE(r.skipped == 0);

    REQUIRE(mape({5.0, 7.0}, OptVec{5.0, 7.0}) == 0.0);

    // Missing and zero observations are skipped, not scored.
    const MapeResult s = mape_detail({110.0, 1.0, 2.0, 90.0},
                                     OptVec{100.0, std::nullopt, 0.0, 100.0});
    REQUIRE(s.percent == 10.0);
    REQUIRE(s.evaluated == 2);
    REQUIRE(s.skipped == 2);

    REQUIRE_THROWS_AS(mape_detail({1.0}, OptVec{std::nullopt}), domain_error);
    REQUIRE_THROWS_AS(mape_detail({1.0, 2.0}, OptVec{0.0, 0.0}), domain_error);
    REQUIRE_THROWS_AS(mape_detail({1.0, 2.0}, OptVec{1.0}), shape_error);
}

TEST_CASE("mape is scale invariant", "[evaluation]") {
    const std::vector<double> pred = {12.0, 34.0, 51.0};
    OptVec obs = {10.0, 40.0, 50.0};
    const double base = mape(pred, obs);

    std::vector<double> pred2 = pred;
    OptVec obs2 = obs;
    const double k = 1048576.0; // power of two: scaling is exact
    for (auto& p : pred2) p *= k;
    for (auto& o : obs2) *o *= k;
    REQUIRE(mape(pred2, obs2) == base);
}

TEST_CASE("within_threshold: counting, monotonicity, errors", "[evaluation]") {
    const std::vector<double> pred = {100.0, 110.0, 125.0, 150.0};
    const OptVec obs = {100.0, 100.0, 100.0, 100.0}; // rel errors 0, .1, .25, .5

    const ThresholdCount c = within_threshold(pred, obs, 0.30);
    REQUIRE(c.num == 3);
    REQUIRE(c.den == 4);
    REQUIRE(c.fraction() == 0.75);

    REQUIRE(within_threshold(pred, obs, 0.05).num <= c.num);
    REQUIRE(within_threshold(pred, obs, 1.0).num == 4);

    // Missing/zero observations shrink the denominator.
    const ThresholdCount d = within_threshold({1.0, 2.0, 3.0}, OptVec{std::nullopt, 0.0, 3.0});
    REQUIRE(d.num == 1);
    REQUIRE(d.den == 1);

    REQUIRE_THROWS_AS(within_threshold(pred, obs, -0.1), domain_error);
    REQUIRE_THROWS_AS(within_threshold({1.0}, OptVec{0.0}), domain_error);
    REQUIRE_THROWS_AS(within_threshold({1.0}, OptVec{1.0, 2.0}), shape_error);
}

TEST_CASE("evaluate_forecast aligns on absolute days", "[evaluation]") {
    const InitialCondition ic = small_ic();
    const TimeGrid g = TimeGrid::daily(10);
    const Trajectory traj = integrate_heun(ic, ParamTrajectory::constant(g, mild_rates()));
    const ObservedSeries truth = observations_from_trajectory(traj, ic.population);

    ObservedSeries obs = ObservedSeries::empty(3, 1.0);
    obs.start_day = 2; // covers days 2..4 of the 0..9 trajectory
    obs.of(Series::D) = {std::nullopt, truth.of(Series::D)[3], truth.of(Series::D)[4]};
    obs.of(Series::R) = {truth.of(Series::R)[2], truth.of(Series::R)[3], truth.of(Series::R)[4]};
    obs.of(Series::T) = {truth.of(Series::T)[2], truth.of(Series::T)[3], truth.of(Series::T)[4]};
    obs.of(Series::H) = {0.0, truth.of(Series::H)[3], truth.of(Series::H)[4]};
    obs.of(Series::E) = {0.0, 0.0, 0.0};

    const ForecastReport rep = evaluate_forecast(traj, obs, 0.30);

    // Missing days never reach the scorer.
    REQUIRE(rep.of(Series::D).mape_percent == 0.0);
    REQUIRE(rep.of(Series::D).within.den == 2);
    REQUIRE(rep.of(Series::D).skipped == 0);

    // Fully present series score every day; the prediction is exact here.
    REQUIRE(rep.of(Series::R).mape_percent == 0.0);
    REQUIRE(rep.of(Series::R).within.num == 3);
    REQUIRE(rep.of(Series::R).within.den == 3);

    // A zero observation inside an otherwise scored series is skipped.
    REQUIRE(rep.of(Series::H).mape_percent == 0.0);
    REQUIRE(rep.of(Series::H).within.den == 2);
    REQUIRE(rep.of(Series::H).skipped == 1);

    // An all-zero series yields an empty score, not an error.
    REQUIRE(!rep.of(Series::E).mape_percent.has_value());
    REQUIRE(rep.of(Series::E).skipped == 3);
    REQUIRE(rep.of(Series::E).within.den == 0);

    const TimeGrid half{0.0, 2.0, 4, 1};
    const Trajectory t2 = integrate_heun(ic, ParamTrajectory::constant(half, mild_rates()));
    REQUIRE_THROWS_AS(evaluate_forecast(t2, obs, 0.30), shape_error);
}

TEST_CASE("run_cell reproduces one direct fit exactly", "[evaluation]") {
    const SweepData data = toy_sweep_data();
    SweepBase base;
    base.pi0 = 1e-4;
    base.e_p = 10.0;
    base.max_epochs = 200;

    GridCell cell;
    cell.a = 0.0;
    cell.b = 0.1;
    cell.m = 0.1;
    cell.e = 1.0;
    cell.train_days = 12;
    const std::uint64_t seed = 4;

    const RunRecord rec = run_cell(cell, seed, data, base);
    REQUIRE(!rec.diverged);

    // The documented procedure, step by step.
    const SplitSeries parts = split_series(data.full, data.split);
    const TimeGrid grid{0.0, 11.0, 11, 1};
    const InitialCondition ic = build_initial_condition(parts.train);
    FitConfig cfg;
    cfg.schedule = {base.pi0, cell.a, cell.b};
    cfg.weights = LossWeights::uniform_fidelity(cell.e, cell.m, base.e_p);
    cfg.max_epochs = base.max_epochs;
    const FlatParams init = random_constant_init(grid, base.tying, seed);
    const FitResult fr = fit(init, grid, ic, parts.train, cfg, &parts.validation);

    REQUIRE(rec.train_total == fr.history[fr.best_epoch].train.total);
    REQUIRE(rec.val_fidelity == fr.history[fr.best_epoch].selection_loss);
    REQUIRE(rec.deriv_norm == param_derivative_norm(fr.params, grid));
    REQUIRE(rec.epochs_run == fr.epochs_run);
    REQUIRE(rec.best_epoch == fr.best_epoch);

    // Test scoring: forecast to the end of the test window, fidelity plus
    // the penalties of the fitted parameters.
    const std::size_t extra = std::size_t(parts.test.start_day) + parts.test.days() - 12;
    const Trajectory traj = forecast(fr.params, grid, ic, extra);
    REQUIRE(rec.test_fidelity == data_fidelity(traj, parts.test, cfg.weights));
    REQUIRE(rec.test_total == *rec.test_fidelity +
                                  derivative_penalty(fr.params, cfg.weights.m, grid) +
                                  positivity_penalty(fr.params, cfg.weights.e_p, grid).surrogate);
    const ForecastReport rep = evaluate_forecast(traj, parts.test, base.threshold);
    for (std::size_t s = 0; s < kNumSeries; ++s)
        REQUIRE(rec.test_mape[s] == rep.per_series[s].mape_percent);
}

TEST_CASE("grid planning: cross product, seeds, baseline arm", "[evaluation]") {
    GridSpec spec;
    spec.a_values = {0.0, 0.1, 0.2, 0.3, 0.4};
    spec.b_values = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    spec.seeds_per_cell = 20;
    spec.include_momentum_off_baseline = true;

    const auto cells = spec.cells(44);
    REQUIRE(cells.size() == 31); // 5 x 6 + the plain-descent arm
    REQUIRE(spec.planned_runs(44) == 620);

    const GridCell& last = cells.back();
    REQUIRE(!last.momentum);
    REQUIRE(last.b == 0.0);
    REQUIRE(last.a == 0.0);
    REQUIRE(last.train_days == 44);
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) REQUIRE(cells[i].momentum);

    // The train-days axis falls back to the split's window.
    spec.train_days_values = {30, 44};
    spec.include_momentum_off_baseline = false;
    REQUIRE(spec.cells(44).size() == 60);
    REQUIRE(spec.cells(44).front().train_days == 30);

    GridSpec bad;
    bad.a_values = {};
    REQUIRE(!bad.valid());
}

TEST_CASE("grid_search: toy sweep, canonical log, resume idempotence", "[evaluation]") {
    const SweepData data = toy_sweep_data();
    SweepBase base;
    base.pi0 = 1e-4;
    base.max_epochs = 50;
    base.workers = 2;
    base.log_path = "tmp_run_log.ndjson";
    std::remove(base.log_path.c_str());

    GridSpec spec;
    spec.a_values = {0.0};
    spec.b_values = {0.1};
    spec.m_values = {0.0, 0.1};
    spec.seeds_per_cell = 2;
    spec.include_momentum_off_baseline = true;

    const SweepResult res = grid_search(spec, base, data);
    REQUIRE(res.planned == 6); // (2 + baseline) cells x 2 seeds
    REQUIRE(res.executed == 6);
    REQUIRE(res.resumed == 0);
    REQUIRE(res.runs.size() == 6);
    for (const auto& r : res.runs) REQUIRE(!r.diverged);

    // Canonical order: (config hash, seed) ascending.
    for (std::size_t i = 1; i < res.runs.size(); ++i) {
        const auto prev = std::make_tuple(res.runs[i - 1].config_hash, res.runs[i - 1].seed);
        const auto cur = std::make_tuple(res.runs[i].config_hash, res.runs[i].seed);
        REQUIRE(prev < cur);
    }

    // Summaries are the arithmetic means of the per-seed records.
    REQUIRE(res.ranking.size() == 3);
    for (const auto& cs : res.ranking) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : res.runs)
            if (r.config_hash == cs.config_hash && r.val_fidelity) {
                sum += *r.val_fidelity;
                ++n;
            }
        REQUIRE(cs.n == n);
        REQUIRE(cs.mean_val_fidelity == sum / double(n));
    }
    for (std::size_t i = 1; i < res.ranking.size(); ++i)
        REQUIRE(res.ranking[i - 1].mean_val_fidelity <= res.ranking[i].mean_val_fidelity);

    const std::string canonical = slurp(base.log_path);
    REQUIRE(std::count(canonical.begin(), canonical.end(), '\n') == 6);

    // Resume: nothing re-executed, identical records, byte-identical log.
    const SweepResult again = grid_search(spec, base, data);
    REQUIRE(again.executed == 0);
    REQUIRE(again.resumed == 6);
    REQUIRE(again.runs.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) REQUIRE(same_record(again.runs[i], res.runs[i]));
    REQUIRE(slurp(base.log_path) == canonical);

    // Drop one line: exactly that run is redone, the rest resume.
    {
        std::istringstream in(canonical);
        std::ofstream out(base.log_path, std::ios::binary | std::ios::trunc);
        std::string line;
        std::size_t k = 0;
        while (std::getline(in, line))
            if (k++ != 3) out << line << '\n';
    }
    const SweepResult partial = grid_search(spec, base, data);
    REQUIRE(partial.executed == 1);
    REQUIRE(partial.resumed == 5);
    REQUIRE(slurp(base.log_path) == canonical);

    std::remove(base.log_path.c_str());
}

TEST_CASE("summarize: exclusion, confidence intervals, tie-breaks", "[evaluation]") {
    std::vector<RunRecord> runs;
    const auto push = [&](std::uint64_t hash, double a, std::uint64_t seed, bool diverged,
                          std::optional<double> val, std::optional<double> tfid) {
        RunRecord r;
        r.config_hash = hash;
        r.cell.a = a;
        r.seed = seed;
        r.diverged = diverged;
        r.val_fidelity = val;
        r.test_fidelity = tfid;
        runs.push_back(r);
    };
    // Cell 1: three clean seeds.
    push(1, 0.0, 0, false, 1.0, 2.0);
    push(1, 0.0, 1, false, 2.0, 4.0);
    push(1, 0.0, 2, false, 3.0, 6.0);
    // Cell 2: one diverged (no metrics), one clean and better.
    push(2, 0.1, 0, true, std::nullopt, std::nullopt);
    push(2, 0.1, 1, false, 0.5, 1.0);
    // Cell 3: fully diverged.
    push(3, 0.2, 0, true, std::nullopt, std::nullopt);
    // Cells 4 and 5: equal means, distinguished only by the a axis.
    push(4, 0.9, 0, false, 7.0, 1.0);
    push(5, 0.3, 0, false, 7.0, 1.0);

    const auto ranking = summarize(runs);
    REQUIRE(ranking.size() == 5);

    // Diverged runs are excluded from the means, not averaged as zeros.
    REQUIRE(ranking[0].config_hash == 2);
    REQUIRE(ranking[0].n == 1);
    REQUIRE(ranking[0].n_diverged == 1);
    REQUIRE(ranking[0].mean_val_fidelity == 0.5);
    REQUIRE(ranking[0].ci95_test_fidelity == 0.0); // n = 1: no interval

    REQUIRE(ranking[1].config_hash == 1);
    REQUIRE(ranking[1].mean_val_fidelity == 2.0);
    REQUIRE(ranking[1].mean_test_fidelity == 4.0);
    // {2, 4, 6}: sd = 2 exactly, so the half-width is 1.96 * 2 / sqrt(3).
    REQUIRE(ranking[1].ci95_test_fidelity == 1.96 * 2.0 / std::sqrt(3.0));

    // Equal means fall back to the cell axes (a = 0.3 before a = 0.9).
    REQUIRE(ranking[2].config_hash == 5);
    REQUIRE(ranking[3].config_hash == 4);

    // An all-diverged cell ranks last with an infinite mean.
    REQUIRE(ranking[4].config_hash == 3);
    REQUIRE(ranking[4].n == 0);
    REQUIRE(std::isinf(ranking[4].mean_val_fidelity));

    // The ranking is a function of the records, not of their order.
    std::vector<RunRecord> rotated(runs.begin() + 3, runs.end());
    rotated.insert(rotated.end(), runs.begin(), runs.begin() + 3);
    const auto r2 = summarize(rotated);
    REQUIRE(r2.size() == ranking.size());
    for (std::size_t i = 0; i < ranking.size(); ++i)
        REQUIRE(r2[i].config_hash == ranking[i].config_hash);

    // Identical values give a zero-width interval.
    std::vector<RunRecord> flat;
    push(6, 0.0, 0, false, 1.0, 5.0);
    push(6, 0.0, 1, false, 1.0, 5.0);
    flat.assign(runs.end() - 2, runs.end());
    REQUIRE(summarize(flat)[0].ci95_test_fidelity == 0.0);
}

TEST_CASE("run log round trip", "[evaluation]") {
    const std::string path = "tmp_log_roundtrip.ndjson";

    RunRecord full;
    full.config_hash = 0xdeadbeefull;
    full.cell = GridCell{0.1, 0.2, 10.0, 1.0, 44, true};
    full.seed = 7;
    full.train_total = 0.25;
    full.val_fidelity = 0.5;
    full.test_fidelity = 0.75;
    full.test_total = 0.8;
    full.deriv_norm = 1e-6;
    full.test_mape = {1.0, std::nullopt, 3.0, 4.0, 5.0};
    full.epochs_run = 100;
    full.best_epoch = 90;

    RunRecord bare; // diverged before producing anything
    bare.config_hash = 0x1234ull;
    bare.cell = GridCell{0.0, 0.0, 0.0, 1.0, 30, false};
    bare.seed = 0;
    bare.diverged = true;

    write_run_log(path, {full, bare});
    const auto back = load_run_log(path);
    REQUIRE(back.size() == 2);
    REQUIRE(same_record(back[0], bare)); // sorted by hash: 0x1234 first
    REQUIRE(same_record(back[1], full));

    REQUIRE(load_run_log("no_such_log.ndjson").empty());

    std::ofstream(path, std::ios::binary | std::ios::trunc)
        << detail::record_to_json(full).dump() << "\nnot json\n";
    try {
        load_run_log(path);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        REQUIRE(e.row == 2);
    }
    std::remove(path.c_str());
}

TEST_CASE("ablation wrappers pair arms by seed", "[evaluation]") {
    const SweepData data = toy_sweep_data();
    SweepBase base;
    base.pi0 = 1e-4;
    base.max_epochs = 30;

    const SweepResult mom = ablation_momentum(data, base, {0.0}, {0.2}, 2, 7);
    REQUIRE(mom.planned == 4); // momentum arm + plain-descent arm, 2 seeds each
    REQUIRE(mom.runs.size() == 4);
    std::vector<std::uint64_t> on_seeds, off_seeds;
    for (const auto& r : mom.runs) {
        if (r.cell.momentum) {
            REQUIRE(r.cell.b == 0.2);
            on_seeds.push_back(r.seed);
        } else {
            REQUIRE(r.cell.b == 0.0);
            off_seeds.push_back(r.seed);
        }
    }
    std::sort(on_seeds.begin(), on_seeds.end());
    std::sort(off_seeds.begin(), off_seeds.end());
    REQUIRE(on_seeds == std::vector<std::uint64_t>{7, 8});
    REQUIRE(off_seeds == on_seeds); // same seeds: arms are paired

    const SweepResult reg = ablation_regularization(data, base, {0.0, 0.1}, 2, 0, true);
    REQUIRE(reg.planned == 4);
    std::vector<double> ms;
    for (const auto& r : reg.runs) {
        REQUIRE(r.cell.momentum);
        ms.push_back(r.cell.m);
    }
    std::sort(ms.begin(), ms.end());
    REQUIRE(ms == std::vector<double>{0.0, 0.0, 0.1, 0.1});
}

TEST_CASE("summary table: one row per cell, reparsable numbers", "[evaluation]") {
    CellSummary s;
    s.cell = GridCell{0.1, 0.2, 1e8, 1.0, 44, true};
    s.n = 9;
    s.n_diverged = 1;
    s.mean_val_fidelity = 0.012345678901234567;
    s.mean_test_fidelity = 3.5;
    s.ci95_test_fidelity = 0.25;
    s.mean_test_total = 4.0;
    s.ci95_test_total = 0.5;
    s.mean_deriv_norm = 1e-9;

    std::ostringstream out;
    write_summary_table(out, {s});
    const CsvTable t = parse_csv(out.str());
    REQUIRE(t.header.size() == 14);
    REQUIRE(t.rows.size() == 1);
    REQUIRE(t.rows[0][t.column("momentum")] == "1");
    REQUIRE(t.rows[0][t.column("n")] == "9");
    REQUIRE(t.rows[0][t.column("n_diverged")] == "1");
    // %.17g survives a parse round trip bit for bit.
    REQUIRE(parse_cell(t.rows[0][t.column("mean_val_fidelity")], 2) == s.mean_val_fidelity);
    REQUIRE(parse_cell(t.rows[0][t.column("m")], 2) == 1e8);
}
