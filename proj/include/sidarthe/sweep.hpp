#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "sidarthe/data.hpp"
#include "sidarthe/fit.hpp"
#include "sidarthe/metrics.hpp"
#include "sidarthe/pool.hpp"
#include "sidarthe/synthetic.hpp"

namespace sidarthe {

/// One hyperparameter combination of a sweep.
struct GridCell {
    double a = 0.0;        // step-size decay
    double b = 0.0;        // momentum steepness
    double m = 0.0;        // derivative-penalty weight
    double e = 1.0;        // uniform fidelity weight
    std::size_t train_days = 0;
    bool momentum = true;  // false = the plain-descent baseline arm

    auto key() const { return std::make_tuple(train_days, e, m, a, b, momentum); }
};

/// Named hyperparameter axes. The planned runs are the cross product of the
/// axes times seeds_per_cell, plus one extra momentum-off cell (same seed
/// list, first value of each axis, b recorded as 0) when the baseline arm
/// is enabled. Every cell reuses the same seed list seed0..seed0+k-1, so
/// arms are paired by seed.
struct GridSpec {
    std::vector<double> a_values = {0.0};
    std::vector<double> b_values = {0.0};
    std::vector<double> m_values = {0.0};
    std::vector<double> e_values = {1.0};
    std::vector<std::size_t> train_days_values = {}; // empty = use the split's train length
    std::size_t seeds_per_cell = 1;
    std::uint64_t seed0 = 0;
    bool use_momentum = true;
    bool include_momentum_off_baseline = false;

    bool valid() const {
        return !a_values.empty() && !b_values.empty() && !m_values.empty() &&
               !e_values.empty() && seeds_per_cell >= 1;
    }

    std::vector<GridCell> cells(std::size_t default_train_days) const {
        std::vector<std::size_t> t_axis = train_days_values;
        if (t_axis.empty()) t_axis.push_back(default_train_days);
        std::vector<GridCell> out;
        for (std::size_t t : t_axis)
            for (double e : e_values)
                for (double m : m_values)
                    for (double a : a_values)
                        for (double b : b_values)
                            out.push_back({a, b, m, e, t, use_momentum});
        if (include_momentum_off_baseline)
            out.push_back({a_values.front(), 0.0, m_values.front(), e_values.front(),
                           t_axis.front(), false});
        return out;
    }

    std::size_t planned_runs(std::size_t default_train_days) const {
        return cells(default_train_days).size() * seeds_per_cell;
    }
};

/// The dataset a sweep runs on: the full daily series plus how to carve it.
struct SweepData {
    ObservedSeries full;
    SplitSpec split;
    std::size_t substeps = 1;
};

/// Sweep-wide settings the axes do not touch.
struct SweepBase {
    double pi0 = 1e-4;
    double e_p = 0.0;             // positivity weight
    TyingMap tying = TyingMap::standard();
    std::size_t max_epochs = 1000;
    std::size_t patience = 0;
    double threshold = 0.30;
    std::size_t workers = 0;      // 0 = default_workers()
    std::string log_path;         // empty = keep the run log in memory only
};

struct RunRecord {
    std::uint64_t config_hash = 0;
    GridCell cell;
    std::uint64_t seed = 0;
    bool diverged = false;
    // Metrics are absent when the run diverged before producing a usable iterate.
    std::optional<double> train_total;
    std::optional<double> val_fidelity;   // selection loss actually used
    std::optional<double> test_fidelity;
    std::optional<double> test_total;     // test fidelity + penalties of the fitted params
    std::optional<double> deriv_norm;     // sum of squared inter-node differences
    std::array<std::optional<double>, kNumSeries> test_mape;
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
};

struct CellSummary {
    GridCell cell;
    std::uint64_t config_hash = 0;
    std::size_t n = 0;          // runs that produced metrics
    std::size_t n_diverged = 0;
    double mean_val_fidelity = 0.0;
    double mean_test_fidelity = 0.0;
    double ci95_test_fidelity = 0.0; // 1.96 * stderr over seeds; 0 for n <= 1
    double mean_test_total = 0.0;
    double ci95_test_total = 0.0;
    double mean_deriv_norm = 0.0;
};

struct SweepResult {
    std::vector<RunRecord> runs;       // canonical order: (config_hash, seed)
    std::vector<CellSummary> ranking;  // ascending mean validation fidelity
    std::size_t planned = 0;
    std::size_t executed = 0;          // runs actually fit (not resumed from the log)
    std::size_t resumed = 0;
};

namespace detail {

inline std::string canonical_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// FNV-1a over the canonical cell + base description; identifies a cell's
/// configuration across interrupted and resumed executions.
inline std::uint64_t config_hash(const GridCell& c, const SweepBase& base,
                                 std::size_t max_epochs_override = 0) {
    std::string s;
    s += "a=" + canonical_double(c.a);
    s += ";b=" + canonical_double(c.b);
    s += ";m=" + canonical_double(c.m);
    s += ";e=" + canonical_double(c.e);
    s += ";T=" + std::to_string(c.train_days);
    s += ";mom=" + std::string(c.momentum ? "1" : "0");
    s += ";pi0=" + canonical_double(base.pi0);
    s += ";ep=" + canonical_double(base.e_p);
    s += ";epochs=" + std::to_string(max_epochs_override ? max_epochs_override : base.max_epochs);
    s += ";patience=" + std::to_string(base.patience);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline nlohmann::ordered_json record_to_json(const RunRecord& r) {
    nlohmann::ordered_json j;
    j["h"] = hash_hex(r.config_hash);
    j["a"] = r.cell.a;
    j["b"] = r.cell.b;
    j["m"] = r.cell.m;
    j["e"] = r.cell.e;
    j["T"] = r.cell.train_days;
    j["mom"] = r.cell.momentum;
    j["seed"] = r.seed;
    j["status"] = r.diverged ? "diverged" : "ok";
    const auto put = [&](const char* k, const std::optional<double>& v) {
        if (v) j[k] = *v;
    };
    put("train", r.train_total);
    put("val", r.val_fidelity);
    put("test_fid", r.test_fidelity);
    put("test_total", r.test_total);
    put("dnorm", r.deriv_norm);
    j["epochs"] = r.epochs_run;
    j["best"] = r.best_epoch;
    nlohmann::ordered_json mp = nlohmann::ordered_json::array();
    bool any_mape = false;
    for (const auto& v : r.test_mape) {
        if (v) {
            mp.push_back(*v);
            any_mape = true;
        } else {
            mp.push_back(nullptr);
        }
    }
    if (any_mape) j["mape"] = std::move(mp);
    return j;
}

inline RunRecord record_from_json(const nlohmann::json& j) {
    RunRecord r;
    r.config_hash = std::stoull(j.at("h").get<std::string>(), nullptr, 16);
    r.cell.a = j.at("a").get<double>();
    r.cell.b = j.at("b").get<double>();
    r.cell.m = j.at("m").get<double>();
    r.cell.e = j.at("e").get<double>();
    r.cell.train_days = j.at("T").get<std::size_t>();
    r.cell.momentum = j.at("mom").get<bool>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.diverged = j.at("status").get<std::string>() == "diverged";
    const auto get = [&](const char* k) -> std::optional<double> {
        if (j.contains(k)) return j[k].get<double>();
        return std::nullopt;
    };
    r.train_total = get("train");
    r.val_fidelity = get("val");
    r.test_fidelity = get("test_fid");
    r.test_total = get("test_total");
    r.deriv_norm = get("dnorm");
    r.epochs_run = j.value("epochs", std::size_t{0});
    r.best_epoch = j.value("best", std::size_t{0});
    if (j.contains("mape"))
        for (std::size_t i = 0; i < kNumSeries && i < j["mape"].size(); ++i)
            if (!j["mape"][i].is_null()) r.test_mape[i] = j["mape"][i].get<double>();
    return r;
}

/// Cut the leading train/validation/test windows out of the full series.
inline SplitSeries carve(const ObservedSeries& full, std::size_t train_days,
                         const SplitSpec& split) {
    const SplitSpec s{train_days, split.validation, split.test};
    if (s.total() > full.days())
        throw range_error("sweep: train+validation+test exceeds the series length");
    // Trim to exactly the used prefix, then split.
    ObservedSeries prefix = ObservedSeries::empty(s.total(), full.population);
    prefix.start_day = full.start_day;
    prefix.date0 = full.date0;
    for (std::size_t si = 0; si < kNumSeries; ++si)
        for (std::size_t i = 0; i < s.total(); ++i)
            prefix.series[si][i] = full.series[si][i];
    return split_series(prefix, s);
}

} // namespace detail

/// Fit one cell with one seed and score it. Never throws for divergence;
/// the record carries what could be computed.
inline RunRecord run_cell(const GridCell& cell, std::uint64_t seed, const SweepData& data,
                          const SweepBase& base) {
    RunRecord rec;
    rec.cell = cell;
    rec.seed = seed;
    rec.config_hash = detail::config_hash(cell, base);

    const SplitSeries parts = detail::carve(data.full, cell.train_days, data.split);
    const std::size_t days = parts.train.days();
    if (days < 2) throw range_error("sweep: train window needs at least 2 days");
    const TimeGrid grid{static_cast<double>(parts.train.start_day),
                        static_cast<double>(days - 1), days - 1, data.substeps};
    const InitialCondition ic = build_initial_condition(parts.train);

    FitConfig cfg;
    cfg.schedule = {base.pi0, cell.a, cell.b};
    cfg.weights = LossWeights::uniform_fidelity(cell.e, cell.m, base.e_p);
    cfg.tying = base.tying;
    cfg.max_epochs = base.max_epochs;
    cfg.use_momentum = cell.momentum;
    cfg.patience = base.patience;

    const FlatParams init = random_constant_init(grid, base.tying, seed);
    const bool has_val = parts.validation.days() > 0;
    const FitResult fr = fit(init, grid, ic, parts.train, cfg,
                             has_val ? &parts.validation : nullptr);

    rec.diverged = fr.diverged;
    rec.epochs_run = fr.epochs_run;
    rec.best_epoch = fr.best_epoch;
    if (fr.history.empty()) return rec; // diverged before the first evaluation

    rec.train_total = fr.history[fr.best_epoch].train.total;
    rec.val_fidelity = fr.history[fr.best_epoch].selection_loss;
    rec.deriv_norm = param_derivative_norm(fr.params, grid);

    if (parts.test.days() > 0) {
        try {
            const std::size_t extra =
                static_cast<std::size_t>(parts.test.start_day - parts.train.start_day) +
                parts.test.days() - days;
            Trajectory traj = forecast(fr.params, grid, ic, extra);
            const auto terms =
                data_fidelity_terms(traj, parts.test, cfg.weights);
            double fid = 0.0;
            for (double t : terms) fid += t;
            rec.test_fidelity = fid;
            const FlatParams x = fr.params;
            rec.test_total = fid + derivative_penalty(x, cfg.weights.m, grid) +
                             positivity_penalty(x, cfg.weights.e_p, grid).surrogate;
            const ForecastReport rep = evaluate_forecast(traj, parts.test, base.threshold);
            for (std::size_t s = 0; s < kNumSeries; ++s)
                rec.test_mape[s] = rep.per_series[s].mape_percent;
        } catch (const divergence_error&) {
            rec.diverged = true;
        }
    }
    return rec;
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// 1.96 * sample standard error; 0 by convention for fewer than two values.
inline double ci95_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
}

} // namespace detail

/// Load an existing run log (newline-delimited JSON); unknown or corrupt
/// lines raise parse_error with the line number.
inline std::vector<RunRecord> load_run_log(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::vector<RunRecord> out;
    if (!f) return out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(f, line)) {
        ++row;
        if (line.empty()) continue;
        try {
            out.push_back(detail::record_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw parse_error(std::string("run log: ") + e.what(), row);
        }
    }
    return out;
}

/// Write the canonical run log: records sorted by (config hash, seed), one
/// JSON object per line, no timestamps — byte-identical across repeats.
inline void write_run_log(const std::string& path, std::vector<RunRecord> runs) {
    std::sort(runs.begin(), runs.end(), [](const RunRecord& x, const RunRecord& y) {
        return std::make_tuple(x.config_hash, x.seed) < std::make_tuple(y.config_hash, y.seed);
    });
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw parse_error("cannot write run log: " + path);
    for (const auto& r : runs) f << detail::record_to_json(r).dump() << '\n';
}

/// Aggregate records into per-cell summaries ranked by mean validation
/// fidelity (ties broken by the cell axes, so the ranking does not depend
/// on enumeration order).
inline std::vector<CellSummary> summarize(const std::vector<RunRecord>& runs) {
    std::map<std::uint64_t, std::vector<const RunRecord*>> by_cell;
    for (const auto& r : runs) by_cell[r.config_hash].push_back(&r);
    std::vector<CellSummary> out;
    for (const auto& [hash, cell_runs] : by_cell) {
        CellSummary s;
        s.config_hash = hash;
        s.cell = cell_runs.front()->cell;
        std::vector<double> val, tfid, ttot, dn;
        for (const RunRecord* r : cell_runs) {
            if (r->diverged || !r->val_fidelity) {
                ++s.n_diverged;
                continue;
            }
            ++s.n;
            val.push_back(*r->val_fidelity);
            if (r->test_fidelity) tfid.push_back(*r->test_fidelity);
            if (r->test_total) ttot.push_back(*r->test_total);
            if (r->deriv_norm) dn.push_back(*r->deriv_norm);
        }
        s.mean_val_fidelity =
            s.n ? detail::mean_of(val) : std::numeric_limits<double>::infinity();
        s.mean_test_fidelity = detail::mean_of(tfid);
        s.ci95_test_fidelity = detail::ci95_of(tfid);
        s.mean_test_total = detail::mean_of(ttot);
        s.ci95_test_total = detail::ci95_of(ttot);
        s.mean_deriv_norm = detail::mean_of(dn);
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const CellSummary& x, const CellSummary& y) {
        if (x.mean_val_fidelity != y.mean_val_fidelity)
            return x.mean_val_fidelity < y.mean_val_fidelity;
        return x.cell.key() < y.cell.key();
    });
    return out;
}

/// Run the full sweep: every cell of the spec times every seed, skipping
/// (cell, seed) pairs already present in the log at `base.log_path`, cells
/// and seeds in parallel. At the end the log is rewritten in canonical
/// order and the ranking computed. Individual divergence is recorded, not
/// fatal.
inline SweepResult grid_search(const GridSpec& spec, const SweepBase& base,
                               const SweepData& data) {
    if (!spec.valid()) throw domain_error("grid_search: invalid grid spec");
    if (!data.full.consistent()) throw shape_error("grid_search: ragged observations");

    const std::vector<GridCell> cells = spec.cells(data.split.train);
    SweepResult res;
    res.planned = cells.size() * spec.seeds_per_cell;

    std::map<std::pair<std::uint64_t, std::uint64_t>, RunRecord> done;
    if (!base.log_path.empty())
        for (auto& r : load_run_log(base.log_path))
            done.emplace(std::make_pair(r.config_hash, r.seed), std::move(r));

    struct Task {
        GridCell cell;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    std::vector<RunRecord> reused;
    for (const auto& c : cells) {
        const std::uint64_t h = detail::config_hash(c, base);
        for (std::size_t k = 0; k < spec.seeds_per_cell; ++k) {
            const std::uint64_t seed = spec.seed0 + k;
            const auto it = done.find({h, seed});
            if (it != done.end())
                reused.push_back(it->second);
            else
                tasks.push_back({c, seed});
        }
    }
    res.resumed = reused.size();
    res.executed = tasks.size();

    std::vector<RunRecord> fresh(tasks.size());
    std::mutex log_mu;
    std::ofstream append;
    if (!base.log_path.empty()) append.open(base.log_path, std::ios::binary | std::ios::app);
    parallel_for(tasks.size(), base.workers, [&](std::size_t i) {
        RunRecord r = run_cell(tasks[i].cell, tasks[i].seed, data, base);
        if (append.is_open()) {
            std::lock_guard<std::mutex> lock(log_mu);
            append << detail::record_to_json(r).dump() << '\n';
            append.flush();
        }
        fresh[i] = std::move(r);
    });
    if (append.is_open()) append.close();

    res.runs = std::move(reused);
    res.runs.insert(res.runs.end(), fresh.begin(), fresh.end());
    std::sort(res.runs.begin(), res.runs.end(), [](const RunRecord& x, const RunRecord& y) {
        return std::make_tuple(x.config_hash, x.seed) < std::make_tuple(y.config_hash, y.seed);
    });
    if (!base.log_path.empty()) write_run_log(base.log_path, res.runs);
    res.ranking = summarize(res.runs);
    return res;
}

using AblationSummary = std::vector<CellSummary>;

/// Momentum study: the (a, b) grid with the paired plain-descent arm.
inline SweepResult ablation_momentum(const SweepData& data, const SweepBase& base,
                                     std::vector<double> a_values, std::vector<double> b_values,
                                     std::size_t seeds, std::uint64_t seed0 = 0) {
    GridSpec spec;
    spec.a_values = std::move(a_values);
    spec.b_values = std::move(b_values);
    spec.seeds_per_cell = seeds;
    spec.seed0 = seed0;
    spec.include_momentum_off_baseline = true;
    return grid_search(spec, base, data);
}

/// Smoothing study: sweep the derivative-penalty weight.
inline SweepResult ablation_regularization(const SweepData& data, const SweepBase& base,
                                           std::vector<double> m_values, std::size_t seeds,
                                           std::uint64_t seed0 = 0, bool use_momentum = true) {
    GridSpec spec;
    spec.m_values = std::move(m_values);
    spec.seeds_per_cell = seeds;
    spec.seed0 = seed0;
    spec.use_momentum = use_momentum;
    return grid_search(spec, base, data);
}

/// Plot-ready summary table (delimiter-separated, header first).
inline void write_summary_table(std::ostream& out, const std::vector<CellSummary>& cells,
                                char delim = ',') {
    std::vector<std::string> header = {"a",
                                       "b",
                                       "m",
                                       "e",
                                       "train_days",
                                       "momentum",
                                       "n",
                                       "n_diverged",
                                       "mean_val_fidelity",
                                       "mean_test_fidelity",
                                       "ci95_test_fidelity",
                                       "mean_test_total",
                                       "ci95_test_total",
                                       "mean_deriv_norm"};
    std::vector<std::vector<std::string>> rows;
    const auto fmt = [](double v) { return detail::canonical_double(v); };
    for (const auto& s : cells)
        rows.push_back({fmt(s.cell.a), fmt(s.cell.b), fmt(s.cell.m), fmt(s.cell.e),
                        std::to_string(s.cell.train_days), s.cell.momentum ? "1" : "0",
                        std::to_string(s.n), std::to_string(s.n_diverged),
                        fmt(s.mean_val_fidelity), fmt(s.mean_test_fidelity),
                        fmt(s.ci95_test_fidelity), fmt(s.mean_test_total),
                        fmt(s.ci95_test_total), fmt(s.mean_deriv_norm)});
    write_csv(out, header, rows, delim);
}

} // namespace sidarthe
