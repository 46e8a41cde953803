#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidarthe/sweep.hpp"
#include "sidarthe/version.hpp"

namespace sidarthe::cli {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct DataConfig {
    std::string file;
    std::string format = "json"; // json | italian-csv | french-csv
    double population = 0.0;     // required for csv inputs; json documents carry N
    std::size_t lag_days = 14;   // resolution lag for the French derivation
    ColumnMap columns;
    FrenchColumnMap french_columns;
};

struct FitSettings {
    double pi0 = 1e-4;
    double a = 0.0;
    double b = 0.0;
    double e = 1.0; // uniform fidelity weight
    std::array<std::optional<double>, kNumSeries> e_series; // per-series overrides
    double m = 0.0;
    double e_p = 0.0;
    std::size_t max_epochs = 1000;
    std::size_t patience = 0;
    bool momentum = true;
    bool tying = true; // the standard rate pairings
    std::uint64_t seed = 0;

    LossWeights weights() const {
        LossWeights w = LossWeights::uniform_fidelity(e, m, e_p);
        if (e_series[0]) w.e_d = *e_series[0];
        if (e_series[1]) w.e_r = *e_series[1];
        if (e_series[2]) w.e_t = *e_series[2];
        if (e_series[3]) w.e_h = *e_series[3];
        if (e_series[4]) w.e_e = *e_series[4];
        return w;
    }
    MomentumSchedule schedule() const { return {pi0, a, b}; }
    TyingMap tying_map() const { return tying ? TyingMap::standard() : TyingMap::none(); }
};

struct SimulateSettings {
    std::size_t days = 0;                    // horizon; nodes at days 0..days
    std::string rates_preset = "reference";  // reference | zero
    std::map<std::string, double> rate_overrides;
    std::string params_file;                 // day-indexed rate table; wins over presets
    bool init_from_data = false;
    std::map<std::string, double> init_values; // compartment name -> value, plus h_d / N
};

struct ForecastSettings {
    std::string params_file; // as written by the fit command
    std::size_t horizon = 0; // 0 = validation + test days
};

struct AblateSettings {
    std::string study = "regularization"; // regularization | momentum
    std::vector<double> a_values = {0.0};
    std::vector<double> b_values = {0.0};
    std::vector<double> m_values = {0.0};
    std::size_t seeds = 1;
    std::uint64_t seed0 = 0;
    bool momentum = true; // arm setting for the regularization study
};

struct RunConfig {
    DataConfig data;
    SplitSpec split;
    FitSettings fit;
    std::size_t substeps = 1;
    double threshold = 0.30;
    std::size_t workers = 0; // 0 = SIDARTHE_GF_WORKERS env or hardware default
    SimulateSettings simulate;
    ForecastSettings forecast;
    GridSpec grid;
    AblateSettings ablate;
};

namespace detail {

using nlohmann::json;

inline void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                        const std::string& where) {
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (k == a) ok = true;
        if (!ok) throw parse_error("unknown key \"" + k + "\" in " + where);
    }
}

template <typename T>
inline T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j[key].get<T>();
    } catch (const std::exception&) {
        throw parse_error(std::string("bad value for \"") + key + "\"");
    }
}

inline std::size_t rate_index(const std::string& name) {
    for (std::size_t i = 0; i < kNumRates; ++i)
        if (name == kRateNames[i]) return i;
    throw parse_error("unknown rate name: " + name);
}

inline std::size_t comp_index(const std::string& name) {
    for (std::size_t i = 0; i < kNumCompartments; ++i)
        if (name == kCompNames[i]) return i;
    throw parse_error("unknown compartment name: " + name);
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::get_or;
    RunConfig c;
    detail::expect_keys(j,
                        {"data", "split", "fit", "substeps", "threshold", "workers", "simulate",
                         "forecast", "grid", "ablate"},
                        "config");
    if (j.contains("data")) {
        const auto& d = j["data"];
        detail::expect_keys(d, {"file", "format", "population", "lag_days", "columns"}, "data");
        c.data.file = get_or<std::string>(d, "file", "");
        c.data.format = get_or<std::string>(d, "format", "json");
        if (c.data.format != "json" && c.data.format != "italian-csv" &&
            c.data.format != "french-csv")
            throw parse_error("data.format must be json, italian-csv, or french-csv");
        c.data.population = get_or<double>(d, "population", 0.0);
        c.data.lag_days = get_or<std::size_t>(d, "lag_days", 14);
        if (d.contains("columns")) {
            const auto& cols = d["columns"];
            if (c.data.format == "french-csv") {
                auto& f = c.data.french_columns;
                f.date = get_or<std::string>(cols, "date", f.date);
                f.cumulative_cases =
                    get_or<std::string>(cols, "cumulative_cases", f.cumulative_cases);
                f.icu = get_or<std::string>(cols, "icu", f.icu);
                f.hospitalized = get_or<std::string>(cols, "hospitalized", f.hospitalized);
                f.hospital_recovered =
                    get_or<std::string>(cols, "hospital_recovered", f.hospital_recovered);
                f.deaths = get_or<std::string>(cols, "deaths", f.deaths);
            } else {
                c.data.columns.date = get_or<std::string>(cols, "date", c.data.columns.date);
                for (std::size_t s = 0; s < kNumSeries; ++s) {
                    const std::string key(kSeriesNames[s]);
                    if (cols.contains(key)) c.data.columns.cols[s] = cols[key].get<std::string>();
                }
            }
        }
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        detail::expect_keys(s, {"train", "validation", "test"}, "split");
        c.split.train = get_or<std::size_t>(s, "train", 0);
        c.split.validation = get_or<std::size_t>(s, "validation", 0);
        c.split.test = get_or<std::size_t>(s, "test", 0);
    }
    if (j.contains("fit")) {
        const auto& f = j["fit"];
        detail::expect_keys(f,
                            {"pi0", "a", "b", "e", "e_D", "e_R", "e_T", "e_H", "e_E", "m", "e_p",
                             "max_epochs", "patience", "momentum", "tying", "seed"},
                            "fit");
        c.fit.pi0 = get_or<double>(f, "pi0", c.fit.pi0);
        c.fit.a = get_or<double>(f, "a", c.fit.a);
        c.fit.b = get_or<double>(f, "b", c.fit.b);
        c.fit.e = get_or<double>(f, "e", c.fit.e);
        const char* keys[kNumSeries] = {"e_D", "e_R", "e_T", "e_H", "e_E"};
        for (std::size_t s = 0; s < kNumSeries; ++s)
            if (f.contains(keys[s])) c.fit.e_series[s] = f[keys[s]].get<double>();
        c.fit.m = get_or<double>(f, "m", c.fit.m);
        c.fit.e_p = get_or<double>(f, "e_p", c.fit.e_p);
        c.fit.max_epochs = get_or<std::size_t>(f, "max_epochs", c.fit.max_epochs);
        c.fit.patience = get_or<std::size_t>(f, "patience", c.fit.patience);
        c.fit.momentum = get_or<bool>(f, "momentum", c.fit.momentum);
        c.fit.tying = get_or<bool>(f, "tying", c.fit.tying);
        c.fit.seed = get_or<std::uint64_t>(f, "seed", c.fit.seed);
    }
    c.substeps = get_or<std::size_t>(j, "substeps", 1);
    if (c.substeps == 0) throw parse_error("substeps must be >= 1");
    c.threshold = get_or<double>(j, "threshold", 0.30);
    c.workers = get_or<std::size_t>(j, "workers", 0);
    if (j.contains("simulate")) {
        const auto& s = j["simulate"];
        detail::expect_keys(s, {"days", "rates", "params_file", "init"}, "simulate");
        c.simulate.days = get_or<std::size_t>(s, "days", 0);
        if (s.contains("rates")) {
            if (s["rates"].is_string()) {
                c.simulate.rates_preset = s["rates"].get<std::string>();
                if (c.simulate.rates_preset != "reference" && c.simulate.rates_preset != "zero")
                    throw parse_error("simulate.rates preset must be reference or zero");
            } else if (s["rates"].is_object()) {
                c.simulate.rates_preset = "zero";
                for (const auto& [k, v] : s["rates"].items()) {
                    detail::rate_index(k); // validate the name
                    c.simulate.rate_overrides[k] = v.get<double>();
                }
            } else {
                throw parse_error("simulate.rates must be a preset name or an object");
            }
        }
        c.simulate.params_file = get_or<std::string>(s, "params_file", "");
        if (s.contains("init")) {
            if (s["init"].is_string()) {
                if (s["init"].get<std::string>() != "data")
                    throw parse_error("simulate.init must be \"data\" or an object");
                c.simulate.init_from_data = true;
            } else if (s["init"].is_object()) {
                for (const auto& [k, v] : s["init"].items()) {
                    if (k != "h_d" && k != "N") detail::comp_index(k); // validate
                    c.simulate.init_values[k] = v.get<double>();
                }
            } else {
                throw parse_error("simulate.init must be \"data\" or an object");
            }
        }
    }
    if (j.contains("forecast")) {
        const auto& f = j["forecast"];
        detail::expect_keys(f, {"params_file", "horizon"}, "forecast");
        c.forecast.params_file = get_or<std::string>(f, "params_file", "");
        c.forecast.horizon = get_or<std::size_t>(f, "horizon", 0);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        detail::expect_keys(
            g, {"a", "b", "m", "e", "train_days", "seeds", "seed0", "momentum", "baseline"},
            "grid");
        if (g.contains("a")) c.grid.a_values = g["a"].get<std::vector<double>>();
        if (g.contains("b")) c.grid.b_values = g["b"].get<std::vector<double>>();
        if (g.contains("m")) c.grid.m_values = g["m"].get<std::vector<double>>();
        if (g.contains("e")) c.grid.e_values = g["e"].get<std::vector<double>>();
        if (g.contains("train_days"))
            c.grid.train_days_values = g["train_days"].get<std::vector<std::size_t>>();
        c.grid.seeds_per_cell = get_or<std::size_t>(g, "seeds", 1);
        c.grid.seed0 = get_or<std::uint64_t>(g, "seed0", 0);
        c.grid.use_momentum = get_or<bool>(g, "momentum", true);
        c.grid.include_momentum_off_baseline = get_or<bool>(g, "baseline", false);
    }
    if (j.contains("ablate")) {
        const auto& a = j["ablate"];
        detail::expect_keys(a, {"study", "a", "b", "m", "seeds", "seed0", "momentum"}, "ablate");
        c.ablate.study = get_or<std::string>(a, "study", "regularization");
        if (c.ablate.study != "regularization" && c.ablate.study != "momentum")
            throw parse_error("ablate.study must be regularization or momentum");
        if (a.contains("a")) c.ablate.a_values = a["a"].get<std::vector<double>>();
        if (a.contains("b")) c.ablate.b_values = a["b"].get<std::vector<double>>();
        if (a.contains("m")) c.ablate.m_values = a["m"].get<std::vector<double>>();
        c.ablate.seeds = get_or<std::size_t>(a, "seeds", 1);
        c.ablate.seed0 = get_or<std::uint64_t>(a, "seed0", 0);
        c.ablate.momentum = get_or<bool>(a, "momentum", true);
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw parse_error("cannot open config: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw parse_error(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

/// Fully resolved snapshot: every field explicit, so re-running a command
/// with this file reproduces the original outputs.
inline nlohmann::ordered_json resolved_config(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["data"] = {{"file", c.data.file},
                 {"format", c.data.format},
                 {"population", c.data.population},
                 {"lag_days", c.data.lag_days}};
    if (c.data.format == "french-csv") {
        j["data"]["columns"] = {{"date", c.data.french_columns.date},
                                {"cumulative_cases", c.data.french_columns.cumulative_cases},
                                {"icu", c.data.french_columns.icu},
                                {"hospitalized", c.data.french_columns.hospitalized},
                                {"hospital_recovered", c.data.french_columns.hospital_recovered},
                                {"deaths", c.data.french_columns.deaths}};
    } else {
        nlohmann::ordered_json cols;
        cols["date"] = c.data.columns.date;
        for (std::size_t s = 0; s < kNumSeries; ++s)
            cols[std::string(kSeriesNames[s])] = c.data.columns.cols[s];
        j["data"]["columns"] = std::move(cols);
    }
    j["split"] = {{"train", c.split.train},
                  {"validation", c.split.validation},
                  {"test", c.split.test}};
    nlohmann::ordered_json f;
    f["pi0"] = c.fit.pi0;
    f["a"] = c.fit.a;
    f["b"] = c.fit.b;
    f["e"] = c.fit.e;
    const char* keys[kNumSeries] = {"e_D", "e_R", "e_T", "e_H", "e_E"};
    for (std::size_t s = 0; s < kNumSeries; ++s)
        if (c.fit.e_series[s]) f[keys[s]] = *c.fit.e_series[s];
    f["m"] = c.fit.m;
    f["e_p"] = c.fit.e_p;
    f["max_epochs"] = c.fit.max_epochs;
    f["patience"] = c.fit.patience;
    f["momentum"] = c.fit.momentum;
    f["tying"] = c.fit.tying;
    f["seed"] = c.fit.seed;
    j["fit"] = std::move(f);
    j["substeps"] = c.substeps;
    j["threshold"] = c.threshold;
    j["workers"] = c.workers;
    nlohmann::ordered_json sim;
    sim["days"] = c.simulate.days;
    if (!c.simulate.params_file.empty()) {
        sim["params_file"] = c.simulate.params_file;
    } else if (!c.simulate.rate_overrides.empty()) {
        nlohmann::ordered_json r;
        for (const auto& [k, v] : c.simulate.rate_overrides) r[k] = v;
        sim["rates"] = std::move(r);
    } else {
        sim["rates"] = c.simulate.rates_preset;
    }
    if (c.simulate.init_from_data) {
        sim["init"] = "data";
    } else if (!c.simulate.init_values.empty()) {
        nlohmann::ordered_json iv;
        for (const auto& [k, v] : c.simulate.init_values) iv[k] = v;
        sim["init"] = std::move(iv);
    }
    j["simulate"] = std::move(sim);
    j["forecast"] = {{"params_file", c.forecast.params_file},
                     {"horizon", c.forecast.horizon}};
    j["grid"] = {{"a", c.grid.a_values},
                 {"b", c.grid.b_values},
                 {"m", c.grid.m_values},
                 {"e", c.grid.e_values},
                 {"train_days", c.grid.train_days_values},
                 {"seeds", c.grid.seeds_per_cell},
                 {"seed0", c.grid.seed0},
                 {"momentum", c.grid.use_momentum},
                 {"baseline", c.grid.include_momentum_off_baseline}};
    j["ablate"] = {{"study", c.ablate.study},   {"a", c.ablate.a_values},
                   {"b", c.ablate.b_values},    {"m", c.ablate.m_values},
                   {"seeds", c.ablate.seeds},   {"seed0", c.ablate.seed0},
                   {"momentum", c.ablate.momentum}};
    return j;
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

namespace detail {

namespace fs = std::filesystem;

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw parse_error("cannot write: " + path.string());
    f << text;
}

inline ObservedSeries load_observations(const DataConfig& d) {
    if (d.file.empty()) throw parse_error("no data file configured");
    if (d.format == "json") return load_series_json(d.file);
    if (!(d.population > 0.0))
        throw parse_error("data.population must be positive for csv inputs");
    if (d.format == "italian-csv") return load_series_csv(d.file, d.columns, d.population);
    // french-csv
    const CsvTable t = read_csv(d.file);
    const FrenchRawSeries raw = load_french_raw(t, d.french_columns, d.population);
    return derive_french(raw, d.lag_days).obs;
}

/// Day-indexed rate table as written by the fit command.
inline void write_params_csv(const fs::path& path, const FlatParams& x, const TimeGrid& grid) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw parse_error("cannot write: " + path.string());
    std::vector<std::string> header = {"day"};
    for (std::size_t r = 0; r < kNumRates; ++r) header.emplace_back(kRateNames[r]);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
        std::vector<std::string> row = {
            std::to_string(static_cast<long long>(std::llround(grid.node_time(i))))};
        const double* s = x.slice(i);
        for (std::size_t r = 0; r < kNumRates; ++r)
            row.push_back(sidarthe::detail::canonical_double(s[r]));
        rows.push_back(std::move(row));
    }
    write_csv(f, header, rows);
}

struct LoadedParams {
    FlatParams x;
    TimeGrid grid;
};

inline LoadedParams load_params_csv(const std::string& path, std::size_t substeps) {
    const CsvTable t = read_csv(path);
    if (t.rows.size() < 2) throw parse_error("params file needs at least 2 day rows");
    std::array<std::size_t, kNumRates> idx{};
    const std::size_t day_col = t.column("day");
    for (std::size_t r = 0; r < kNumRates; ++r) idx[r] = t.column(std::string(kRateNames[r]));
    const auto day_at = [&](std::size_t i) {
        const auto v = parse_cell(t.rows[i][day_col], i + 2);
        if (!v) throw parse_error("missing day value", i + 2);
        return static_cast<std::int64_t>(std::llround(*v));
    };
    const std::int64_t day0 = day_at(0);
    for (std::size_t i = 1; i < t.rows.size(); ++i)
        if (day_at(i) != day0 + static_cast<std::int64_t>(i))
            throw parse_error("params file days must be consecutive", i + 2);
    const std::size_t n = t.rows.size();
    LoadedParams lp{FlatParams::zeros(n),
                    TimeGrid{static_cast<double>(day0), static_cast<double>(n - 1),
                             n - 1, substeps}};
    for (std::size_t i = 0; i < n; ++i) {
        double* s = lp.x.slice(i);
        for (std::size_t r = 0; r < kNumRates; ++r) {
            const auto v = parse_cell(t.rows[i][idx[r]], i + 2);
            if (!v) throw parse_error("missing rate value", i + 2);
            s[r] = *v;
        }
    }
    return lp;
}

inline void write_meta(const fs::path& out_dir, const std::string& command,
                       const RunConfig& cfg, const nlohmann::ordered_json& extra) {
    const nlohmann::ordered_json resolved = resolved_config(cfg);
    nlohmann::ordered_json meta;
    meta["command"] = command;
    meta["tool"] = kLibraryName;
    meta["version"] = kVersion;
    meta["config_hash"] = sidarthe::detail::hash_hex(fnv1a(resolved.dump()));
    for (const auto& [k, v] : extra.items()) meta[k] = v;
    write_text(out_dir / "resolved_config.json", resolved.dump(2) + "\n");
    write_text(out_dir / "meta.json", meta.dump(2) + "\n");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Commands (return process exit codes: 0 ok, 1 usage/config, 2 data,
// 3 divergence)
// ---------------------------------------------------------------------------

inline int cmd_simulate(const RunConfig& cfg, const std::string& out_dir,
                        std::ostream& err = std::cerr) {
    namespace fs = std::filesystem;
    FlatParams x{{}};
    TimeGrid grid{0.0, 1.0, 1, 1};
    InitialCondition ic;
    try {
        fs::create_directories(out_dir);
        if (!cfg.simulate.params_file.empty()) {
            auto lp = detail::load_params_csv(cfg.simulate.params_file, cfg.substeps);
            x = std::move(lp.x);
            grid = lp.grid;
        } else {
            if (cfg.simulate.days == 0) {
                err << "error: simulate.days must be >= 1\n";
                return 1;
            }
            grid = TimeGrid{0.0, static_cast<double>(cfg.simulate.days),
                            cfg.simulate.days, cfg.substeps};
            RateVector r{}; // zero
            if (cfg.simulate.rates_preset == "reference") r = italy_reference_rates();
            for (const auto& [name, v] : cfg.simulate.rate_overrides)
                r[detail::rate_index(name)] = v;
            x = flatten(ParamTrajectory::constant(grid, r));
        }
    } catch (const sidarthe::error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    try {
        if (cfg.simulate.init_from_data) {
            ic = build_initial_condition(detail::load_observations(cfg.data));
        } else if (!cfg.simulate.init_values.empty()) {
            const auto& iv = cfg.simulate.init_values;
            for (const auto& [name, v] : iv) {
                if (name == "h_d")
                    ic.h_d0 = v;
                else if (name != "N")
                    ic.z0[detail::comp_index(name)] = v;
            }
            ic.population = iv.count("N") ? iv.at("N") : ic.z0.sum();
            if (!ic.valid()) throw domain_error("simulate.init is not a valid starting state");
        } else {
            err << "error: simulate needs an init (\"data\" or explicit values)\n";
            return 1;
        }
    } catch (const sidarthe::error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        const ParamTrajectory params = unflatten(x, grid);
        const Trajectory traj = integrate_heun(ic, params);
        std::vector<std::string> header = {"day", "S", "I", "D", "A", "R", "T", "H", "E", "H_d",
                                           "R0"};
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
            std::vector<std::string> row = {
                std::to_string(static_cast<long long>(std::llround(grid.node_time(i))))};
            const Vec9 y = pack(traj.states[i]);
            for (std::size_t c = 0; c < kDim; ++c)
                row.push_back(sidarthe::detail::canonical_double(y[c]));
            std::string r0_cell;
            try {
                r0_cell = sidarthe::detail::canonical_double(
                    basic_reproduction_number(params.values[i]));
            } catch (const singularity_error&) {
                r0_cell.clear(); // undefined at this node; leave the cell blank
            }
            row.push_back(r0_cell);
            rows.push_back(std::move(row));
        }
        std::ofstream f(fs::path(out_dir) / "trajectory.csv", std::ios::binary);
        write_csv(f, header, rows);
        detail::write_meta(out_dir, "simulate", cfg,
                           {{"days", grid.n_intervals},
                            {"population", ic.population}});
    } catch (const divergence_error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const sidarthe::error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

inline int cmd_fit(const RunConfig& cfg, const std::string& out_dir,
                   std::ostream& err = std::cerr) {
    namespace fs = std::filesystem;
    SplitSeries parts;
    InitialCondition ic;
    try {
        fs::create_directories(out_dir);
        const ObservedSeries full = detail::load_observations(cfg.data);
        if (cfg.split.train < 2) {
            err << "error: split.train must be >= 2 days\n";
            return 1;
        }
        parts = sidarthe::detail::carve(full, cfg.split.train, cfg.split);
        ic = build_initial_condition(parts.train);
    } catch (const sidarthe::error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    const std::size_t days = parts.train.days();
    const TimeGrid grid{static_cast<double>(parts.train.start_day),
                        static_cast<double>(days - 1), days - 1, cfg.substeps};
    FitConfig fc;
    fc.schedule = cfg.fit.schedule();
    if (!fc.schedule.valid()) {
        err << "error: fit schedule needs pi0 > 0, a >= 0, b >= 0\n";
        return 1;
    }
    fc.weights = cfg.fit.weights();
    fc.tying = cfg.fit.tying_map();
    fc.max_epochs = cfg.fit.max_epochs;
    fc.use_momentum = cfg.fit.momentum;
    fc.patience = cfg.fit.patience;
    const FlatParams init = random_constant_init(grid, fc.tying, cfg.fit.seed);
    const bool has_val = parts.validation.days() > 0;
    const FitResult fr = fit(init, grid, ic, parts.train, fc,
                             has_val ? &parts.validation : nullptr);

    try {
        detail::write_params_csv(fs::path(out_dir) / "params.csv", fr.params, grid);
        {
            std::ofstream f(fs::path(out_dir) / "history.csv", std::ios::binary);
            std::vector<std::string> header = {"epoch",
                                               "total",
                                               "fidelity",
                                               "derivative_penalty",
                                               "positivity_penalty",
                                               "positivity_indicator",
                                               "selection_loss"};
            std::vector<std::vector<std::string>> rows;
            const auto fmt = sidarthe::detail::canonical_double;
            for (std::size_t k = 0; k < fr.history.size(); ++k) {
                const auto& h = fr.history[k];
                rows.push_back({std::to_string(k), fmt(h.train.total),
                                fmt(h.train.fidelity_total()), fmt(h.train.derivative_penalty),
                                fmt(h.train.positivity_penalty),
                                fmt(h.train.positivity_indicator), fmt(h.selection_loss)});
            }
            write_csv(f, header, rows);
        }
        nlohmann::ordered_json s;
        s["best_epoch"] = fr.best_epoch;
        s["epochs_run"] = fr.epochs_run;
        s["diverged"] = fr.diverged;
        if (fr.diverged) s["divergence_step"] = fr.divergence_step;
        s["used_validation"] = fr.used_validation;
        s["selection_loss"] = fr.history.empty()
                                  ? nlohmann::ordered_json(nullptr)
                                  : nlohmann::ordered_json(
                                        fr.history[fr.best_epoch].selection_loss);
        s["boundary"] = {{"first", fr.boundary.first},
                         {"last", fr.boundary.last},
                         {"max", fr.boundary.max},
                         {"median", fr.boundary.median}};
        s["param_derivative_norm"] = param_derivative_norm(fr.params, grid);
        detail::write_text(fs::path(out_dir) / "fit_summary.json", s.dump(2) + "\n");
        detail::write_meta(out_dir, "fit", cfg,
                           {{"seed", cfg.fit.seed}, {"train_days", days}});
    } catch (const sidarthe::error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    if (fr.diverged) {
        err << "error: fit diverged at substep " << fr.divergence_step
            << " (outputs contain the best iterate before failure)\n";
        return 3;
    }
    return 0;
}

inline int cmd_forecast(const RunConfig& cfg, const std::string& out_dir,
                        std::ostream& err = std::cerr) {
    namespace fs = std::filesystem;
    ObservedSeries full;
    SplitSeries parts;
    InitialCondition ic;
    detail::LoadedParams lp{FlatParams{{}}, TimeGrid{0.0, 1.0, 1, 1}};
    try {
        fs::create_directories(out_dir);
        if (cfg.forecast.params_file.empty()) {
            err << "error: forecast.params_file is required\n";
            return 1;
        }
        full = detail::load_observations(cfg.data);
        parts = sidarthe::detail::carve(full, cfg.split.train, cfg.split);
        ic = build_initial_condition(parts.train);
        lp = detail::load_params_csv(cfg.forecast.params_file, cfg.substeps);
        if (lp.grid.n_nodes() != parts.train.days() ||
            lp.grid.t_start != static_cast<double>(parts.train.start_day))
            throw parse_error("params file does not cover the training window");
    } catch (const sidarthe::error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        const std::size_t horizon = cfg.forecast.horizon
                                        ? cfg.forecast.horizon
                                        : cfg.split.validation + cfg.split.test;
        const Trajectory traj = forecast(lp.x, lp.grid, ic, horizon);
        // Per-day predictions next to the observations that exist.
        std::vector<std::string> header = {"day"};
        for (std::size_t s = 0; s < kNumSeries; ++s)
            header.push_back("pred_" + std::string(kSeriesNames[s]));
        for (std::size_t s = 0; s < kNumSeries; ++s)
            header.push_back("obs_" + std::string(kSeriesNames[s]));
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < traj.grid.n_nodes(); ++i) {
            const auto day = static_cast<std::int64_t>(std::llround(traj.grid.node_time(i)));
            std::vector<std::string> row = {std::to_string(day)};
            const Vec9 y = pack(traj.states[i]);
            for (std::size_t s = 0; s < kNumSeries; ++s)
                row.push_back(sidarthe::detail::canonical_double(
                    y[series_component(static_cast<Series>(s))]));
            for (std::size_t s = 0; s < kNumSeries; ++s) {
                const auto o = full.at(static_cast<Series>(s), day);
                row.push_back(o ? sidarthe::detail::canonical_double(*o) : "");
            }
            rows.push_back(std::move(row));
        }
        {
            std::ofstream f(fs::path(out_dir) / "forecast.csv", std::ios::binary);
            write_csv(f, header, rows);
        }
        // Table-style test report.
        const ForecastReport rep = evaluate_forecast(traj, parts.test, cfg.threshold);
        {
            std::ofstream f(fs::path(out_dir) / "report.csv", std::ios::binary);
            std::vector<std::string> rh = {"series",     "mape_percent", "within_num",
                                           "within_den", "threshold",    "evaluated",
                                           "skipped"};
            std::vector<std::vector<std::string>> rr;
            for (std::size_t s = 0; s < kNumSeries; ++s) {
                const auto& sc = rep.per_series[s];
                rr.push_back({std::string(kSeriesNames[s]),
                              sc.mape_percent
                                  ? sidarthe::detail::canonical_double(*sc.mape_percent)
                                  : "",
                              std::to_string(sc.within.num), std::to_string(sc.within.den),
                              sidarthe::detail::canonical_double(rep.threshold),
                              std::to_string(sc.within.den), std::to_string(sc.skipped)});
            }
            write_csv(f, rh, rr);
        }
        detail::write_meta(out_dir, "forecast", cfg,
                           {{"horizon", horizon},
                            {"params_file", cfg.forecast.params_file},
                            {"extrapolation", "hold-last-node-values"}});
    } catch (const divergence_error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const sidarthe::error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

namespace detail {

inline int run_sweep_command(const char* name, const RunConfig& cfg, const GridSpec& spec,
                             const std::string& out_dir, std::ostream& err, std::ostream& out) {
    namespace fs = std::filesystem;
    SweepData data;
    try {
        fs::create_directories(out_dir);
        if (!spec.valid()) {
            err << "error: empty hyperparameter grid\n";
            return 1;
        }
        if (!(cfg.fit.pi0 > 0.0)) {
            err << "error: fit.pi0 must be > 0\n";
            return 1;
        }
        data.full = load_observations(cfg.data);
        data.split = cfg.split;
        data.substeps = cfg.substeps;
        if (cfg.split.train < 2) {
            err << "error: split.train must be >= 2 days\n";
            return 1;
        }
    } catch (const sidarthe::error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    SweepBase base;
    base.pi0 = cfg.fit.pi0;
    base.e_p = cfg.fit.e_p;
    base.tying = cfg.fit.tying_map();
    base.max_epochs = cfg.fit.max_epochs;
    base.patience = cfg.fit.patience;
    base.threshold = cfg.threshold;
    base.workers = cfg.workers;
    base.log_path = (fs::path(out_dir) / "run_log.ndjson").string();
    out << "planned runs: " << spec.planned_runs(cfg.split.train) << "\n";
    try {
        const SweepResult res = grid_search(spec, base, data);
        {
            std::ofstream f(fs::path(out_dir) / "summary.csv", std::ios::binary);
            write_summary_table(f, res.ranking);
        }
        if (!res.ranking.empty()) {
            const CellSummary& best = res.ranking.front();
            nlohmann::ordered_json bj;
            bj["a"] = best.cell.a;
            bj["b"] = best.cell.b;
            bj["m"] = best.cell.m;
            bj["e"] = best.cell.e;
            bj["train_days"] = best.cell.train_days;
            bj["momentum"] = best.cell.momentum;
            bj["mean_val_fidelity"] = best.mean_val_fidelity;
            bj["mean_test_fidelity"] = best.mean_test_fidelity;
            bj["ci95_test_fidelity"] = best.ci95_test_fidelity;
            write_text(fs::path(out_dir) / "best_config.json", bj.dump(2) + "\n");
        }
        write_meta(out_dir, name, cfg,
                   {{"planned", res.planned},
                    {"executed", res.executed},
                    {"resumed", res.resumed}});
        out << "executed " << res.executed << ", resumed " << res.resumed << "\n";
    } catch (const sidarthe::error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace detail

inline int cmd_grid(const RunConfig& cfg, const std::string& out_dir,
                    std::ostream& err = std::cerr, std::ostream& out = std::cout) {
    return detail::run_sweep_command("grid", cfg, cfg.grid, out_dir, err, out);
}

inline int cmd_ablate(const RunConfig& cfg, const std::string& out_dir,
                      std::ostream& err = std::cerr, std::ostream& out = std::cout) {
    GridSpec spec;
    if (cfg.ablate.study == "momentum") {
        spec.a_values = cfg.ablate.a_values;
        spec.b_values = cfg.ablate.b_values;
        spec.include_momentum_off_baseline = true;
    } else {
        spec.m_values = cfg.ablate.m_values;
        spec.use_momentum = cfg.ablate.momentum;
    }
    spec.seeds_per_cell = cfg.ablate.seeds;
    spec.seed0 = cfg.ablate.seed0;
    return detail::run_sweep_command("ablate", cfg, spec, out_dir, err, out);
}

} // namespace sidarthe::cli
