#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidarthe/csv.hpp"
#include "sidarthe/observations.hpp"
#include "sidarthe/state.hpp"

namespace sidarthe {

/// Which file columns feed the five target series. Defaults follow the
/// Italian civil-protection daily regional/national format.
struct ColumnMap {
    std::string date = "data";
    std::array<std::string, kNumSeries> cols = {
        "isolamento_domiciliare", // D: infected, isolated at home
        "ricoverati_con_sintomi", // R: hospitalized, not ICU
        "terapia_intensiva",      // T: ICU
        "dimessi_guariti",        // H: discharged healed (cumulative)
        "deceduti",               // E: deaths (cumulative)
    };

    const std::string& of(Series s) const { return cols[static_cast<std::size_t>(s)]; }
};

namespace detail {

inline void check_dates_strictly_increasing(const CsvTable& t, std::size_t date_col) {
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        // ISO-8601 date strings order lexicographically.
        if (!(t.rows[i - 1][date_col] < t.rows[i][date_col]))
            throw parse_error("dates must be strictly increasing: '" + t.rows[i][date_col] +
                                  "' follows '" + t.rows[i - 1][date_col] + "'",
                              i + 2); // +1 header, +1 one-based
    }
}

} // namespace detail

/// Read one observation series per mapped column; one row = one day. Blank
/// cells become missing values. Dates must be strictly increasing.
inline ObservedSeries load_series(const CsvTable& t, const ColumnMap& map, double population) {
    const std::size_t date_col = t.column(map.date);
    std::array<std::size_t, kNumSeries> idx{};
    for (std::size_t s = 0; s < kNumSeries; ++s) idx[s] = t.column(map.cols[s]);
    detail::check_dates_strictly_increasing(t, date_col);

    ObservedSeries obs = ObservedSeries::empty(t.rows.size(), population);
    if (!t.rows.empty()) obs.date0 = t.rows[0][date_col];
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::size_t row = i + 2; // header is row 1
        for (std::size_t s = 0; s < kNumSeries; ++s)
            obs.series[s][i] = parse_cell(t.rows[i][idx[s]], row);
    }
    return obs;
}

inline ObservedSeries load_series_csv(const std::string& path, const ColumnMap& map,
                                      double population) {
    return load_series(read_csv(path), map, population);
}

/// Raw inputs of the French hospital reporting format, before the home
/// isolation and healed series can be derived.
struct FrenchRawSeries {
    std::vector<std::optional<double>> cumulative_cases;   // running total of confirmed
    std::vector<std::optional<double>> icu;                // currently in ICU
    std::vector<std::optional<double>> hospitalized;       // currently hospitalized, not ICU
    std::vector<std::optional<double>> hospital_recovered; // cumulative hospital discharges
    std::vector<std::optional<double>> deaths;             // cumulative deaths
    std::string date0;
    double population = 0.0;

    std::size_t days() const { return cumulative_cases.size(); }
    bool consistent() const {
        const std::size_t n = cumulative_cases.size();
        return icu.size() == n && hospitalized.size() == n && hospital_recovered.size() == n &&
               deaths.size() == n;
    }
};

/// Column names of the French hospital reporting format.
struct FrenchColumnMap {
    std::string date = "date";
    std::string cumulative_cases = "total_cas_confirmes";
    std::string icu = "patients_reanimation";
    std::string hospitalized = "patients_hospitalises";
    std::string hospital_recovered = "total_patients_gueris";
    std::string deaths = "total_deces_hopital";
};

inline FrenchRawSeries load_french_raw(const CsvTable& t, const FrenchColumnMap& map,
                                       double population) {
    const std::size_t date_col = t.column(map.date);
    const std::size_t c_cases = t.column(map.cumulative_cases);
    const std::size_t c_icu = t.column(map.icu);
    const std::size_t c_hosp = t.column(map.hospitalized);
    const std::size_t c_rec = t.column(map.hospital_recovered);
    const std::size_t c_dead = t.column(map.deaths);
    detail::check_dates_strictly_increasing(t, date_col);

    FrenchRawSeries raw;
    raw.population = population;
    if (!t.rows.empty()) raw.date0 = t.rows[0][date_col];
    const std::size_t n = t.rows.size();
    raw.cumulative_cases.resize(n);
    raw.icu.resize(n);
    raw.hospitalized.resize(n);
    raw.hospital_recovered.resize(n);
    raw.deaths.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t row = i + 2;
        raw.cumulative_cases[i] = parse_cell(t.rows[i][c_cases], row);
        raw.icu[i] = parse_cell(t.rows[i][c_icu], row);
        raw.hospitalized[i] = parse_cell(t.rows[i][c_hosp], row);
        raw.hospital_recovered[i] = parse_cell(t.rows[i][c_rec], row);
        raw.deaths[i] = parse_cell(t.rows[i][c_dead], row);
    }
    return raw;
}

struct DerivedFrench {
    ObservedSeries obs;
    std::size_t negative_clamps = 0; // derived home-isolation values clamped up to 0
};

/// Derive the two series the French format lacks. With lag d (days a
/// detected case takes to resolve):
///
///   home(t)   = cases(t) - icu(t) - hospitalized(t) - home(t - d)
///   healed(t) = hospital_recovered(t) + home(t - d)
///
/// where home(t - d) counts as 0 for t < d. A missing operand makes the
/// output missing for that day; a negative derived home count is clamped
/// to 0 (and counted), and the clamped value feeds the recursion.
inline DerivedFrench derive_french(const FrenchRawSeries& raw, std::size_t lag_days = 14) {
    if (!raw.consistent()) throw shape_error("derive_french: ragged input series");
    const std::size_t n = raw.days();
    DerivedFrench out;
    out.obs = ObservedSeries::empty(n, raw.population);
    out.obs.date0 = raw.date0;

    std::vector<std::optional<double>> home(n);
    for (std::size_t t = 0; t < n; ++t) {
        std::optional<double> lagged = 0.0; // below the lag horizon the term is defined as 0
        if (t >= lag_days) lagged = home[t - lag_days];
        if (!raw.cumulative_cases[t] || !raw.icu[t] || !raw.hospitalized[t] || !lagged) {
            home[t] = std::nullopt;
        } else {
            double v = *raw.cumulative_cases[t] - *raw.icu[t] - *raw.hospitalized[t] - *lagged;
            if (v < 0.0) {
                v = 0.0;
                ++out.negative_clamps;
            }
            home[t] = v;
        }
        // healed uses the same lagged term plus the discharge count
        if (raw.hospital_recovered[t] && lagged)
            out.obs.of(Series::H)[t] = *raw.hospital_recovered[t] + *lagged;
    }
    out.obs.of(Series::D) = std::move(home);
    for (std::size_t t = 0; t < n; ++t) {
        out.obs.of(Series::R)[t] = raw.hospitalized[t];
        out.obs.of(Series::T)[t] = raw.icu[t];
        out.obs.of(Series::E)[t] = raw.deaths[t];
    }
    return out;
}

/// Assemble the day-0 state from the first day of the observations:
/// undetected counts start equal to their detected counterparts
/// (I = D, A = R), ICU / healed / deceased are read directly, the
/// cumulative-detected counter starts at the healed count, and S takes the
/// remainder of the population.
inline InitialCondition build_initial_condition(const ObservedSeries& obs) {
    if (obs.days() == 0) throw parse_error("initial condition: empty series");
    if (!(obs.population > 0.0))
        throw domain_error("initial condition: population must be positive");
    const auto need = [&](Series s) {
        const auto v = obs.of(s)[0];
        if (!v)
            throw parse_error(std::string("initial condition: missing day-0 value for series ") +
                              std::string(kSeriesNames[static_cast<std::size_t>(s)]));
        return *v;
    };
    const double d0 = need(Series::D);
    const double r0 = need(Series::R);
    const double t0 = need(Series::T);
    const double h0 = need(Series::H);
    const double e0 = need(Series::E);

    InitialCondition ic;
    ic.population = obs.population;
    ic.z0[Comp::I] = d0;
    ic.z0[Comp::D] = d0;
    ic.z0[Comp::A] = r0;
    ic.z0[Comp::R] = r0;
    ic.z0[Comp::T] = t0;
    ic.z0[Comp::H] = h0;
    ic.z0[Comp::E] = e0;
    const double rest = d0 + d0 + r0 + r0 + t0 + h0 + e0;
    if (rest > obs.population)
        throw domain_error("initial condition: day-0 compartments exceed the population");
    ic.z0[Comp::S] = obs.population - rest;
    ic.h_d0 = h0;
    return ic;
}

/// Canonical JSON form: {"date0": ..., "N": ..., "series": {"D": [...], ...}}
/// with null for missing days. "start_day" appears only when nonzero.
inline std::string to_canonical_json(const ObservedSeries& obs) {
    nlohmann::ordered_json j;
    j["date0"] = obs.date0;
    j["N"] = obs.population;
    if (obs.start_day != 0) j["start_day"] = obs.start_day;
    nlohmann::ordered_json s;
    for (std::size_t i = 0; i < kNumSeries; ++i) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& v : obs.series[i]) {
            if (v)
                arr.push_back(*v);
            else
                arr.push_back(nullptr);
        }
        s[std::string(kSeriesNames[i])] = std::move(arr);
    }
    j["series"] = std::move(s);
    return j.dump(2) + "\n";
}

inline ObservedSeries from_canonical_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw parse_error(std::string("invalid JSON: ") + e.what());
    }
    if (!j.contains("series") || !j.contains("N"))
        throw parse_error("series document needs \"N\" and \"series\"");
    const auto& s = j["series"];
    std::size_t days = 0;
    bool first = true;
    for (std::size_t i = 0; i < kNumSeries; ++i) {
        const std::string name(kSeriesNames[i]);
        if (!s.contains(name)) throw parse_error("series document missing series " + name);
        if (first) {
            days = s[name].size();
            first = false;
        } else if (s[name].size() != days) {
            throw parse_error("series lengths differ in document");
        }
    }
    ObservedSeries obs = ObservedSeries::empty(days, j["N"].get<double>());
    obs.date0 = j.value("date0", std::string());
    obs.start_day = j.value("start_day", std::int64_t{0});
    for (std::size_t i = 0; i < kNumSeries; ++i) {
        const auto& arr = s[std::string(kSeriesNames[i])];
        for (std::size_t k = 0; k < days; ++k)
            if (!arr[k].is_null()) obs.series[i][k] = arr[k].get<double>();
    }
    return obs;
}

inline void save_series_json(const std::string& path, const ObservedSeries& obs) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw parse_error("cannot write file: " + path);
    f << to_canonical_json(obs);
}

inline ObservedSeries load_series_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw parse_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return from_canonical_json(ss.str());
}

} // namespace sidarthe
