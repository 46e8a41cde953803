#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "sidarthe/errors.hpp"
#include "sidarthe/forecast.hpp"

namespace sidarthe {

struct MapeResult {
    double percent = 0.0;
    std::size_t evaluated = 0; // days that entered the mean
    std::size_t skipped = 0;   // days dropped: missing or zero observation
};

/// Mean absolute percentage error (in percent) over the evaluable days.
/// Days with a missing observation are skipped, and so are days observed
/// as zero (the ratio is undefined there); the skip count is reported.
/// Throws if no day is evaluable.
inline MapeResult mape_detail(const std::vector<double>& pred,
                              const std::vector<std::optional<double>>& obs) {
    if (pred.size() != obs.size()) throw shape_error("mape: length mismatch");
    MapeResult r;
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!obs[i] || *obs[i] == 0.0) {
            ++r.skipped;
            continue;
        }
        sum += std::abs(pred[i] - *obs[i]) / std::abs(*obs[i]);
        ++r.evaluated;
    }
    if (r.evaluated == 0) throw domain_error("mape: no evaluable days (all missing or zero)");
    r.percent = 100.0 * sum / static_cast<double>(r.evaluated);
    return r;
}

inline double mape(const std::vector<double>& pred,
                   const std::vector<std::optional<double>>& obs) {
    return mape_detail(pred, obs).percent;
}

struct ThresholdCount {
    std::size_t num = 0; // evaluable days with relative error <= thr
    std::size_t den = 0; // evaluable days

    double fraction() const {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    }
};

/// Count of evaluable days whose relative error is within `thr` (default
/// 30%). Evaluability and the empty-input error follow mape.
inline ThresholdCount within_threshold(const std::vector<double>& pred,
                                       const std::vector<std::optional<double>>& obs,
                                       double thr = 0.30) {
    if (pred.size() != obs.size()) throw shape_error("within_threshold: length mismatch");
    if (!(thr >= 0.0)) throw domain_error("within_threshold: threshold must be >= 0");
    ThresholdCount c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!obs[i] || *obs[i] == 0.0) continue;
        ++c.den;
        if (std::abs(pred[i] - *obs[i]) / std::abs(*obs[i]) <= thr) ++c.num;
    }
    if (c.den == 0)
        throw domain_error("within_threshold: no evaluable days (all missing or zero)");
    return c;
}

struct SeriesScore {
    std::optional<double> mape_percent; // absent when no day was evaluable
    ThresholdCount within;
    std::size_t skipped = 0;
};

struct ForecastReport {
    std::array<SeriesScore, kNumSeries> per_series;
    double threshold = 0.30;

    const SeriesScore& of(Series s) const { return per_series[static_cast<std::size_t>(s)]; }
};

/// Score a trajectory against observations over the days both cover.
/// `traj` node times are absolute days; `obs` supplies its own start day.
/// A series with no evaluable day gets an empty score instead of an error.
inline ForecastReport evaluate_forecast(const Trajectory& traj, const ObservedSeries& obs,
                                        double thr = 0.30) {
    detail::require_daily(traj.grid, "evaluate_forecast");
    ForecastReport rep;
    rep.threshold = thr;
    for (std::size_t si = 0; si < kNumSeries; ++si) {
        const auto s = static_cast<Series>(si);
        const std::size_t c = series_component(s);
        std::vector<double> pred;
        std::vector<std::optional<double>> tgt;
        for (std::size_t i = 0; i < traj.grid.n_nodes(); ++i) {
            const auto day = static_cast<std::int64_t>(std::llround(traj.grid.node_time(i)));
            const auto o = obs.at(s, day);
            if (!o) continue;
            pred.push_back(pack(traj.states[i])[c]);
            tgt.push_back(o);
        }
        SeriesScore sc;
        bool evaluable = false;
        for (const auto& t : tgt)
            if (t && *t != 0.0) evaluable = true;
        if (evaluable) {
            const MapeResult mr = mape_detail(pred, tgt);
            sc.mape_percent = mr.percent;
            sc.skipped = mr.skipped;
            sc.within = within_threshold(pred, tgt, thr);
        } else {
            sc.skipped = tgt.size();
        }
        rep.per_series[si] = sc;
    }
    return rep;
}

} // namespace sidarthe
