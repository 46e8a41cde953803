#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sidarthe/errors.hpp"

namespace sidarthe {

/// The five observed targets, in the order they enter the loss.
enum class Series : std::size_t { D = 0, R = 1, T = 2, H = 3, E = 4 };

inline constexpr std::size_t kNumSeries = 5;
inline constexpr std::array<std::string_view, kNumSeries> kSeriesNames = {"D", "R", "T", "H",
                                                                          "E"};

/// Daily targets with per-day missing values. `start_day` is the day index of
/// entry 0 on the fit clock (0 for a full series; a split shifts it).
/// `date0` is calendar metadata for the dataset's day 0; day indices are what
/// the code computes with.
struct ObservedSeries {
    std::array<std::vector<std::optional<double>>, kNumSeries> series;
    std::int64_t start_day = 0;
    std::string date0;
    double population = 0.0;

    std::size_t days() const { return series[0].size(); }

    std::vector<std::optional<double>>& of(Series s) {
        return series[static_cast<std::size_t>(s)];
    }
    const std::vector<std::optional<double>>& of(Series s) const {
        return series[static_cast<std::size_t>(s)];
    }

    /// Value of series `s` on absolute day `day`, if observed.
    std::optional<double> at(Series s, std::int64_t day) const {
        const auto& v = of(s);
        const std::int64_t k = day - start_day;
        if (k < 0 || k >= static_cast<std::int64_t>(v.size())) return std::nullopt;
        return v[static_cast<std::size_t>(k)];
    }

    /// All five series share one day index.
    bool consistent() const {
        const std::size_t n = series[0].size();
        for (const auto& v : series)
            if (v.size() != n) return false;
        return true;
    }

    static ObservedSeries empty(std::size_t days, double population = 0.0) {
        ObservedSeries o;
        for (auto& v : o.series) v.assign(days, std::nullopt);
        o.population = population;
        return o;
    }
};

/// Contiguous train/validation/test lengths, in days.
struct SplitSpec {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;

    std::size_t total() const { return train + validation + test; }
};

} // namespace sidarthe
