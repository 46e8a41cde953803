#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "sidarthe/flatten.hpp"
#include "sidarthe/rates.hpp"

namespace sidarthe {

/// Equality constraints between rates, applied uniformly at every node.
/// Each rate index maps to the group it belongs to; ungrouped rates form
/// singleton groups. Within a group the member with the lowest canonical
/// index is the representative that carries the shared value.
struct TyingMap {
    // groups[g] lists the member rate indices of group g, ascending.
    std::vector<std::vector<std::size_t>> groups;

    static TyingMap none() {
        TyingMap m;
        m.groups.reserve(kNumRates);
        for (std::size_t j = 0; j < kNumRates; ++j) m.groups.push_back({j});
        return m;
    }

    /// The pairings used throughout: beta=delta, xi=kappa, lambda=rho,
    /// eta=zeta.
    static TyingMap standard() {
        TyingMap m = none();
        m.tie({static_cast<std::size_t>(Rate::beta), static_cast<std::size_t>(Rate::delta)});
        m.tie({static_cast<std::size_t>(Rate::xi), static_cast<std::size_t>(Rate::kappa)});
        m.tie({static_cast<std::size_t>(Rate::lambda), static_cast<std::size_t>(Rate::rho)});
        m.tie({static_cast<std::size_t>(Rate::eta), static_cast<std::size_t>(Rate::zeta)});
        return m;
    }

    /// Merge the groups containing the given rate indices into one.
    void tie(const std::vector<std::size_t>& members) {
        if (members.size() < 2) return;
        std::vector<std::size_t> merged;
        std::vector<std::vector<std::size_t>> rest;
        for (auto& g : groups) {
            bool hit = false;
            for (std::size_t j : g)
                for (std::size_t m : members)
                    if (j == m) hit = true;
            if (hit)
                merged.insert(merged.end(), g.begin(), g.end());
            else
                rest.push_back(std::move(g));
        }
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        rest.push_back(std::move(merged));
        groups = std::move(rest);
        canonicalize();
    }

    /// Sort members within groups and groups by representative index.
    void canonicalize() {
        for (auto& g : groups) std::sort(g.begin(), g.end());
        std::sort(groups.begin(), groups.end(),
                  [](const auto& x, const auto& y) { return x.front() < y.front(); });
    }

    /// representative[j] = lowest index in j's group.
    std::array<std::size_t, kNumRates> representatives() const {
        std::array<std::size_t, kNumRates> rep{};
        for (const auto& g : groups)
            for (std::size_t j : g) rep[j] = g.front();
        return rep;
    }
};

/// Replace each member's gradient entry with the sum over its group, per
/// node: tied coordinates move together, so they feel the combined pull.
inline void tie_gradient(FlatParams& g, const TyingMap& map) {
    const std::size_t n = g.n_nodes();
    for (std::size_t i = 0; i < n; ++i) {
        double* s = g.slice(i);
        for (const auto& grp : map.groups) {
            if (grp.size() < 2) continue;
            double sum = 0.0;
            for (std::size_t j : grp) sum += s[j];
            for (std::size_t j : grp) s[j] = sum;
        }
    }
}

/// Overwrite every group member with the representative's value, per node.
/// Idempotent; a no-op for singleton groups.
inline void tie_params(FlatParams& x, const TyingMap& map) {
    const std::size_t n = x.n_nodes();
    for (std::size_t i = 0; i < n; ++i) {
        double* s = x.slice(i);
        for (const auto& grp : map.groups) {
            if (grp.size() < 2) continue;
            const double v = s[grp.front()];
            for (std::size_t j : grp) s[j] = v;
        }
    }
}

} // namespace sidarthe
