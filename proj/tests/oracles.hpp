#pragma once

// Independent brute-force oracles for small instances. These
// deliberately recompute everything from first principles instead of
// calling the library's optimized paths.

#include <cmath>
#include <cstddef>
#include <vector>

#include "dsm/exchange.hpp"
#include "dsm/plan.hpp"

namespace oracle {

inline double variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(v.size());
}

// Global inefficiency of one joint selection, summing plans in agent
// id order (the library's canonical order).
inline double joint_cost(const dsm::Population& p,
                         const std::vector<std::size_t>& selection) {
    const std::size_t d = p.slot_count();
    std::vector<double> g(d, 0.0);
    for (std::size_t a = 0; a < p.size(); ++a) {
        const dsm::Plan& plan = p.agents[a].plan_set.plans[selection[a]];
        for (std::size_t i = 0; i < d; ++i) g[i] += plan.slots[i];
    }
    return variance(g);
}

// Every achievable global cost over all k^n joint selections.
inline std::vector<double> enumerate_joint_costs(const dsm::Population& p) {
    std::vector<double> costs;
    std::vector<std::size_t> selection(p.size(), 0);
    while (true) {
        costs.push_back(joint_cost(p, selection));
        std::size_t pos = 0;
        while (pos < p.size()) {
            if (++selection[pos] < p.agents[pos].plan_set.plan_count()) break;
            selection[pos] = 0;
            ++pos;
        }
        if (pos == p.size()) break;
    }
    return costs;
}

// True when some ordered pair of agents could still complete a slot
// exchange under the literal acceptance rule.
inline bool admissible_exchange_exists(const dsm::Population& p,
                                       double tolerance = 0.0,
                                       bool strict = false) {
    const std::size_t d = p.slot_count();
    for (const dsm::AgentState& a1 : p.agents) {
        for (std::size_t i = 0; i < d; ++i) {
            const double held = a1.selected.slots[i];
            const double desired = a1.preferred().slots[i];
            if (held == desired) continue;
            for (const dsm::AgentState& a2 : p.agents) {
                if (a2.id == a1.id) continue;
                const double offer = a2.selected.slots[i];
                if (std::abs(offer - desired) > tolerance) continue;
                if (std::abs(offer - desired) >= std::abs(held - desired)) continue;
                if (offer == a2.preferred().slots[i]) continue;  // acceptor declines
                if (strict) {
                    dsm::Plan trial = a2.selected;
                    trial.slots[i] = held;
                    if (dsm::comfort(trial, a2.preferred(), a2.discomfort_scale) <
                        dsm::agent_comfort(a2)) {
                        continue;
                    }
                }
                return true;
            }
        }
    }
    return false;
}

}  // namespace oracle
