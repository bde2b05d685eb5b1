#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsm/rng.hpp"

namespace dsm {

/// One candidate daily schedule: energy per time slot (kWh per slot).
struct Plan {
    std::vector<double> slots;

    std::size_t size() const { return slots.size(); }

    double total() const {
        double sum = 0.0;
        for (double v : slots) sum += v;
        return sum;
    }

    bool operator==(const Plan&) const = default;
};

/// An agent's feasible plans. All plans carry the same total energy;
/// plans[preferred_index] is the zero-discomfort plan.
struct PlanSet {
    std::vector<Plan> plans;
    std::size_t preferred_index = 0;

    const Plan& preferred() const { return plans[preferred_index]; }
    std::size_t plan_count() const { return plans.size(); }
};

struct AgentState {
    int id = 0;
    PlanSet plan_set;
    Plan selected;  // may leave plan_set after slot exchanges
    double beta = 0.0;
    bool available = true;
    // Normalization for discomfort: max RMSE within the plan set, 1.0
    // when every plan coincides with the preferred one.
    double discomfort_scale = 1.0;

    const Plan& preferred() const { return plan_set.preferred(); }
};

struct Population {
    std::vector<AgentState> agents;

    std::size_t size() const { return agents.size(); }
    std::size_t slot_count() const {
        return agents.empty() ? 0 : agents.front().selected.size();
    }
};

/// Element-wise sum of all selected plans (the global demand profile).
struct GlobalResponse {
    std::vector<double> totals;
};

namespace detail {

inline void require_finite(const Plan& p, const char* what) {
    for (double v : p.slots) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + ": non-finite slot value");
        }
    }
}

inline double rmse(const Plan& a, const Plan& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a.slots[i] - b.slots[i];
        acc += diff * diff;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace detail

/// Normalized deviation of the selected plan from the preferred one:
/// min(1, RMSE / scale). Zero exactly when the plans coincide.
inline double discomfort(const Plan& selected, const Plan& preferred, double scale) {
    if (selected.size() != preferred.size()) {
        throw std::invalid_argument("discomfort: plan dimension mismatch");
    }
    if (selected.size() == 0) {
        throw std::invalid_argument("discomfort: empty plans");
    }
    if (!(scale > 0.0)) {
        throw std::invalid_argument("discomfort: scale must be positive");
    }
    detail::require_finite(selected, "discomfort");
    detail::require_finite(preferred, "discomfort");
    return std::min(1.0, detail::rmse(selected, preferred) / scale);
}

inline double comfort(const Plan& selected, const Plan& preferred, double scale) {
    return 1.0 - discomfort(selected, preferred, scale);
}

inline double agent_discomfort(const AgentState& a) {
    return discomfort(a.selected, a.preferred(), a.discomfort_scale);
}

inline double agent_comfort(const AgentState& a) {
    return 1.0 - agent_discomfort(a);
}

/// Cost of the aggregate demand profile. With no target this is the
/// variance of the totals (deviation from a flat profile); with a
/// target supply profile it is the mean squared mismatch.
inline double inefficiency(const GlobalResponse& g,
                           const std::vector<double>* target = nullptr) {
    const std::size_t d = g.totals.size();
    if (d == 0) {
        throw std::invalid_argument("inefficiency: empty global response");
    }
    if (target != nullptr && target->size() != d) {
        throw std::invalid_argument("inefficiency: target dimension mismatch");
    }
    if (target != nullptr) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double diff = g.totals[i] - (*target)[i];
            acc += diff * diff;
        }
        return acc / static_cast<double>(d);
    }
    double mean = 0.0;
    for (double v : g.totals) mean += v;
    mean /= static_cast<double>(d);
    double acc = 0.0;
    for (double v : g.totals) {
        const double diff = v - mean;
        acc += diff * diff;
    }
    return acc / static_cast<double>(d);
}

inline GlobalResponse global_response(const Population& p) {
    GlobalResponse g;
    g.totals.assign(p.slot_count(), 0.0);
    for (const AgentState& a : p.agents) {
        for (std::size_t i = 0; i < g.totals.size(); ++i) {
            g.totals[i] += a.selected.slots[i];
        }
    }
    return g;
}

/// Total system energy E across all selected plans.
inline double total_energy(const Population& p) {
    double sum = 0.0;
    for (const AgentState& a : p.agents) sum += a.selected.total();
    return sum;
}

/// Generates k candidate plans from a preferred plan. Each alternate is
/// produced by round(flexibility * d) moves, every move transferring a
/// quantum delta of energy between two random slots, so the total is
/// conserved by construction. delta_quantum <= 0 selects the default of
/// 1% of the preferred plan's total energy.
inline PlanSet generate_plans(const Plan& preferred, double flexibility,
                              std::size_t k, std::uint64_t seed,
                              double delta_quantum = 0.0) {
    if (k < 1) {
        throw std::invalid_argument("generate_plans: k must be >= 1");
    }
    if (!(flexibility >= 0.0 && flexibility <= 1.0)) {
        throw std::invalid_argument("generate_plans: flexibility outside [0,1]");
    }
    if (preferred.size() < 2) {
        throw std::invalid_argument("generate_plans: need at least 2 slots");
    }
    detail::require_finite(preferred, "generate_plans");

    const std::size_t d = preferred.size();
    const double delta =
        delta_quantum > 0.0 ? delta_quantum : 0.01 * preferred.total();
    const std::size_t moves =
        static_cast<std::size_t>(std::llround(flexibility * static_cast<double>(d)));

    Rng rng(seed);
    PlanSet set;
    set.preferred_index = 0;
    set.plans.push_back(preferred);
    for (std::size_t p = 1; p < k; ++p) {
        Plan plan = preferred;
        for (std::size_t m = 0; m < moves; ++m) {
            std::size_t src = 0;
            bool found = false;
            for (int attempt = 0; attempt < 100; ++attempt) {
                src = rng.next_index(d);
                if (plan.slots[src] >= delta) {
                    found = true;
                    break;
                }
            }
            if (!found || delta <= 0.0) continue;  // nothing left to move
            std::size_t dst = rng.next_index(d - 1);
            if (dst >= src) ++dst;
            plan.slots[src] -= delta;
            plan.slots[dst] += delta;
        }
        set.plans.push_back(std::move(plan));
    }
    return set;
}

/// Max RMSE of any plan in the set against the preferred plan;
/// 1.0 when all plans coincide.
inline double discomfort_scale(const PlanSet& set) {
    double scale = 0.0;
    for (const Plan& p : set.plans) {
        scale = std::max(scale, detail::rmse(p, set.preferred()));
    }
    return scale > 0.0 ? scale : 1.0;
}

/// Assembles an agent with its selected plan initialized to preferred.
inline AgentState make_agent(int id, PlanSet set, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw std::invalid_argument("make_agent: beta outside [0,1]");
    }
    AgentState a;
    a.id = id;
    a.discomfort_scale = discomfort_scale(set);
    a.selected = set.preferred();
    a.plan_set = std::move(set);
    a.beta = beta;
    return a;
}

}  // namespace dsm
