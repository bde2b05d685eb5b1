#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dsm/plan.hpp"
#include "dsm/rng.hpp"

namespace dsm {

/// Balanced binary tree over the agent population. Agents occupy heap
/// positions 0..n-1 (position 0 is the root); the id at each position
/// comes from a seeded shuffle.
struct TreeTopology {
    std::map<int, int> parent;                 // absent for the root
    std::map<int, std::vector<int>> children;  // ordered, at most 2 each
    std::map<int, int> levels;                 // root = 1
    std::vector<int> bottom_up_order;          // deepest positions first

    int root = 0;
    int max_level = 1;

    std::size_t size() const { return levels.size(); }
};

inline TreeTopology build_tree(std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw std::invalid_argument("build_tree: n must be >= 1");
    }
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(seed);
    rng.shuffle(ids);

    TreeTopology topo;
    topo.root = ids[0];
    for (std::size_t pos = 0; pos < n; ++pos) {
        const int id = ids[pos];
        int level = 1;
        for (std::size_t q = pos; q > 0; q = (q - 1) / 2) ++level;
        topo.levels[id] = level;
        topo.max_level = std::max(topo.max_level, level);
        topo.children[id];  // ensure the entry exists for leaves
        if (pos > 0) {
            const int par = ids[(pos - 1) / 2];
            topo.parent[id] = par;
            topo.children[par].push_back(id);
        }
    }
    topo.bottom_up_order.reserve(n);
    for (std::size_t pos = n; pos > 0; --pos) {
        topo.bottom_up_order.push_back(ids[pos - 1]);
    }
    return topo;
}

/// Per-iteration trace of the coordination phase.
struct IterationTrace {
    std::vector<double> global_cost;     // inefficiency of g per iteration
    std::vector<double> avg_discomfort;  // RMS slot deviation per iteration
    std::vector<std::vector<int>> selections;  // plan index per agent

    std::size_t iterations() const { return global_cost.size(); }
};

/// Picks the plan index minimizing the beta-weighted objective
/// (1-beta) * f_I(context + plan) + beta * f_D(plan). Ties go to the
/// lowest index. The context is the aggregate of all other agents'
/// current selections.
inline std::size_t select_plan(const AgentState& agent,
                               const std::vector<double>& context, double beta) {
    const std::size_t d = agent.preferred().size();
    if (context.size() != d) {
        throw std::invalid_argument("select_plan: context dimension mismatch");
    }
    GlobalResponse candidate;
    candidate.totals.resize(d);
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < agent.plan_set.plan_count(); ++s) {
        const Plan& plan = agent.plan_set.plans[s];
        for (std::size_t i = 0; i < d; ++i) {
            candidate.totals[i] = context[i] + plan.slots[i];
        }
        const double cost =
            (1.0 - beta) * inefficiency(candidate) +
            beta * discomfort(plan, agent.preferred(), agent.discomfort_scale);
        if (cost < best_cost) {
            best_cost = cost;
            best = s;
        }
    }
    return best;
}

namespace detail {

inline double cost_with(const std::vector<double>& context, const Plan& plan) {
    GlobalResponse g;
    g.totals.resize(context.size());
    for (std::size_t i = 0; i < context.size(); ++i) {
        g.totals[i] = context[i] + plan.slots[i];
    }
    return inefficiency(g);
}

}  // namespace detail

/// Runs the iterative plan-selection phase. Every agent starts on its
/// preferred plan. Each iteration walks the tree bottom-up: an agent
/// re-selects against the current aggregate minus its own contribution,
/// and the new choice is kept only when it does not increase the global
/// inefficiency cost. The refreshed global response is then broadcast
/// top-down (here: recomputed canonically and shared). Final selections
/// are written back into the population.
inline IterationTrace run_coordination(Population& p, const TreeTopology& topo,
                                       std::size_t iterations) {
    if (iterations < 1) {
        throw std::invalid_argument("run_coordination: iterations must be >= 1");
    }
    if (topo.size() != p.size()) {
        throw std::invalid_argument("run_coordination: topology/population size mismatch");
    }
    const std::size_t n = p.size();
    const std::size_t d = p.slot_count();

    std::vector<std::size_t> selection(n);
    for (std::size_t a = 0; a < n; ++a) {
        selection[a] = p.agents[a].plan_set.preferred_index;
        p.agents[a].selected = p.agents[a].preferred();
    }

    auto canonical_g = [&]() {
        GlobalResponse g;
        g.totals.assign(d, 0.0);
        for (std::size_t a = 0; a < n; ++a) {
            const Plan& plan = p.agents[a].plan_set.plans[selection[a]];
            for (std::size_t i = 0; i < d; ++i) g.totals[i] += plan.slots[i];
        }
        return g;
    };
    auto deviation_rms = [&]() {
        double acc = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            const Plan& sel = p.agents[a].plan_set.plans[selection[a]];
            const Plan& pref = p.agents[a].preferred();
            for (std::size_t i = 0; i < d; ++i) {
                const double diff = sel.slots[i] - pref.slots[i];
                acc += diff * diff;
            }
        }
        return std::sqrt(acc / (static_cast<double>(n) * static_cast<double>(d)));
    };

    IterationTrace trace;
    GlobalResponse g = canonical_g();
    double prev_cost = std::numeric_limits<double>::infinity();

    std::vector<double> context(d);
    for (std::size_t it = 0; it < iterations; ++it) {
        const std::vector<std::size_t> before = selection;

        // Bottom-up pass: leaves first, root last. g carries the new
        // selections of already-processed agents and the previous
        // selections of everyone else.
        for (int id : topo.bottom_up_order) {
            AgentState& agent = p.agents[static_cast<std::size_t>(id)];
            const Plan& current = agent.plan_set.plans[selection[id]];
            for (std::size_t i = 0; i < d; ++i) {
                context[i] = g.totals[i] - current.slots[i];
            }
            const std::size_t choice = select_plan(agent, context, agent.beta);
            if (choice == selection[id]) continue;
            const Plan& candidate = agent.plan_set.plans[choice];
            // Monotonicity guard: keep the reselection only if the
            // global cost does not go up.
            if (detail::cost_with(context, candidate) >
                detail::cost_with(context, current)) {
                continue;
            }
            for (std::size_t i = 0; i < d; ++i) {
                g.totals[i] += candidate.slots[i] - current.slots[i];
            }
            selection[id] = choice;
        }

        // Top-down broadcast: the canonical aggregate (summed in agent
        // id order) becomes the shared global response.
        g = canonical_g();
        double cost = inefficiency(g);
        if (cost > prev_cost) {
            // Incremental float drift produced an uptick; discard the
            // whole pass and keep the previous state.
            selection = before;
            g = canonical_g();
            cost = inefficiency(g);
        }
        prev_cost = std::min(prev_cost, cost);

        trace.global_cost.push_back(cost);
        trace.avg_discomfort.push_back(deviation_rms());
        std::vector<int> row(n);
        for (std::size_t a = 0; a < n; ++a) row[a] = static_cast<int>(selection[a]);
        trace.selections.push_back(std::move(row));
    }

    for (std::size_t a = 0; a < n; ++a) {
        p.agents[a].selected = p.agents[a].plan_set.plans[selection[a]];
    }
    return trace;
}

}  // namespace dsm
