#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dsm/plan.hpp"

namespace dsm {

/// Population-wide RMS slot deviation from preferred plans:
/// sqrt( (1/(n*d)) * sum_a sum_i (s_i - p_i)^2 ). Computed over raw
/// deviations, not the normalized per-agent discomfort.
inline double average_discomfort(const Population& p) {
    if (p.agents.empty()) {
        throw std::invalid_argument("average_discomfort: empty population");
    }
    const std::size_t d = p.slot_count();
    double acc = 0.0;
    for (const AgentState& a : p.agents) {
        for (std::size_t i = 0; i < d; ++i) {
            const double diff = a.selected.slots[i] - a.preferred().slots[i];
            acc += diff * diff;
        }
    }
    return std::sqrt(acc / (static_cast<double>(p.size()) * static_cast<double>(d)));
}

/// Population standard deviation (divisor n) of per-agent discomforts.
inline double unfairness(const std::vector<double>& discomforts) {
    if (discomforts.empty()) {
        throw std::invalid_argument("unfairness: empty input");
    }
    const double n = static_cast<double>(discomforts.size());
    double mean = 0.0;
    for (double v : discomforts) mean += v;
    mean /= n;
    double acc = 0.0;
    for (double v : discomforts) {
        const double diff = v - mean;
        acc += diff * diff;
    }
    return std::sqrt(acc / n);
}

inline std::vector<double> per_agent_discomfort(const Population& p) {
    std::vector<double> out;
    out.reserve(p.size());
    for (const AgentState& a : p.agents) out.push_back(agent_discomfort(a));
    return out;
}

inline std::vector<double> per_agent_comfort(const Population& p) {
    std::vector<double> out;
    out.reserve(p.size());
    for (const AgentState& a : p.agents) out.push_back(agent_comfort(a));
    return out;
}

/// Elementwise after - before. Zero entries mark agents whose comfort
/// did not change (non-participants).
inline std::vector<double> comfort_gain(const std::vector<double>& before,
                                        const std::vector<double>& after) {
    if (before.size() != after.size()) {
        throw std::invalid_argument("comfort_gain: length mismatch");
    }
    std::vector<double> out(before.size());
    for (std::size_t i = 0; i < before.size(); ++i) out[i] = after[i] - before[i];
    return out;
}

/// Per-run metrics bundle.
struct MetricsReport {
    double avg_discomfort = 0.0;
    double unfairness = 0.0;
    double inefficiency = 0.0;
    std::vector<double> per_agent_comfort;
    std::vector<double> comfort_gain;
    double exchange_success_rate = 1.0;
};

}  // namespace dsm
