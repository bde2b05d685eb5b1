#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsm/exchange.hpp"
#include "dsm/metrics.hpp"
#include "dsm/plan.hpp"
#include "dsm/tree.hpp"

namespace dsm {

struct DatasetManifest {
    std::filesystem::path root;
    std::size_t n = 0;  // agents discovered (after any limit)
    std::size_t d = 0;  // slots per plan
    std::size_t k = 0;  // plans per agent
};

namespace detail {

// Shortest representation that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        double parsed = 0.0;
        std::sscanf(buf, "%lf", &parsed);
        if (parsed == v) break;
    }
    return buf;
}

inline double parse_double(std::string_view text, const std::string& where) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw std::runtime_error(where + ": bad numeric value '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace detail

/// Parses one `<score>:<v1>,<v2>,...` line of an agent plan file.
inline std::pair<double, Plan> parse_plan_line(const std::string& line,
                                               const std::string& where) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
        throw std::runtime_error(where + ": missing ':' separator");
    }
    const double score = detail::parse_double(
        std::string_view(line).substr(0, colon), where);
    Plan plan;
    std::size_t start = colon + 1;
    while (start <= line.size()) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) comma = line.size();
        plan.slots.push_back(detail::parse_double(
            std::string_view(line).substr(start, comma - start), where));
        start = comma + 1;
    }
    for (double v : plan.slots) {
        if (v < 0.0) throw std::runtime_error(where + ": negative slot value");
    }
    return {score, plan};
}

/// Reads one agent file; the minimum-score line (first on ties) becomes
/// the preferred plan.
inline PlanSet load_agent_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw std::runtime_error("cannot open " + file.string());
    }
    PlanSet set;
    std::vector<double> scores;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = file.string() + ":" + std::to_string(lineno);
        auto [score, plan] = parse_plan_line(line, where);
        if (!set.plans.empty() && plan.size() != set.plans.front().size()) {
            throw std::runtime_error(where + ": slot count differs from previous lines");
        }
        scores.push_back(score);
        set.plans.push_back(std::move(plan));
    }
    if (set.plans.empty()) {
        throw std::runtime_error(file.string() + ": no plans");
    }
    set.preferred_index = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] < scores[set.preferred_index]) set.preferred_index = i;
    }
    const double ref_total = set.preferred().total();
    for (const Plan& p : set.plans) {
        const double tol = 1e-9 * std::max(1.0, std::abs(ref_total));
        if (std::abs(p.total() - ref_total) > tol) {
            throw std::runtime_error(file.string() + ": plans disagree on total energy");
        }
    }
    return set;
}

/// Loads `agent_<id>.plans` files from a directory into a Population,
/// lowest ids first. Every agent's selected plan starts at its
/// preferred plan; betas are assigned by the caller.
inline std::pair<Population, DatasetManifest> load_dataset(
    const std::filesystem::path& dir,
    std::optional<std::size_t> limit = std::nullopt) {
    if (!std::filesystem::is_directory(dir)) {
        throw std::runtime_error("dataset directory not found: " + dir.string());
    }
    std::vector<int> ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("agent_", 0) != 0) continue;
        const auto dot = name.find(".plans");
        if (dot == std::string::npos) continue;
        ids.push_back(std::stoi(name.substr(6, dot - 6)));
    }
    std::sort(ids.begin(), ids.end());
    if (limit && *limit < ids.size()) ids.resize(*limit);
    if (ids.empty()) {
        throw std::runtime_error("no agent_<id>.plans files in " + dir.string());
    }

    Population pop;
    DatasetManifest manifest;
    manifest.root = dir;
    for (std::size_t out_id = 0; out_id < ids.size(); ++out_id) {
        const auto file = dir / ("agent_" + std::to_string(ids[out_id]) + ".plans");
        PlanSet set = load_agent_file(file);
        if (out_id == 0) {
            manifest.d = set.plans.front().size();
            manifest.k = set.plan_count();
        } else {
            if (set.plans.front().size() != manifest.d) {
                throw std::runtime_error(file.string() + ": slot count differs across agents");
            }
            if (set.plan_count() != manifest.k) {
                throw std::runtime_error(file.string() + ": plan count differs across agents");
            }
        }
        pop.agents.push_back(make_agent(static_cast<int>(out_id), std::move(set), 0.0));
    }
    manifest.n = pop.size();
    return {pop, manifest};
}

/// Writes a population's plan sets back out in the dataset format.
/// Scores are the normalized discomfort of each plan (preferred = 0).
inline void write_dataset(const Population& p, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const AgentState& a : p.agents) {
        std::ofstream out(dir / ("agent_" + std::to_string(a.id) + ".plans"));
        for (const Plan& plan : a.plan_set.plans) {
            out << detail::format_double(
                discomfort(plan, a.preferred(), a.discomfort_scale));
            out << ':';
            for (std::size_t i = 0; i < plan.size(); ++i) {
                if (i > 0) out << ',';
                out << detail::format_double(plan.slots[i]);
            }
            out << '\n';
        }
    }
}

inline void write_trace_csv(const IterationTrace& trace, std::ostream& out) {
    out << "iteration,global_cost,avg_discomfort\n";
    for (std::size_t i = 0; i < trace.iterations(); ++i) {
        out << i << ',' << detail::format_double(trace.global_cost[i]) << ','
            << detail::format_double(trace.avg_discomfort[i]) << '\n';
    }
}

inline void write_exchanges_csv(const std::vector<ExchangeRecord>& log,
                                std::ostream& out) {
    out << "initiator,acceptor,slot,initiator_gave,initiator_received,"
           "initiator_comfort_delta,acceptor_comfort_delta,sweep\n";
    for (const ExchangeRecord& r : log) {
        out << r.initiator << ',' << r.acceptor << ',' << r.slot << ','
            << detail::format_double(r.initiator_gave) << ','
            << detail::format_double(r.initiator_received) << ','
            << detail::format_double(r.initiator_comfort_delta) << ','
            << detail::format_double(r.acceptor_comfort_delta) << ','
            << r.sweep << '\n';
    }
}

inline std::vector<ExchangeRecord> read_exchanges_csv(std::istream& in) {
    std::vector<ExchangeRecord> log;
    std::string line;
    std::getline(in, line);  // header
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 8) {
            throw std::runtime_error("exchanges.csv line " + std::to_string(lineno) +
                                     ": expected 8 fields");
        }
        ExchangeRecord r;
        r.initiator = std::stoi(fields[0]);
        r.acceptor = std::stoi(fields[1]);
        r.slot = std::stoi(fields[2]);
        r.initiator_gave = detail::parse_double(fields[3], "exchanges.csv");
        r.initiator_received = detail::parse_double(fields[4], "exchanges.csv");
        r.acceptor_gave = r.initiator_received;
        r.acceptor_received = r.initiator_gave;
        r.initiator_comfort_delta = detail::parse_double(fields[5], "exchanges.csv");
        r.acceptor_comfort_delta = detail::parse_double(fields[6], "exchanges.csv");
        r.sweep = std::stoi(fields[7]);
        log.push_back(r);
    }
    return log;
}

}  // namespace dsm
