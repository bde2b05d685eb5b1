#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsm/data_io.hpp"
#include "dsm/exchange.hpp"
#include "dsm/metrics.hpp"
#include "dsm/plan.hpp"
#include "dsm/tree.hpp"

namespace dsm {

namespace detail {

// splitmix64 finalizer; decorrelates sub-seeds derived from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Full configuration of one simulation run. Empty dataset path means
/// the synthetic generator supplies the population.
struct RunConfig {
    std::string dataset;        // directory of agent_<id>.plans, or empty
    std::size_t agents = 1000;
    std::size_t plans = 10;     // k, synthetic generator only
    std::size_t slots = 144;    // d, synthetic generator only
    double flexibility = 0.7;   // synthetic generator only
    double quantum = 1.0;       // synthetic value grid and transfer quantum
    std::size_t levels = 4;     // synthetic slot values in {0..levels} * quantum
    double beta = 0.0;
    std::size_t iterations = 50;
    std::uint64_t seed = 1;
    std::size_t repeats = 10;
    ExchangeMode mode = ExchangeMode::literal;
    double tolerance = 0.0;     // exchange value-matching tolerance
    std::string out;
};

inline nlohmann::json to_json(const RunConfig& c) {
    return nlohmann::json{
        {"dataset", c.dataset},
        {"agents", c.agents},
        {"plans", c.plans},
        {"slots", c.slots},
        {"flexibility", c.flexibility},
        {"quantum", c.quantum},
        {"levels", c.levels},
        {"beta", c.beta},
        {"iterations", c.iterations},
        {"seed", c.seed},
        {"repeats", c.repeats},
        {"mode", c.mode == ExchangeMode::strict ? "strict" : "literal"},
        {"tolerance", c.tolerance},
        {"out", c.out},
    };
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.dataset = j.at("dataset").get<std::string>();
    c.agents = j.at("agents").get<std::size_t>();
    c.plans = j.at("plans").get<std::size_t>();
    c.slots = j.at("slots").get<std::size_t>();
    c.flexibility = j.at("flexibility").get<double>();
    c.quantum = j.at("quantum").get<double>();
    c.levels = j.at("levels").get<std::size_t>();
    c.beta = j.at("beta").get<double>();
    c.iterations = j.at("iterations").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.repeats = j.at("repeats").get<std::size_t>();
    c.mode = j.at("mode").get<std::string>() == "strict" ? ExchangeMode::strict
                                                         : ExchangeMode::literal;
    c.tolerance = j.at("tolerance").get<double>();
    c.out = j.at("out").get<std::string>();
    return c;
}

/// Synthetic population: preferred plans on a shared value grid
/// (multiples of quantum), alternates via the flexibility-driven
/// generator with the same quantum, so exchange value matching works
/// without tolerance. Alternate j uses flexibility * (j / (k-1))^3, a
/// graded ladder with fine rungs near the preferred plan and coarse
/// ones at the top, instead of k-1 equally-distant shuffles.
inline Population synth_population(const RunConfig& c) {
    Population pop;
    for (std::size_t id = 0; id < c.agents; ++id) {
        Rng rng(detail::mix_seed(c.seed, 1000 + id));
        Plan preferred;
        preferred.slots.reserve(c.slots);
        for (std::size_t i = 0; i < c.slots; ++i) {
            preferred.slots.push_back(
                c.quantum * static_cast<double>(rng.next_index(c.levels + 1)));
        }
        // Household willingness to deviate varies mildly around the
        // population-wide flexibility level.
        const double agent_flex =
            c.flexibility * (0.75 + 0.25 * rng.next_real());
        PlanSet set;
        set.preferred_index = 0;
        set.plans.push_back(preferred);
        for (std::size_t j = 1; j < c.plans; ++j) {
            // quadratic ladder: fine-grained rungs near the preferred
            // plan, coarse ones at the top
            const double rung = c.plans > 1 ? static_cast<double>(j) /
                                                  static_cast<double>(c.plans - 1)
                                            : 1.0;
            const double step = agent_flex * rung * rung * rung;
            PlanSet one = generate_plans(preferred, step, 2,
                                         detail::mix_seed(c.seed, 2000 * j + id),
                                         c.quantum);
            set.plans.push_back(std::move(one.plans[1]));
        }
        pop.agents.push_back(make_agent(static_cast<int>(id), std::move(set), c.beta));
    }
    return pop;
}

inline Population make_population(const RunConfig& c) {
    Population pop;
    if (c.dataset.empty()) {
        pop = synth_population(c);
    } else {
        auto [loaded, manifest] = load_dataset(c.dataset, c.agents);
        pop = std::move(loaded);
        for (AgentState& a : pop.agents) a.beta = c.beta;
    }
    return pop;
}

struct RunResult {
    RunConfig config;
    IterationTrace trace;
    MetricsReport pre;   // after coordination, before exchanges
    MetricsReport post;  // after the exchange phase
    std::vector<ExchangeRecord> exchanges;
    ExchangePhaseStats stats;
    Population pre_exchange;  // snapshot for replay analysis
    Population final;
    std::size_t advertisements = 0;
    double participation = 0.0;  // fraction of agents with >= 1 advertisement
};

inline MetricsReport snapshot_metrics(const Population& p) {
    MetricsReport m;
    m.avg_discomfort = average_discomfort(p);
    m.unfairness = unfairness(per_agent_discomfort(p));
    m.inefficiency = inefficiency(global_response(p));
    m.per_agent_comfort = per_agent_comfort(p);
    return m;
}

/// Full pipeline: build population, tree coordination, exchange phase,
/// metrics before and after.
inline RunResult run_single(const RunConfig& c) {
    RunResult r;
    r.config = c;
    Population pop = make_population(c);

    TreeTopology topo = build_tree(pop.size(), detail::mix_seed(c.seed, 1));
    r.trace = run_coordination(pop, topo, c.iterations);

    r.pre = snapshot_metrics(pop);
    r.pre_exchange = pop;

    Blackboard bb(c.tolerance);
    r.advertisements = advertise(pop, bb);
    std::size_t advertisers = 0;
    for (const AgentState& a : pop.agents) {
        for (std::size_t i = 0; i < pop.slot_count(); ++i) {
            if (a.selected.slots[i] != a.preferred().slots[i]) {
                ++advertisers;
                break;
            }
        }
    }
    r.participation =
        static_cast<double>(advertisers) / static_cast<double>(pop.size());

    r.exchanges =
        run_exchange_phase(pop, bb, detail::mix_seed(c.seed, 2), c.mode, &r.stats);

    r.post = snapshot_metrics(pop);
    r.post.exchange_success_rate = r.stats.success_rate();
    r.post.comfort_gain = comfort_gain(r.pre.per_agent_comfort, r.post.per_agent_comfort);
    r.final = std::move(pop);
    return r;
}

inline double mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

inline double positive_fraction(const std::vector<double>& v) {
    std::size_t count = 0;
    for (double x : v) {
        if (x > 0.0) ++count;
    }
    return v.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(v.size());
}

inline nlohmann::json metrics_json(const RunResult& r) {
    return nlohmann::json{
        {"pre",
         {{"avg_discomfort", r.pre.avg_discomfort},
          {"unfairness", r.pre.unfairness},
          {"inefficiency", r.pre.inefficiency},
          {"avg_comfort", mean(r.pre.per_agent_comfort)}}},
        {"post",
         {{"avg_discomfort", r.post.avg_discomfort},
          {"unfairness", r.post.unfairness},
          {"inefficiency", r.post.inefficiency},
          {"avg_comfort", mean(r.post.per_agent_comfort)}}},
        {"mean_comfort_gain", mean(r.post.comfort_gain)},
        {"positive_gain_fraction", positive_fraction(r.post.comfort_gain)},
        {"participation", r.participation},
        {"advertisements", r.advertisements},
        {"exchanges", r.exchanges.size()},
        {"requests_issued", r.stats.requests_issued},
        {"success_rate", r.stats.success_rate()},
        {"sweeps", r.stats.sweeps},
    };
}

/// Writes metrics.json, trace.csv, exchanges.csv and config.json into
/// `out`; returns the paths written.
inline std::vector<std::filesystem::path> save_run(
    const RunResult& r, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    std::vector<std::filesystem::path> written;

    auto open = [&](const char* name) {
        std::ofstream f(out / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (out / name).string());
        written.push_back(out / name);
        return f;
    };

    {
        auto f = open("metrics.json");
        f << metrics_json(r).dump(2) << '\n';
    }
    {
        auto f = open("trace.csv");
        write_trace_csv(r.trace, f);
    }
    {
        auto f = open("exchanges.csv");
        write_exchanges_csv(r.exchanges, f);
    }
    {
        auto f = open("config.json");
        f << to_json(r.config).dump(2) << '\n';
    }
    return written;
}

struct ReplayResult {
    Population population;
    std::size_t applied = 0;
    std::size_t skipped = 0;  // invalidated by omitted predecessors
};

/// Re-applies a subset of logged exchanges on a pre-exchange snapshot.
/// A record applies only when both live values still match the log;
/// anything else is skipped, so conservation survives arbitrary
/// subsetting.
inline ReplayResult replay_exchanges(const Population& pre,
                                     const std::vector<ExchangeRecord>& subset) {
    ReplayResult out;
    out.population = pre;
    for (const ExchangeRecord& r : subset) {
        AgentState& a1 = out.population.agents[static_cast<std::size_t>(r.initiator)];
        AgentState& a2 = out.population.agents[static_cast<std::size_t>(r.acceptor)];
        const std::size_t i = static_cast<std::size_t>(r.slot);
        if (a1.selected.slots[i] != r.initiator_gave ||
            a2.selected.slots[i] != r.acceptor_gave) {
            ++out.skipped;
            continue;
        }
        a1.selected.slots[i] = r.initiator_received;
        a2.selected.slots[i] = r.acceptor_received;
        ++out.applied;
    }
    return out;
}

struct BetaSweepRow {
    double beta = 0.0;
    std::uint64_t seed = 0;
    double mean_comfort_gain = 0.0;
    double participation = 0.0;
    double positive_gain_fraction = 0.0;
    double inefficiency_pre = 0.0;
    double inefficiency_post = 0.0;
    double unfairness_pre = 0.0;
    double unfairness_post = 0.0;
    double success_rate = 1.0;
};

inline BetaSweepRow summarize(const RunResult& r) {
    BetaSweepRow row;
    row.beta = r.config.beta;
    row.seed = r.config.seed;
    row.mean_comfort_gain = mean(r.post.comfort_gain);
    row.participation = r.participation;
    row.positive_gain_fraction = positive_fraction(r.post.comfort_gain);
    row.inefficiency_pre = r.pre.inefficiency;
    row.inefficiency_post = r.post.inefficiency;
    row.unfairness_pre = r.pre.unfairness;
    row.unfairness_post = r.post.unfairness;
    row.success_rate = r.stats.success_rate();
    return row;
}

/// One run per (beta, repeat); repeat i uses seed base_seed + i.
inline std::vector<BetaSweepRow> sweep_beta(const RunConfig& base,
                                            const std::vector<double>& betas) {
    std::vector<BetaSweepRow> rows;
    for (double beta : betas) {
        for (std::size_t rep = 0; rep < base.repeats; ++rep) {
            RunConfig c = base;
            c.beta = beta;
            c.seed = base.seed + rep;
            rows.push_back(summarize(run_single(c)));
        }
    }
    return rows;
}

inline void write_beta_sweep_csv(const std::vector<BetaSweepRow>& rows,
                                 std::ostream& out) {
    out << "beta,seed,mean_comfort_gain,participation,positive_gain_fraction,"
           "inefficiency_pre,inefficiency_post,unfairness_pre,unfairness_post,"
           "success_rate\n";
    for (const BetaSweepRow& r : rows) {
        out << detail::format_double(r.beta) << ',' << r.seed << ','
            << detail::format_double(r.mean_comfort_gain) << ','
            << detail::format_double(r.participation) << ','
            << detail::format_double(r.positive_gain_fraction) << ','
            << detail::format_double(r.inefficiency_pre) << ','
            << detail::format_double(r.inefficiency_post) << ','
            << detail::format_double(r.unfairness_pre) << ','
            << detail::format_double(r.unfairness_post) << ','
            << detail::format_double(r.success_rate) << '\n';
    }
}

struct PopulationSweepRow {
    std::size_t size = 0;
    double fraction = 1.0;
    std::uint64_t seed = 0;
    std::size_t sampled = 0;
    double mean_comfort_gain = 0.0;
};

/// For each population size and sampling fraction, runs the pipeline on
/// a seeded random subset of the first `size` agents.
inline std::vector<PopulationSweepRow> sweep_population(
    const RunConfig& base, const std::vector<std::size_t>& sizes,
    const std::vector<double>& fractions) {
    std::vector<PopulationSweepRow> rows;
    Population full = make_population(base);
    for (std::size_t size : sizes) {
        if (size > full.size()) {
            throw std::invalid_argument("sweep_population: size exceeds dataset");
        }
        for (double fraction : fractions) {
            if (!(fraction > 0.0 && fraction <= 1.0)) {
                throw std::invalid_argument("sweep_population: fraction outside (0,1]");
            }
            for (std::size_t rep = 0; rep < base.repeats; ++rep) {
                const std::uint64_t seed = base.seed + rep;
                const std::size_t sampled = std::max<std::size_t>(
                    1, static_cast<std::size_t>(
                           std::llround(fraction * static_cast<double>(size))));
                std::vector<int> ids(size);
                std::iota(ids.begin(), ids.end(), 0);
                Rng rng(detail::mix_seed(seed, 7 + size));
                rng.shuffle(ids);
                ids.resize(sampled);
                std::sort(ids.begin(), ids.end());

                Population sub;
                for (std::size_t out_id = 0; out_id < ids.size(); ++out_id) {
                    AgentState a = full.agents[static_cast<std::size_t>(ids[out_id])];
                    a.id = static_cast<int>(out_id);
                    a.beta = base.beta;
                    a.selected = a.preferred();
                    sub.agents.push_back(std::move(a));
                }

                TreeTopology topo = build_tree(sub.size(), detail::mix_seed(seed, 1));
                run_coordination(sub, topo, base.iterations);
                const auto comfort_before = per_agent_comfort(sub);
                Blackboard bb(base.tolerance);
                advertise(sub, bb);
                run_exchange_phase(sub, bb, detail::mix_seed(seed, 2), base.mode);
                const auto gain = comfort_gain(comfort_before, per_agent_comfort(sub));

                rows.push_back({size, fraction, seed, sampled, mean(gain)});
            }
        }
    }
    return rows;
}

inline void write_population_sweep_csv(const std::vector<PopulationSweepRow>& rows,
                                       std::ostream& out) {
    out << "size,fraction,seed,sampled,mean_comfort_gain\n";
    for (const PopulationSweepRow& r : rows) {
        out << r.size << ',' << detail::format_double(r.fraction) << ',' << r.seed
            << ',' << r.sampled << ',' << detail::format_double(r.mean_comfort_gain)
            << '\n';
    }
}

struct SubsetReplayRow {
    std::size_t subset_size = 0;
    std::size_t set_index = 0;
    std::uint64_t seed = 0;
    std::size_t applied = 0;
    std::size_t skipped = 0;
    double avg_comfort = 0.0;
};

/// Replays random subsets of a completed run's exchange log from the
/// pre-exchange snapshot and reports the resulting average comfort.
/// Subset sizes beyond the log length are clamped.
inline std::vector<SubsetReplayRow> exchange_subsets(
    const RunResult& run, const std::vector<std::size_t>& sizes,
    std::size_t sets_per_size, std::uint64_t seed) {
    std::vector<SubsetReplayRow> rows;
    const std::size_t log_size = run.exchanges.size();
    for (std::size_t requested : sizes) {
        const std::size_t size = std::min(requested, log_size);
        for (std::size_t set = 0; set < sets_per_size; ++set) {
            Rng rng(detail::mix_seed(seed, 31 * requested + set));
            std::vector<std::size_t> indices(log_size);
            std::iota(indices.begin(), indices.end(), std::size_t{0});
            rng.shuffle(indices);
            indices.resize(size);
            std::sort(indices.begin(), indices.end());  // keep log order

            std::vector<ExchangeRecord> subset;
            subset.reserve(size);
            for (std::size_t idx : indices) subset.push_back(run.exchanges[idx]);

            ReplayResult replay = replay_exchanges(run.pre_exchange, subset);
            rows.push_back({size, set, seed, replay.applied, replay.skipped,
                            mean(per_agent_comfort(replay.population))});
        }
    }
    return rows;
}

inline void write_subset_csv(const std::vector<SubsetReplayRow>& rows,
                             std::ostream& out) {
    out << "subset_size,set_index,seed,applied,skipped,avg_comfort\n";
    for (const SubsetReplayRow& r : rows) {
        out << r.subset_size << ',' << r.set_index << ',' << r.seed << ','
            << r.applied << ',' << r.skipped << ','
            << detail::format_double(r.avg_comfort) << '\n';
    }
}

}  // namespace dsm
