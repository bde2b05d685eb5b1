// Command-line experiment runner for the demand-side-management
// simulator: single runs, beta sweeps, population sweeps, exchange-log
// subset replay and synthetic dataset generation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsm/experiment.hpp"

namespace {

void apply_env_seed(dsm::RunConfig& config) {
    if (const char* env = std::getenv("DSM_SEED")) {
        config.seed = std::strtoull(env, nullptr, 10);
    }
}

void add_common_flags(CLI::App* cmd, dsm::RunConfig& config, std::string& mode) {
    cmd->add_option("--dataset", config.dataset,
                    "Directory of agent_<id>.plans files (omit for synthetic data)");
    cmd->add_option("--agents", config.agents, "Number of agents (n)");
    cmd->add_option("--plans", config.plans, "Plans per agent (k, synthetic)");
    cmd->add_option("--slots", config.slots, "Slots per plan (d, synthetic)");
    cmd->add_option("--flexibility", config.flexibility,
                    "Plan generator flexibility in [0,1] (synthetic)");
    cmd->add_option("--quantum", config.quantum,
                    "Energy quantum for the synthetic value grid");
    cmd->add_option("--levels", config.levels,
                    "Synthetic slot values span {0..levels} * quantum");
    cmd->add_option("--beta", config.beta, "Behavior weight in [0,1]");
    cmd->add_option("--iterations", config.iterations, "Coordination iterations");
    cmd->add_option("--seed", config.seed, "Base RNG seed (DSM_SEED overrides)");
    cmd->add_option("--repeats", config.repeats, "Seeded repeats per configuration");
    cmd->add_option("--mode", mode, "Exchange acceptance rule: literal|strict")
        ->check(CLI::IsMember({"literal", "strict"}));
    cmd->add_option("--tolerance", config.tolerance,
                    "Exchange value-matching tolerance (0 = exact)");
    cmd->add_option("--out", config.out, "Output directory");
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized demand-side management simulator"};
    app.require_subcommand(1);

    dsm::RunConfig config;
    config.out = "out";
    std::string mode = "literal";
    std::string betas_arg = "0,0.25,0.5,0.75";
    std::string sizes_arg = "200,400,600,800,1000";
    std::string fractions_arg = "0.2,0.4,0.6,0.8";
    std::string subset_sizes_arg = "100,200,300,400,500,600,700,800,900";
    std::size_t sets_per_size = 5;

    auto* run = app.add_subcommand("run", "Run coordination + slot exchange once");
    add_common_flags(run, config, mode);

    auto* sweep_beta = app.add_subcommand(
        "sweep-beta", "Run the pipeline across beta values, with repeats");
    add_common_flags(sweep_beta, config, mode);
    sweep_beta->add_option("--betas", betas_arg, "Comma-separated beta values");

    auto* sweep_pop = app.add_subcommand(
        "sweep-pop", "Run the pipeline across population sizes and sample fractions");
    add_common_flags(sweep_pop, config, mode);
    sweep_pop->add_option("--sizes", sizes_arg, "Comma-separated population sizes");
    sweep_pop->add_option("--fractions", fractions_arg,
                          "Comma-separated sampling fractions in (0,1]");

    auto* subsets = app.add_subcommand(
        "exchange-subsets",
        "Replay random subsets of a completed run's exchange log");
    add_common_flags(subsets, config, mode);
    subsets->add_option("--sizes", subset_sizes_arg, "Comma-separated subset sizes");
    subsets->add_option("--sets-per-size", sets_per_size, "Random sets per size");

    auto* gen = app.add_subcommand(
        "gen-plans", "Write a synthetic dataset in agent_<id>.plans format");
    add_common_flags(gen, config, mode);

    CLI11_PARSE(app, argc, argv);
    apply_env_seed(config);
    config.mode = mode == "strict" ? dsm::ExchangeMode::strict
                                   : dsm::ExchangeMode::literal;

    auto parse_list = [](const std::string& arg) {
        std::vector<double> out;
        std::stringstream ss(arg);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
        return out;
    };

    try {
        const std::filesystem::path out_dir = config.out;
        if (run->parsed()) {
            dsm::RunResult result = dsm::run_single(config);
            dsm::save_run(result, out_dir);
            std::cout << dsm::metrics_json(result).dump(2) << '\n';
        } else if (sweep_beta->parsed()) {
            auto rows = dsm::sweep_beta(config, parse_list(betas_arg));
            auto f = open_out(out_dir / "beta_sweep.csv");
            dsm::write_beta_sweep_csv(rows, f);
            std::cout << "wrote " << (out_dir / "beta_sweep.csv").string() << '\n';
        } else if (sweep_pop->parsed()) {
            std::vector<std::size_t> sizes;
            for (double v : parse_list(sizes_arg)) {
                sizes.push_back(static_cast<std::size_t>(v));
            }
            auto rows = dsm::sweep_population(config, sizes, parse_list(fractions_arg));
            auto f = open_out(out_dir / "population_sweep.csv");
            dsm::write_population_sweep_csv(rows, f);
            std::cout << "wrote " << (out_dir / "population_sweep.csv").string() << '\n';
        } else if (subsets->parsed()) {
            dsm::RunResult result = dsm::run_single(config);
            std::vector<std::size_t> sizes;
            for (double v : parse_list(subset_sizes_arg)) {
                sizes.push_back(static_cast<std::size_t>(v));
            }
            for (std::size_t s : sizes) {
                if (s > result.exchanges.size()) {
                    std::cerr << "warning: subset size " << s << " exceeds log length "
                              << result.exchanges.size() << ", clamping\n";
                }
            }
            auto rows = dsm::exchange_subsets(result, sizes, sets_per_size, config.seed);
            auto f = open_out(out_dir / "exchange_subsets.csv");
            dsm::write_subset_csv(rows, f);
            std::cout << "wrote " << (out_dir / "exchange_subsets.csv").string() << '\n';
        } else if (gen->parsed()) {
            dsm::Population pop = dsm::synth_population(config);
            dsm::write_dataset(pop, out_dir);
            std::cout << "wrote " << pop.size() << " agent files to " << out_dir.string()
                      << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
