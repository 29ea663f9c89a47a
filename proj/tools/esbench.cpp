#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "esbandit/bench.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_csv(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        seeds.push_back(std::stoull(tok));
    }
    if (seeds.empty()) throw std::invalid_argument("--seeds-override: no seeds given");
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"esbench: seeded contextual-bandit benchmark runner"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment spec");
    std::string spec_path;
    std::string out_dir;
    std::string seeds_csv;
    bool plot = false;
    int parallel = 1;
    run->add_option("spec", spec_path, "Path to the experiment spec (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory (overrides spec and ESBENCH_OUT)");
    run->add_option("--seeds-override", seeds_csv, "Comma-separated seed list replacing the spec's");
    run->add_flag("--plot", plot, "Write regret_curves.svg");
    run->add_option("--parallel", parallel, "Number of concurrent episodes")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        esb::ExperimentSpec spec = esb::parse_spec(spec_path);

        esb::RunOptions opts;
        if (const char* env_out = std::getenv("ESBENCH_OUT"); env_out && *env_out)
            opts.output_dir = std::string(env_out);
        if (!out_dir.empty()) opts.output_dir = out_dir;  // flag wins over env var
        if (!seeds_csv.empty()) opts.seeds = parse_seed_csv(seeds_csv);
        if (plot) opts.plot = true;
        opts.parallel = parallel;

        esb::SuiteResult result = esb::run_suite(spec, opts);

        std::cout << "experiment: " << spec.name << "\n";
        std::cout << "output: " << result.output_dir << "\n";
        for (const auto& agent : result.agents) {
            const double final_regret =
                agent.mean_cum_regret.empty() ? 0.0 : agent.mean_cum_regret.back();
            const double final_se =
                agent.stderr_cum_regret.empty() ? 0.0 : agent.stderr_cum_regret.back();
            std::cout << agent.name << ": mean cumulative regret " << final_regret << " +/- "
                      << final_se << " (" << agent.wallclock_s << " s)\n";
        }
        for (const auto& failure : result.failures) {
            std::cerr << "episode failed: agent " << failure.agent << " seed " << failure.seed
                      << ": " << failure.message << "\n";
        }
        return result.failures.empty() ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
