#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "esbandit/engine.hpp"
#include "esbandit/envs.hpp"

namespace esb {

struct EnvironmentSpec {
    RewardKind kind = RewardKind::Linear;
    int K = 50;
    int d = 20;
    double noise_sigma = 0.5;
    double theta_norm = 1.0;
};

struct AgentSpec {
    std::string name;
    AgentConfig config;
};

struct ExperimentSpec {
    std::string name;
    EnvironmentSpec environment;
    long horizon = 1;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "out";
    bool plot = false;
    std::vector<AgentSpec> agents;

    void validate() const;  // throws std::invalid_argument naming the field
};

// Strict parsing: unknown keys are errors; validation failures name the field.
ExperimentSpec parse_spec(const std::string& path);
ExperimentSpec parse_spec_json(const nlohmann::json& j);
nlohmann::json serialize_spec(const ExperimentSpec& spec);

struct RunOptions {
    std::optional<std::string> output_dir;  // overrides the spec
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<bool> plot;
    int parallel = 1;  // concurrent episodes
};

struct EpisodeFailure {
    std::string agent;
    std::uint64_t seed = 0;
    std::string message;
};

struct AgentSummary {
    std::string name;
    std::vector<double> mean_cum_regret;   // index t-1
    std::vector<double> stderr_cum_regret; // sample std / sqrt(#seeds)
    double wallclock_s = 0.0;
};

struct SuiteResult {
    std::vector<AgentSummary> agents;
    std::vector<EpisodeFailure> failures;
    std::vector<std::string> trace_paths;
    std::string output_dir;
};

// One episode per (agent, seed); traces, summary, and optionally a plot are
// written under the output directory. Episode failures are recorded and the
// remaining episodes still run.
SuiteResult run_suite(const ExperimentSpec& spec, const RunOptions& options = {});

// Plain-text trace with columns round,arm,inst_regret,cum_regret.
void write_trace(const RegretTrace& trace, const std::string& path);
RegretTrace read_trace(const std::string& path);

// Columns agent,t,mean_cum_regret,stderr,wallclock_s.
void write_summary(const SuiteResult& result, const std::string& path);

// Static SVG: one polyline per agent plus a shaded +/- stderr band;
// byte-deterministic given identical input.
void emit_plot(const SuiteResult& result, const std::string& path);

}  // namespace esb
