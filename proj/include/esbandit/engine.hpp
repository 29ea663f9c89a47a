#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "esbandit/envs.hpp"
#include "esbandit/glm.hpp"
#include "esbandit/linalg.hpp"
#include "esbandit/neural.hpp"
#include "esbandit/rng.hpp"

namespace esb {

enum class AgentVariant { LinES, GlmES, NeuralES, LinUCB, LinTS, UniformRandom };

AgentVariant agent_variant_from_string(const std::string& s);
std::string to_string(AgentVariant v);

struct OptimizerConfig {
    int iters = 100;
    double step = 0.01;
};

// Restart schedule T_i = floor(t0 * b^i) for the anytime wrapper.
struct DoublingSchedule {
    long t0 = 100;
    double b = (3.0 + std::sqrt(5.0)) / 2.0;
};

// All T_i <= horizon, strictly increasing.
std::vector<long> doubling_boundaries(const DoublingSchedule& schedule, long horizon);

struct AgentConfig {
    AgentVariant variant = AgentVariant::LinES;
    int m = 10;                // ensemble size
    double lambda = 1.0;       // regularization
    double sigma_r = 0.1;      // reward-perturbation std dev
    int tau = 0;               // warm-up rounds
    OptimizerConfig optimizer;

    // Neural-ES network shape.
    int net_width = 20;
    int net_depth = 3;

    // Baseline knobs: UCB exploration width, TS posterior scale.
    double ucb_width = 1.0;
    double ts_scale = 1.0;

    // Refit GLM/neural models from the previous round's parameters.
    bool warm_start = true;

    // Link assumed known by GLM-ES.
    LinkKind glm_link = LinkKind::Logistic;

    // Doubling-trick anytime wrapper.
    bool anytime = false;
    DoublingSchedule schedule;

    void validate() const;
};

class Agent {
public:
    virtual ~Agent() = default;

    // Arm for the next round; forced during a warm-up phase.
    virtual int act() = 0;
    virtual void observe(int arm, double reward) = 0;

    // Total perturbation draws consumed so far (ES agents only).
    virtual long perturbation_draws() const { return 0; }
    // Ensemble index j_t used by the most recent non-warm-up act(); -1 otherwise.
    virtual int last_model_index() const { return -1; }
    virtual std::vector<long> restarts() const { return {}; }
};

// Lin-ES: shared Gram matrix, per-model perturbed b-vectors, closed-form
// ridge refit via rank-one inverse updates.
class LinEsAgent : public Agent {
public:
    LinEsAgent(const AgentConfig& config, const ArmSet& arms, std::uint64_t seed);

    int act() override;
    void observe(int arm, double reward) override;
    long perturbation_draws() const override { return draws_; }
    int last_model_index() const override { return last_model_; }

    // Arm choice of model j on the current state (exposed for tests).
    int greedy_arm(int j) const;
    Eigen::VectorXd model_params(int j) const { return theta_.col(j); }

private:
    Eigen::MatrixXd features_;  // K x d
    CovarianceState cov_;
    Eigen::MatrixXd b_;        // d x m
    Eigen::MatrixXd theta_;    // d x m
    double sigma_r_;
    int m_;
    Rng model_pick_rng_;
    std::vector<Rng> perturb_rngs_;
    long draws_ = 0;
    int last_model_ = -1;
};

// GLM-ES: G-optimal warm-up, per-model perturbed targets, gradient-descent
// MLE refit each round. The refit minimizes the sample-averaged NLL, whose
// minimizer equals that of the summed NLL, so the configured step size stays
// stable as the history grows.
class GlmEsAgent : public Agent {
public:
    GlmEsAgent(const AgentConfig& config, const ArmSet& arms, std::uint64_t seed,
               LinkFunction link);

    int act() override;
    void observe(int arm, double reward) override;
    long perturbation_draws() const override { return draws_; }
    int last_model_index() const override { return last_model_; }

    bool in_warmup() const { return t_ < static_cast<long>(warmup_.size()); }
    Eigen::VectorXd model_params(int j) const { return theta_.col(j); }
    const std::vector<std::vector<double>>& perturbed_targets() const { return targets_; }

private:
    void refit();

    Eigen::MatrixXd features_;    // K x d
    Eigen::MatrixXd features_t_;  // d x K
    LinkFunction link_;
    Eigen::VectorXd counts_;      // pulls per arm
    Eigen::MatrixXd b_;           // d x m, sum_l x_l (y_l + z_l^j)
    Eigen::MatrixXd theta_;       // d x m
    std::vector<std::vector<double>> targets_;  // per-model perturbed reward history
    std::vector<int> warmup_;
    OptimizerConfig opt_;
    double lambda_;
    double sigma_r_;
    int m_;
    bool warm_start_;
    long t_ = 0;
    long samples_ = 0;
    Rng model_pick_rng_;
    std::vector<Rng> perturb_rngs_;
    long draws_ = 0;
    int last_model_ = -1;
};

// Neural-ES: one ReLU network per model with symmetric initialization,
// pull-each-arm-once warm-up, gradient-descent refit on the per-model
// perturbed history (sample-averaged loss, see GlmEsAgent).
class NeuralEsAgent : public Agent {
public:
    NeuralEsAgent(const AgentConfig& config, const ArmSet& arms, std::uint64_t seed);

    int act() override;
    void observe(int arm, double reward) override;
    long perturbation_draws() const override { return draws_; }
    int last_model_index() const override { return last_model_; }

    bool in_warmup() const { return t_ < tau_; }
    const NetworkParams& model(int j) const { return nets_[j]; }
    const NetworkParams& model_init(int j) const { return inits_[j]; }

private:
    Eigen::MatrixXd arms_t_;  // d x K
    Eigen::VectorXd counts_;
    std::vector<Eigen::VectorXd> target_sums_;    // per model, K
    std::vector<Eigen::VectorXd> target_sqsums_;  // per model, K
    std::vector<std::vector<double>> targets_;    // per-model perturbed reward history
    std::vector<NetworkParams> nets_;
    std::vector<NetworkParams> inits_;
    std::vector<Eigen::MatrixXd> grad_ws_;  // gradient workspace
    OptimizerConfig opt_;
    double lambda_;
    double sigma_r_;
    int m_;
    int tau_;
    long t_ = 0;
    long samples_ = 0;
    Rng model_pick_rng_;
    std::vector<Rng> perturb_rngs_;
    long draws_ = 0;
    int last_model_ = -1;
};

// Ridge regression with an upper confidence bonus ucb_width * ||x||_{A^-1}.
// Width 0 reduces to greedy ridge.
class LinUcbAgent : public Agent {
public:
    LinUcbAgent(const AgentConfig& config, const ArmSet& arms, std::uint64_t seed);
    int act() override;
    void observe(int arm, double reward) override;

private:
    Eigen::MatrixXd features_;
    CovarianceState cov_;
    Eigen::VectorXd b_;
    double width_;
};

// Posterior sample theta_hat + ts_scale * A^{-1/2} xi, xi ~ N(0, I).
// Scale 0 reduces to greedy ridge.
class LinTsAgent : public Agent {
public:
    LinTsAgent(const AgentConfig& config, const ArmSet& arms, std::uint64_t seed);
    int act() override;
    void observe(int arm, double reward) override;

private:
    Eigen::MatrixXd features_;
    CovarianceState cov_;
    Eigen::VectorXd b_;
    double scale_;
    Rng rng_;
};

class UniformRandomAgent : public Agent {
public:
    UniformRandomAgent(const ArmSet& arms, std::uint64_t seed);
    int act() override;
    void observe(int, double) override {}

private:
    int num_arms_;
    Rng rng_;
};

// Doubling-trick wrapper: fully rebuilds the base agent at every boundary
// T_i, sizing m and sigma_r from the upcoming segment length tau_i.
class AnytimeAgent : public Agent {
public:
    AnytimeAgent(const AgentConfig& base, const ArmSet& arms, std::uint64_t seed, long horizon);

    int act() override;
    void observe(int arm, double reward) override;
    long perturbation_draws() const override { return finished_draws_ + inner_->perturbation_draws(); }
    int last_model_index() const override { return inner_->last_model_index(); }
    std::vector<long> restarts() const override { return restarts_; }

    // Segment parameters derived from the segment length tau_i.
    static int segment_ensemble_size(long tau_i);
    static double segment_sigma_r(long tau_i);

private:
    void start_segment(int segment_index);

    AgentConfig base_;
    ArmSet arms_;
    std::uint64_t seed_;
    std::vector<long> boundaries_;
    std::vector<long> restarts_;
    std::unique_ptr<Agent> inner_;
    std::size_t next_boundary_ = 0;
    int segment_ = 0;
    long t_ = 0;
    long finished_draws_ = 0;
};

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const ArmSet& arms,
                                  std::uint64_t seed, long horizon);

// Full episode: warm-up per variant, then the sampling loop; the trace is a
// pure function of (model, arms, config, T, seed).
RegretTrace run_episode(const RewardModel& model, const ArmSet& arms,
                        const AgentConfig& config, long T, std::uint64_t seed);

// ceil((8 / p_n^2) (K ln T + ln(1/delta)))
int ensemble_size_theory(int K, double T, double delta, double p_n);

}  // namespace esb
