#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "esbandit/rng.hpp"

namespace esb {

enum class RewardKind { Linear, Logistic, Distance, Quadratic };

RewardKind reward_kind_from_string(const std::string& s);
std::string to_string(RewardKind kind);

// Fixed finite action set: K feature vectors in R^d, each with 2-norm <= 1.
struct ArmSet {
    Eigen::MatrixXd features;  // K x d, one arm per row

    int num_arms() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
    Eigen::VectorXd arm(int i) const { return features.row(i).transpose(); }

    // Throws std::invalid_argument on norm or shape violations.
    void validate() const;
};

// Synthetic reward model: mean h(x) plus N(0, sigma^2) noise.
struct RewardModel {
    RewardKind kind = RewardKind::Linear;
    Eigen::VectorXd theta_star;   // Linear / Logistic / Distance
    Eigen::MatrixXd sqrt_factor;  // Quadratic: stored A, mean is 1e-2 * x'AA'x
    double noise_sigma = 0.0;
};

struct RegretRound {
    long t = 0;
    int arm = 0;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
};

struct RegretTrace {
    std::vector<RegretRound> rounds;
    std::uint64_t seed = 0;
    std::vector<long> restarts;  // rounds at which an anytime agent restarted
};

struct Instance {
    ArmSet arms;
    RewardModel model;
};

double mean_reward(const RewardModel& model, const Eigen::VectorXd& x);

// mean_reward(x) + N(0, sigma^2) noise from the given stream.
double sample_reward(const RewardModel& model, const Eigen::VectorXd& x, Rng& rng);

// Index and mean value of the best arm; ties broken by lowest index.
std::pair<int, double> optimal_arm(const RewardModel& model, const ArmSet& arms);

// Random instance fully determined by (kind, K, d, seed). Arms are uniform on
// the unit sphere; theta_star is normalized to norm theta_norm; the quadratic
// factor has i.i.d. N(0,1) entries.
Instance generate_instance(RewardKind kind, int K, int d, std::uint64_t seed,
                           double theta_norm = 1.0);

}  // namespace esb
