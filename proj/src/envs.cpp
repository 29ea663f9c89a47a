#include "esbandit/envs.hpp"

#include <cmath>
#include <stdexcept>

namespace esb {

RewardKind reward_kind_from_string(const std::string& s) {
    if (s == "linear") return RewardKind::Linear;
    if (s == "logistic") return RewardKind::Logistic;
    if (s == "distance") return RewardKind::Distance;
    if (s == "quadratic") return RewardKind::Quadratic;
    throw std::invalid_argument("unknown reward kind: " + s);
}

std::string to_string(RewardKind kind) {
    switch (kind) {
        case RewardKind::Linear: return "linear";
        case RewardKind::Logistic: return "logistic";
        case RewardKind::Distance: return "distance";
        case RewardKind::Quadratic: return "quadratic";
    }
    throw std::invalid_argument("unknown reward kind");
}

void ArmSet::validate() const {
    if (num_arms() < 2) throw std::invalid_argument("ArmSet: need at least 2 arms");
    if (dim() < 1) throw std::invalid_argument("ArmSet: need dimension >= 1");
    for (int i = 0; i < num_arms(); ++i) {
        if (features.row(i).norm() > 1.0 + 1e-12)
            throw std::invalid_argument("ArmSet: arm norm exceeds 1");
    }
}

namespace {

double stable_logistic(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

}  // namespace

double mean_reward(const RewardModel& model, const Eigen::VectorXd& x) {
    switch (model.kind) {
        case RewardKind::Linear:
            if (x.size() != model.theta_star.size())
                throw std::invalid_argument("mean_reward: dimension mismatch");
            return model.theta_star.dot(x);
        case RewardKind::Logistic:
            if (x.size() != model.theta_star.size())
                throw std::invalid_argument("mean_reward: dimension mismatch");
            return stable_logistic(model.theta_star.dot(x));
        case RewardKind::Distance:
            if (x.size() != model.theta_star.size())
                throw std::invalid_argument("mean_reward: dimension mismatch");
            return -(x - model.theta_star).norm();
        case RewardKind::Quadratic: {
            if (x.size() != model.sqrt_factor.rows())
                throw std::invalid_argument("mean_reward: dimension mismatch");
            const Eigen::VectorXd y = model.sqrt_factor.transpose() * x;
            return 1e-2 * y.squaredNorm();
        }
    }
    throw std::invalid_argument("mean_reward: unknown kind");
}

double sample_reward(const RewardModel& model, const Eigen::VectorXd& x, Rng& rng) {
    const double mean = mean_reward(model, x);
    if (model.noise_sigma == 0.0) return mean;
    return mean + model.noise_sigma * rng.normal();
}

std::pair<int, double> optimal_arm(const RewardModel& model, const ArmSet& arms) {
    if (arms.num_arms() == 0) throw std::invalid_argument("optimal_arm: empty arm set");
    int best = 0;
    double best_value = mean_reward(model, arms.arm(0));
    for (int i = 1; i < arms.num_arms(); ++i) {
        const double v = mean_reward(model, arms.arm(i));
        if (v > best_value) {
            best = i;
            best_value = v;
        }
    }
    return {best, best_value};
}

Instance generate_instance(RewardKind kind, int K, int d, std::uint64_t seed,
                           double theta_norm) {
    if (K < 2) throw std::invalid_argument("generate_instance: K must be >= 2");
    if (d < 1) throw std::invalid_argument("generate_instance: d must be >= 1");

    Rng arm_rng = Rng::stream(seed, 1001);
    Rng param_rng = Rng::stream(seed, 1002);

    Instance inst;
    inst.arms.features.resize(K, d);
    for (int i = 0; i < K; ++i) {
        Eigen::VectorXd v = arm_rng.gaussian_vector(d);
        inst.arms.features.row(i) = (v / v.norm()).transpose();
    }

    inst.model.kind = kind;
    inst.model.noise_sigma = 0.0;
    if (kind == RewardKind::Quadratic) {
        inst.model.sqrt_factor.resize(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) inst.model.sqrt_factor(i, j) = param_rng.normal();
    } else {
        Eigen::VectorXd theta = param_rng.gaussian_vector(d);
        inst.model.theta_star = theta * (theta_norm / theta.norm());
    }
    return inst;
}

}  // namespace esb
