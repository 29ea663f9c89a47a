#include "esbandit/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "esbandit/errors.hpp"

namespace esb {

namespace {

constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kModelPickStream = 1;
constexpr std::uint64_t kBaselineStream = 2;
constexpr std::uint64_t kPerturbStreamBase = 10;
constexpr std::uint64_t kNetInitStreamBase = 10000;

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0xd1342543de82ef95ULL * (index + 1));
    return splitmix64(s);
}

int argmax_lowest(const Eigen::VectorXd& values) {
    int best = 0;
    for (int i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

std::vector<Rng> member_streams(std::uint64_t seed, int m) {
    std::vector<Rng> rngs;
    rngs.reserve(m);
    for (int j = 0; j < m; ++j) rngs.push_back(Rng::stream(seed, kPerturbStreamBase + j));
    return rngs;
}

}  // namespace

AgentVariant agent_variant_from_string(const std::string& s) {
    if (s == "lin-es") return AgentVariant::LinES;
    if (s == "glm-es") return AgentVariant::GlmES;
    if (s == "neural-es") return AgentVariant::NeuralES;
    if (s == "lin-ucb") return AgentVariant::LinUCB;
    if (s == "lin-ts") return AgentVariant::LinTS;
    if (s == "uniform") return AgentVariant::UniformRandom;
    throw std::invalid_argument("unknown agent variant: " + s);
}

std::string to_string(AgentVariant v) {
    switch (v) {
        case AgentVariant::LinES: return "lin-es";
        case AgentVariant::GlmES: return "glm-es";
        case AgentVariant::NeuralES: return "neural-es";
        case AgentVariant::LinUCB: return "lin-ucb";
        case AgentVariant::LinTS: return "lin-ts";
        case AgentVariant::UniformRandom: return "uniform";
    }
    throw std::invalid_argument("unknown agent variant");
}

void AgentConfig::validate() const {
    if (m < 1) throw std::invalid_argument("AgentConfig: m must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("AgentConfig: lambda must be >= 0");
    if (sigma_r < 0.0) throw std::invalid_argument("AgentConfig: sigma_r must be >= 0");
    if (tau < 0) throw std::invalid_argument("AgentConfig: tau must be >= 0");
    if (optimizer.iters < 1) throw std::invalid_argument("AgentConfig: optimizer.iters must be >= 1");
    if (optimizer.step <= 0.0) throw std::invalid_argument("AgentConfig: optimizer.step must be > 0");
    if (anytime && schedule.t0 < 1) throw std::invalid_argument("AgentConfig: schedule.t0 must be >= 1");
    if (anytime && schedule.b <= 1.0) throw std::invalid_argument("AgentConfig: schedule.b must be > 1");
}

std::vector<long> doubling_boundaries(const DoublingSchedule& schedule, long horizon) {
    std::vector<long> out;
    for (int i = 0;; ++i) {
        const double v = static_cast<double>(schedule.t0) * std::pow(schedule.b, i);
        const long ti = static_cast<long>(std::floor(v));
        if (ti > horizon) break;
        out.push_back(ti);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lin-ES

LinEsAgent::LinEsAgent(const AgentConfig& config, const ArmSet& arms, std::uint64_t seed)
    : features_(arms.features),
      cov_(CovarianceState::regularized_identity(arms.dim(), config.lambda)),
      b_(Eigen::MatrixXd::Zero(arms.dim(), config.m)),
      theta_(Eigen::MatrixXd::Zero(arms.dim(), config.m)),
      sigma_r_(config.sigma_r),
      m_(config.m),
      model_pick_rng_(Rng::stream(seed, kModelPickStream)),
      perturb_rngs_(member_streams(seed, config.m)) {
    // Each member also perturbs the regularization anchor: b_0^j =
    // sqrt(lambda) * sigma_r * xi^j with xi^j ~ N(0, I). Reward perturbations
    // alone only diversify the members inside the span of pulled features;
    // the anchor term keeps cross-member spread sigma_r^2 * A^-1 in every
    // direction, which is what makes the closed-form ensemble explore. It
    // vanishes at sigma_r = 0, preserving the greedy-ridge equivalence.
    const double prior_scale = std::sqrt(config.lambda) * sigma_r_;
    for (int j = 0; j < m_; ++j) {
        b_.col(j) = prior_scale * perturb_rngs_[j].gaussian_vector(arms.dim());
    }
    theta_.noalias() = cov_.A_inv * b_;
}

int LinEsAgent::greedy_arm(int j) const {
    return argmax_lowest(features_ * theta_.col(j));
}

int LinEsAgent::act() {
    last_model_ = model_pick_rng_.uniform_int(m_);
    return greedy_arm(last_model_);
}

void LinEsAgent::observe(int arm, double reward) {
    if (!std::isfinite(reward)) throw std::invalid_argument("LinEsAgent: non-finite reward");
    const Eigen::VectorXd x = features_.row(arm).transpose();
    sherman_morrison_update(cov_, x);
    for (int j = 0; j < m_; ++j) {
        const double z = sigma_r_ * perturb_rngs_[j].normal();
        ++draws_;
        b_.col(j) += x * (reward + z);
    }
    theta_.noalias() = cov_.A_inv * b_;
}

// ---------------------------------------------------------------------------
// GLM-ES

GlmEsAgent::GlmEsAgent(const AgentConfig& config, const ArmSet& arms, std::uint64_t seed,
                       LinkFunction link)
    : features_(arms.features),
      features_t_(arms.features.transpose()),
      link_(link),
      counts_(Eigen::VectorXd::Zero(arms.num_arms())),
      b_(Eigen::MatrixXd::Zero(arms.dim(), config.m)),
      theta_(Eigen::MatrixXd::Zero(arms.dim(), config.m)),
      targets_(config.m),
      opt_(config.optimizer),
      lambda_(config.lambda),
      sigma_r_(config.sigma_r),
      m_(config.m),
      warm_start_(config.warm_start),
      model_pick_rng_(Rng::stream(seed, kModelPickStream)),
      perturb_rngs_(member_streams(seed, config.m)) {
    if (config.tau > 0) warmup_ = glm_warmup_schedule(arms, config.tau);
}

int GlmEsAgent::act() {
    if (in_warmup()) {
        last_model_ = -1;
        return warmup_[t_++];
    }
    ++t_;
    last_model_ = model_pick_rng_.uniform_int(m_);
    // The link is strictly increasing, so ranking the linear predictors
    // ranks the predicted means.
    return argmax_lowest(features_ * theta_.col(last_model_));
}

void GlmEsAgent::observe(int arm, double reward) {
    if (!std::isfinite(reward)) throw std::invalid_argument("GlmEsAgent: non-finite reward");
    const Eigen::VectorXd x = features_.row(arm).transpose();
    counts_[arm] += 1.0;
    ++samples_;
    for (int j = 0; j < m_; ++j) {
        const double z = sigma_r_ * perturb_rngs_[j].normal();
        ++draws_;
        b_.col(j) += x * (reward + z);
        targets_[j].push_back(reward + z);
    }
    refit();
}

void GlmEsAgent::refit() {
    if (!warm_start_) theta_.setZero();
    // Gradient of the sample-averaged NLL, with the data term grouped by arm:
    //   (1/n) [ F' (counts .* mu(F theta)) + lambda theta - b ]
    const double scale = opt_.step / static_cast<double>(samples_);
    for (int it = 0; it < opt_.iters; ++it) {
        Eigen::MatrixXd mu = features_ * theta_;  // K x m linear predictors
        if (link_.kind == LinkKind::Logistic) {
            mu = mu.unaryExpr([](double u) {
                if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
                const double e = std::exp(u);
                return e / (1.0 + e);
            });
        }
        theta_ -= scale * (features_t_ * (counts_.asDiagonal() * mu) + lambda_ * theta_ - b_);
    }
    if (!theta_.allFinite()) throw DivergenceError("GlmEsAgent: fit diverged");
}

// ---------------------------------------------------------------------------
// Neural-ES

NeuralEsAgent::NeuralEsAgent(const AgentConfig& config, const ArmSet& arms, std::uint64_t seed)
    : arms_t_(arms.features.transpose()),
      counts_(Eigen::VectorXd::Zero(arms.num_arms())),
      opt_(config.optimizer),
      lambda_(config.lambda),
      sigma_r_(config.sigma_r),
      m_(config.m),
      tau_(config.tau),
      model_pick_rng_(Rng::stream(seed, kModelPickStream)),
      perturb_rngs_(member_streams(seed, config.m)) {
    const int K = arms.num_arms();
    nets_.reserve(m_);
    for (int j = 0; j < m_; ++j) {
        Rng init_rng = Rng::stream(seed, kNetInitStreamBase + j);
        nets_.push_back(init_network(arms.dim(), config.net_width, config.net_depth, init_rng));
        target_sums_.push_back(Eigen::VectorXd::Zero(K));
        target_sqsums_.push_back(Eigen::VectorXd::Zero(K));
    }
    inits_ = nets_;
    targets_.resize(m_);
    for (const auto& w : nets_[0].weights)
        grad_ws_.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
}

int NeuralEsAgent::act() {
    if (in_warmup()) {
        last_model_ = -1;
        const int arm = static_cast<int>(t_ % counts_.size());
        ++t_;
        return arm;
    }
    ++t_;
    last_model_ = model_pick_rng_.uniform_int(m_);
    Eigen::VectorXd preds = forward_batch(nets_[last_model_], arms_t_).transpose();
    return argmax_lowest(preds);
}

void NeuralEsAgent::observe(int arm, double reward) {
    if (!std::isfinite(reward)) throw std::invalid_argument("NeuralEsAgent: non-finite reward");
    counts_[arm] += 1.0;
    ++samples_;
    const double scale = opt_.step / static_cast<double>(samples_);
    for (int j = 0; j < m_; ++j) {
        const double z = sigma_r_ * perturb_rngs_[j].normal();
        ++draws_;
        const double target = reward + z;
        target_sums_[j][arm] += target;
        target_sqsums_[j][arm] += target * target;
        targets_[j].push_back(target);

        // Sample-averaged loss keeps the configured step size stable as the
        // history grows; the minimizer is unchanged.
        for (int it = 0; it < opt_.iters; ++it) {
            const double loss =
                weighted_loss_grad(nets_[j], arms_t_, counts_, target_sums_[j],
                                   target_sqsums_[j], lambda_, inits_[j], grad_ws_);
            if (!std::isfinite(loss)) throw DivergenceError("NeuralEsAgent: fit diverged");
            for (int l = 0; l < nets_[j].depth(); ++l)
                nets_[j].weights[l].noalias() -= scale * grad_ws_[l];
        }
    }
}

// ---------------------------------------------------------------------------
// Baselines

LinUcbAgent::LinUcbAgent(const AgentConfig& config, const ArmSet& arms, std::uint64_t)
    : features_(arms.features),
      cov_(CovarianceState::regularized_identity(arms.dim(), config.lambda)),
      b_(Eigen::VectorXd::Zero(arms.dim())),
      width_(config.ucb_width) {}

int LinUcbAgent::act() {
    const Eigen::VectorXd theta = cov_.A_inv * b_;
    const Eigen::MatrixXd solved = cov_.A_inv * features_.transpose();  // d x K
    const Eigen::VectorXd widths =
        (features_.transpose().array() * solved.array()).colwise().sum().transpose().cwiseSqrt();
    return argmax_lowest(features_ * theta + width_ * widths);
}

void LinUcbAgent::observe(int arm, double reward) {
    const Eigen::VectorXd x = features_.row(arm).transpose();
    sherman_morrison_update(cov_, x);
    b_ += x * reward;
}

LinTsAgent::LinTsAgent(const AgentConfig& config, const ArmSet& arms, std::uint64_t seed)
    : features_(arms.features),
      cov_(CovarianceState::regularized_identity(arms.dim(), config.lambda)),
      b_(Eigen::VectorXd::Zero(arms.dim())),
      scale_(config.ts_scale),
      rng_(Rng::stream(seed, kBaselineStream)) {}

int LinTsAgent::act() {
    const Eigen::VectorXd theta_hat = cov_.A_inv * b_;
    // A = L L'; L^{-T} xi has covariance A^{-1}.
    Eigen::LLT<Eigen::MatrixXd> llt(cov_.A);
    const Eigen::VectorXd xi = rng_.gaussian_vector(static_cast<int>(b_.size()));
    const Eigen::VectorXd sample =
        theta_hat + scale_ * llt.matrixU().solve(xi);
    return argmax_lowest(features_ * sample);
}

void LinTsAgent::observe(int arm, double reward) {
    const Eigen::VectorXd x = features_.row(arm).transpose();
    sherman_morrison_update(cov_, x);
    b_ += x * reward;
}

UniformRandomAgent::UniformRandomAgent(const ArmSet& arms, std::uint64_t seed)
    : num_arms_(arms.num_arms()), rng_(Rng::stream(seed, kBaselineStream)) {}

int UniformRandomAgent::act() { return rng_.uniform_int(num_arms_); }

// ---------------------------------------------------------------------------
// Doubling-trick wrapper

int AnytimeAgent::segment_ensemble_size(long tau_i) {
    return std::max(1, static_cast<int>(std::ceil(2.0 * std::log(static_cast<double>(tau_i)))));
}

double AnytimeAgent::segment_sigma_r(long tau_i) {
    return 0.02 * std::log(static_cast<double>(tau_i));
}

AnytimeAgent::AnytimeAgent(const AgentConfig& base, const ArmSet& arms, std::uint64_t seed,
                           long horizon)
    : base_(base), arms_(arms), seed_(seed),
      boundaries_(doubling_boundaries(base.schedule, horizon)) {
    start_segment(0);
}

void AnytimeAgent::start_segment(int segment_index) {
    segment_ = segment_index;
    // tau_i = T_{i+1} - T_i from the schedule formula (uncapped by the horizon).
    auto boundary = [&](int i) {
        return static_cast<long>(
            std::floor(static_cast<double>(base_.schedule.t0) * std::pow(base_.schedule.b, i)));
    };
    const long tau_i =
        segment_index == 0 ? base_.schedule.t0 : boundary(segment_index) - boundary(segment_index - 1);

    AgentConfig cfg = base_;
    cfg.anytime = false;
    const bool ensemble = base_.variant == AgentVariant::LinES ||
                          base_.variant == AgentVariant::GlmES ||
                          base_.variant == AgentVariant::NeuralES;
    if (ensemble) {
        cfg.m = segment_ensemble_size(tau_i);
        cfg.sigma_r = segment_sigma_r(tau_i);
    }
    if (inner_) finished_draws_ += inner_->perturbation_draws();
    inner_ = make_agent(cfg, arms_, derive_seed(seed_, 500 + segment_index), tau_i);
}

int AnytimeAgent::act() {
    ++t_;
    if (next_boundary_ < boundaries_.size() && t_ == boundaries_[next_boundary_] + 1) {
        restarts_.push_back(boundaries_[next_boundary_]);
        ++next_boundary_;
        start_segment(segment_ + 1);
    }
    return inner_->act();
}

void AnytimeAgent::observe(int arm, double reward) { inner_->observe(arm, reward); }

// ---------------------------------------------------------------------------

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const ArmSet& arms,
                                  std::uint64_t seed, long horizon) {
    config.validate();
    if (config.anytime) return std::make_unique<AnytimeAgent>(config, arms, seed, horizon);
    switch (config.variant) {
        case AgentVariant::LinES:
            return std::make_unique<LinEsAgent>(config, arms, seed);
        case AgentVariant::GlmES: {
            const LinkFunction link = config.glm_link == LinkKind::Logistic
                                          ? LinkFunction::logistic()
                                          : LinkFunction::identity();
            return std::make_unique<GlmEsAgent>(config, arms, seed, link);
        }
        case AgentVariant::NeuralES:
            return std::make_unique<NeuralEsAgent>(config, arms, seed);
        case AgentVariant::LinUCB:
            return std::make_unique<LinUcbAgent>(config, arms, seed);
        case AgentVariant::LinTS:
            return std::make_unique<LinTsAgent>(config, arms, seed);
        case AgentVariant::UniformRandom:
            return std::make_unique<UniformRandomAgent>(arms, seed);
    }
    throw std::invalid_argument("make_agent: unknown variant");
}

RegretTrace run_episode(const RewardModel& model, const ArmSet& arms,
                        const AgentConfig& config, long T, std::uint64_t seed) {
    config.validate();
    if (T < 1) throw std::invalid_argument("run_episode: T must be >= 1");
    if (!config.anytime && T <= config.tau &&
        (config.variant == AgentVariant::GlmES || config.variant == AgentVariant::NeuralES))
        throw std::invalid_argument("run_episode: T must exceed the warm-up length");

    const auto [best_arm, best_value] = optimal_arm(model, arms);
    (void)best_arm;

    Rng noise = Rng::stream(seed, kNoiseStream);
    auto agent = make_agent(config, arms, seed, T);

    RegretTrace trace;
    trace.seed = seed;
    trace.rounds.reserve(T);
    double cum = 0.0;
    for (long t = 1; t <= T; ++t) {
        const int arm = agent->act();
        const double reward = sample_reward(model, arms.arm(arm), noise);
        agent->observe(arm, reward);
        const double inst = best_value - mean_reward(model, arms.arm(arm));
        cum += inst;
        trace.rounds.push_back({t, arm, inst, cum});
    }
    trace.restarts = agent->restarts();
    return trace;
}

int ensemble_size_theory(int K, double T, double delta, double p_n) {
    if (K < 1 || T <= 0.0 || p_n <= 0.0 || delta <= 0.0 || delta > 1.0)
        throw std::invalid_argument("ensemble_size_theory: invalid inputs");
    const double v = (8.0 / (p_n * p_n)) * (K * std::log(T) + std::log(1.0 / delta));
    return static_cast<int>(std::ceil(v));
}

}  // namespace esb
