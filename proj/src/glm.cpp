#include "esbandit/glm.hpp"

#include <cmath>
#include <stdexcept>

#include "esbandit/errors.hpp"

namespace esb {

namespace {

double stable_logistic(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

// Overflow-free softplus log(1 + e^u).
double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

}  // namespace

LinkFunction LinkFunction::identity() {
    return LinkFunction{LinkKind::Identity, 1.0, 1.0, 0.0};
}

LinkFunction LinkFunction::logistic(double arg_bound) {
    const double mu_s = stable_logistic(std::abs(arg_bound));
    // mu' is symmetric with maximum 1/4 at 0 and minimum at the range edge.
    return LinkFunction{LinkKind::Logistic, mu_s * (1.0 - mu_s), 0.25, 1.0};
}

double link_value(const LinkFunction& link, double u) {
    return link.kind == LinkKind::Identity ? u : stable_logistic(u);
}

double link_derivative(const LinkFunction& link, double u) {
    if (link.kind == LinkKind::Identity) return 1.0;
    const double mu = stable_logistic(u);
    return mu * (1.0 - mu);
}

double link_primitive(const LinkFunction& link, double u) {
    return link.kind == LinkKind::Identity ? 0.5 * u * u : softplus(u);
}

NllResult nll_value_grad(const Eigen::VectorXd& theta, const GlmDataset& data,
                         double lambda, const LinkFunction& link) {
    if (!theta.allFinite()) throw std::invalid_argument("nll_value_grad: non-finite theta");
    if (lambda < 0.0) throw std::invalid_argument("nll_value_grad: lambda must be >= 0");
    if (data.xs.size() != data.ys.size())
        throw std::invalid_argument("nll_value_grad: xs/ys size mismatch");

    NllResult res;
    res.value = 0.5 * lambda * theta.squaredNorm();
    res.grad = lambda * theta;
    for (std::size_t l = 0; l < data.xs.size(); ++l) {
        const double u = data.xs[l].dot(theta);
        res.value -= data.ys[l] * u - link_primitive(link, u);
        res.grad += (link_value(link, u) - data.ys[l]) * data.xs[l];
    }
    return res;
}

Eigen::VectorXd fit_mle(const GlmDataset& data, double lambda, const LinkFunction& link,
                        const GdOptions& opt,
                        const std::optional<Eigen::VectorXd>& warm_start) {
    if (opt.iters < 1) throw std::invalid_argument("fit_mle: iters must be >= 1");
    if (opt.step <= 0.0) throw std::invalid_argument("fit_mle: step must be > 0");
    if (data.xs.empty()) {
        // Pure penalty: the minimizer is 0 in whatever dimension is known.
        return Eigen::VectorXd::Zero(warm_start ? warm_start->size() : 0);
    }

    const int d = static_cast<int>(data.xs[0].size());
    Eigen::VectorXd theta = warm_start ? *warm_start : Eigen::VectorXd::Zero(d);
    for (int it = 0; it < opt.iters; ++it) {
        const NllResult r = nll_value_grad(theta, data, lambda, link);
        if (!std::isfinite(r.value) || !r.grad.allFinite())
            throw DivergenceError("fit_mle: NLL became non-finite");
        theta -= opt.step * r.grad;
    }
    if (!theta.allFinite()) throw DivergenceError("fit_mle: parameters became non-finite");
    return theta;
}

std::vector<int> glm_warmup_schedule(const ArmSet& arms, int tau, double eps) {
    if (tau < arms.dim()) throw std::invalid_argument("glm_warmup_schedule: tau < d");
    const DesignWeights zeta = g_optimal_design(arms, 0.05);
    std::vector<int> counts = round_design(tau, zeta, eps);

    // Round-robin over the support until every count is exhausted.
    std::vector<int> schedule;
    schedule.reserve(tau);
    std::vector<int> remaining = counts;
    while (static_cast<int>(schedule.size()) < tau) {
        for (std::size_t i = 0; i < zeta.support.size(); ++i) {
            if (remaining[i] > 0) {
                schedule.push_back(zeta.support[i]);
                --remaining[i];
            }
        }
    }
    return schedule;
}

int warmup_length_theory(double iota, int d, double mu_dot_min) {
    if (iota <= 0.0 || d <= 0 || mu_dot_min <= 0.0)
        throw std::invalid_argument("warmup_length_theory: inputs must be positive");
    return static_cast<int>(std::ceil(1.5 * iota * iota * d / mu_dot_min));
}

double lambda_theory(int d, double M, double S, double T, double L, double delta) {
    const double inner = std::max(std::exp(1.0) * std::sqrt(1.0 + T * L / d), 1.0 / delta);
    return std::max(1.0, (2.0 * d * M / S) * std::log(inner));
}

}  // namespace esb
