#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "esbandit/envs.hpp"
#include "esbandit/linalg.hpp"

namespace esb {

enum class LinkKind { Identity, Logistic };

// Strictly increasing link with derivative bounds over the reachable
// argument range |u| <= S.
struct LinkFunction {
    LinkKind kind = LinkKind::Identity;
    double mu_dot_min = 1.0;
    double mu_dot_max = 1.0;
    double self_concordance = 0.0;  // M with |mu''| <= M * mu'

    static LinkFunction identity();
    static LinkFunction logistic(double arg_bound = 1.0);
};

double link_value(const LinkFunction& link, double u);
double link_derivative(const LinkFunction& link, double u);
// Primitive b(u) with b'(u) = mu(u): u^2/2 for identity, softplus for logistic.
double link_primitive(const LinkFunction& link, double u);

struct GlmDataset {
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;

    std::size_t size() const { return xs.size(); }
};

struct NllResult {
    double value = 0.0;
    Eigen::VectorXd grad;
};

// Value and gradient of the lambda-regularized negative log-likelihood
//   (lambda/2)||theta||^2 - sum_l (y_l x_l'theta - b(x_l'theta)).
NllResult nll_value_grad(const Eigen::VectorXd& theta, const GlmDataset& data,
                         double lambda, const LinkFunction& link);

struct GdOptions {
    int iters = 100;
    double step = 0.01;
};

// Full-batch gradient descent on the regularized NLL from `warm_start`
// (zero when absent). Throws DivergenceError if the NLL becomes non-finite.
Eigen::VectorXd fit_mle(const GlmDataset& data, double lambda, const LinkFunction& link,
                        const GdOptions& opt,
                        const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

// Forced-exploration schedule of exactly tau arm indices: G-optimal design,
// rounded to integer counts, emitted round-robin across the support.
std::vector<int> glm_warmup_schedule(const ArmSet& arms, int tau, double eps = 0.5);

// ceil(1.5 * iota^2 * d / mu_dot_min)
int warmup_length_theory(double iota, int d, double mu_dot_min);

// Theory-mode regularization max(1, (2dM/S) log(max(e sqrt(1+T*L/d), 1/delta)))
// with L the feature-norm bound.
double lambda_theory(int d, double M, double S, double T, double L, double delta);

}  // namespace esb
