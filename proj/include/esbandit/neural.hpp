#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "esbandit/envs.hpp"
#include "esbandit/glm.hpp"
#include "esbandit/rng.hpp"

namespace esb {

// Fully connected ReLU network f(x) = sqrt(N) W_L relu(...relu(W_1 x)), no
// biases. The flattened parameter vector is layer-major, row-major within
// each layer.
struct NetworkParams {
    std::vector<Eigen::MatrixXd> weights;  // W_1 (N x d), ..., W_L (1 x N)

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int width() const { return static_cast<int>(weights.front().rows()); }
    int depth() const { return static_cast<int>(weights.size()); }
    long flat_dim() const;

    Eigen::VectorXd flatten() const;
    static NetworkParams unflatten(const Eigen::VectorXd& flat, int d, int N, int L);
};

// [x; x] / sqrt(2): norm-preserving duplication with identical halves.
Eigen::VectorXd duplicate_context(const Eigen::VectorXd& x);

// Symmetric initialization: hidden layers are block-diagonal with two copies
// of the same N(0, 4/N) block, the output layer is (w', -w') with w entries
// N(0, 2/N). Output at initialization vanishes on duplicated contexts.
NetworkParams init_network(int d, int N, int L, Rng& rng);

double forward(const NetworkParams& theta, const Eigen::VectorXd& x);

// Network outputs for all arms at once; arms_t is d x K (one arm per column).
Eigen::RowVectorXd forward_batch(const NetworkParams& theta, const Eigen::MatrixXd& arms_t);

// Exact backpropagation gradient of f(x; theta) with respect to the
// flattened parameters. The ReLU subgradient at 0 is 0.
Eigen::VectorXd grad_params(const NetworkParams& theta, const Eigen::VectorXd& x);

// Value and flattened gradient of
//   1/2 sum_l (f(x_l; theta) - y_l)^2 + (lambda N / 2) ||theta - theta0||^2.
std::pair<double, Eigen::VectorXd> neural_loss_grad(const NetworkParams& theta,
                                                    const GlmDataset& data, double lambda,
                                                    const NetworkParams& theta0);

// `steps` full-batch gradient-descent iterations at step size eta. Appends
// the loss value before each step to loss_trace when given. Throws
// DivergenceError if the loss becomes non-finite.
NetworkParams train_gd(NetworkParams theta, const GlmDataset& data, double lambda,
                       const NetworkParams& theta0, int steps, double eta,
                       std::vector<double>* loss_trace = nullptr);

// Arm-aggregated squared loss over a history where arm a was pulled
// `counts[a]` times with perturbed-target sum `target_sums[a]` and squared
// sum `target_sqsums[a]`. Gradients are accumulated into per-layer matrices;
// algebraically identical to neural_loss_grad on the raw history.
double weighted_loss_grad(const NetworkParams& theta, const Eigen::MatrixXd& arms_t,
                          const Eigen::VectorXd& counts, const Eigen::VectorXd& target_sums,
                          const Eigen::VectorXd& target_sqsums, double lambda,
                          const NetworkParams& theta0,
                          std::vector<Eigen::MatrixXd>& grads);

// Empirical NTK Gram matrix <g(x_i; theta0), g(x_j; theta0)> / N over an
// arm set.
Eigen::MatrixXd ntk_gram(const NetworkParams& theta0, const ArmSet& arms);

// log det(I + T H / lambda) / log(1 + T K / lambda)
double effective_dimension(const Eigen::MatrixXd& gram, double T, int K, double lambda);

// alpha_T * (1 - lambda / lambda_K)^{-1/2}; requires lambda_K > lambda.
double theoretical_sigma_r(double alpha_t, double lambda, double lambda_k_of_a_k);

// sqrt(sigma^2 (logdet(A_t) - logdet(lambda I) - 2 log(delta))) + sqrt(lambda) S
double mle_concentration_alpha(double sigma, double logdet_at, double logdet_lambda_identity,
                               double delta, double lambda, double s_bound);

}  // namespace esb
