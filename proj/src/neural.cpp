#include "esbandit/neural.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "esbandit/errors.hpp"

namespace esb {

long NetworkParams::flat_dim() const {
    long n = 0;
    for (const auto& w : weights) n += w.size();
    return n;
}

Eigen::VectorXd NetworkParams::flatten() const {
    Eigen::VectorXd flat(flat_dim());
    long pos = 0;
    for (const auto& w : weights) {
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j) flat[pos++] = w(i, j);
    }
    return flat;
}

NetworkParams NetworkParams::unflatten(const Eigen::VectorXd& flat, int d, int N, int L) {
    NetworkParams p;
    p.weights.reserve(L);
    long pos = 0;
    for (int l = 0; l < L; ++l) {
        const int rows = (l == L - 1) ? 1 : N;
        const int cols = (l == 0) ? d : N;
        Eigen::MatrixXd w(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) w(i, j) = flat[pos++];
        p.weights.push_back(std::move(w));
    }
    if (pos != flat.size()) throw std::invalid_argument("unflatten: size mismatch");
    return p;
}

Eigen::VectorXd duplicate_context(const Eigen::VectorXd& x) {
    const int half = static_cast<int>(x.size());
    Eigen::VectorXd out(2 * half);
    out.head(half) = x / std::sqrt(2.0);
    out.tail(half) = out.head(half);
    return out;
}

NetworkParams init_network(int d, int N, int L, Rng& rng) {
    if (d % 2 != 0 || N % 2 != 0)
        throw std::invalid_argument("init_network: d and N must be even");
    if (L < 2) throw std::invalid_argument("init_network: depth must be >= 2");

    const double hidden_sd = std::sqrt(4.0 / N);
    const double out_sd = std::sqrt(2.0 / N);

    NetworkParams p;
    p.weights.reserve(L);
    for (int l = 0; l < L - 1; ++l) {
        const int cols = (l == 0) ? d : N;
        Eigen::MatrixXd block(N / 2, cols / 2);
        for (int i = 0; i < block.rows(); ++i)
            for (int j = 0; j < block.cols(); ++j) block(i, j) = hidden_sd * rng.normal();
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(N, cols);
        w.topLeftCorner(N / 2, cols / 2) = block;
        w.bottomRightCorner(N / 2, cols / 2) = block;
        p.weights.push_back(std::move(w));
    }
    Eigen::MatrixXd out(1, N);
    for (int j = 0; j < N / 2; ++j) {
        const double v = out_sd * rng.normal();
        out(0, j) = v;
        out(0, j + N / 2) = -v;
    }
    p.weights.push_back(std::move(out));
    return p;
}

double forward(const NetworkParams& theta, const Eigen::VectorXd& x) {
    if (x.size() != theta.input_dim()) throw std::invalid_argument("forward: shape mismatch");
    Eigen::VectorXd a = (theta.weights[0] * x).cwiseMax(0.0);
    for (int l = 1; l + 1 < theta.depth(); ++l) a = (theta.weights[l] * a).cwiseMax(0.0);
    const double out = (theta.weights.back() * a)(0);
    return std::sqrt(static_cast<double>(theta.width())) * out;
}

Eigen::RowVectorXd forward_batch(const NetworkParams& theta, const Eigen::MatrixXd& arms_t) {
    Eigen::MatrixXd a = (theta.weights[0] * arms_t).cwiseMax(0.0);
    for (int l = 1; l + 1 < theta.depth(); ++l) a = (theta.weights[l] * a).cwiseMax(0.0);
    return std::sqrt(static_cast<double>(theta.width())) * (theta.weights.back() * a);
}

namespace {

// Activations a_1..a_{L-1} for one input; returns f.
double forward_trace(const NetworkParams& theta, const Eigen::VectorXd& x,
                     std::vector<Eigen::VectorXd>& acts) {
    acts.clear();
    acts.push_back((theta.weights[0] * x).cwiseMax(0.0));
    for (int l = 1; l + 1 < theta.depth(); ++l)
        acts.push_back((theta.weights[l] * acts.back()).cwiseMax(0.0));
    return std::sqrt(static_cast<double>(theta.width())) * (theta.weights.back() * acts.back())(0);
}

// Accumulates scale * grad f(x; theta) into per-layer matrices.
void backward_accumulate(const NetworkParams& theta, const Eigen::VectorXd& x,
                         const std::vector<Eigen::VectorXd>& acts, double scale,
                         std::vector<Eigen::MatrixXd>& grads) {
    const int L = theta.depth();
    const double root_n = std::sqrt(static_cast<double>(theta.width()));

    grads[L - 1].noalias() += (scale * root_n) * acts[L - 2].transpose();
    Eigen::VectorXd delta =
        (scale * root_n) * theta.weights[L - 1].transpose();
    for (int l = L - 2; l >= 0; --l) {
        // ReLU subgradient: strictly positive activations only.
        delta.array() *= (acts[l].array() > 0.0).cast<double>();
        const Eigen::VectorXd& below = (l == 0) ? x : acts[l - 1];
        grads[l].noalias() += delta * below.transpose();
        if (l > 0) delta = theta.weights[l].transpose() * delta;
    }
}

std::vector<Eigen::MatrixXd> zero_like(const NetworkParams& theta) {
    std::vector<Eigen::MatrixXd> g;
    g.reserve(theta.depth());
    for (const auto& w : theta.weights) g.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    return g;
}

Eigen::VectorXd flatten_grads(const std::vector<Eigen::MatrixXd>& grads) {
    long n = 0;
    for (const auto& g : grads) n += g.size();
    Eigen::VectorXd flat(n);
    long pos = 0;
    for (const auto& g : grads)
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) flat[pos++] = g(i, j);
    return flat;
}

}  // namespace

Eigen::VectorXd grad_params(const NetworkParams& theta, const Eigen::VectorXd& x) {
    if (x.size() != theta.input_dim()) throw std::invalid_argument("grad_params: shape mismatch");
    std::vector<Eigen::VectorXd> acts;
    forward_trace(theta, x, acts);
    auto grads = zero_like(theta);
    backward_accumulate(theta, x, acts, 1.0, grads);
    return flatten_grads(grads);
}

std::pair<double, Eigen::VectorXd> neural_loss_grad(const NetworkParams& theta,
                                                    const GlmDataset& data, double lambda,
                                                    const NetworkParams& theta0) {
    if (lambda < 0.0) throw std::invalid_argument("neural_loss_grad: lambda must be >= 0");
    const int N = theta.width();

    double loss = 0.0;
    auto grads = zero_like(theta);
    std::vector<Eigen::VectorXd> acts;
    for (std::size_t l = 0; l < data.xs.size(); ++l) {
        const double f = forward_trace(theta, data.xs[l], acts);
        const double resid = f - data.ys[l];
        loss += 0.5 * resid * resid;
        backward_accumulate(theta, data.xs[l], acts, resid, grads);
    }
    for (int l = 0; l < theta.depth(); ++l) {
        const Eigen::MatrixXd diff = theta.weights[l] - theta0.weights[l];
        loss += 0.5 * lambda * N * diff.squaredNorm();
        grads[l] += lambda * N * diff;
    }
    if (!std::isfinite(loss)) throw std::invalid_argument("neural_loss_grad: non-finite loss");
    return {loss, flatten_grads(grads)};
}

NetworkParams train_gd(NetworkParams theta, const GlmDataset& data, double lambda,
                       const NetworkParams& theta0, int steps, double eta,
                       std::vector<double>* loss_trace) {
    if (steps < 1) throw std::invalid_argument("train_gd: steps must be >= 1");
    if (eta <= 0.0) throw std::invalid_argument("train_gd: eta must be > 0");

    const int d = theta.input_dim();
    const int N = theta.width();
    const int L = theta.depth();
    for (int it = 0; it < steps; ++it) {
        auto [loss, grad] = neural_loss_grad(theta, data, lambda, theta0);
        if (!std::isfinite(loss) || !grad.allFinite())
            throw DivergenceError("train_gd: loss became non-finite");
        if (loss_trace) loss_trace->push_back(loss);
        theta = NetworkParams::unflatten(theta.flatten() - eta * grad, d, N, L);
    }
    return theta;
}

double weighted_loss_grad(const NetworkParams& theta, const Eigen::MatrixXd& arms_t,
                          const Eigen::VectorXd& counts, const Eigen::VectorXd& target_sums,
                          const Eigen::VectorXd& target_sqsums, double lambda,
                          const NetworkParams& theta0,
                          std::vector<Eigen::MatrixXd>& grads) {
    const int L = theta.depth();
    const int N = theta.width();
    const double root_n = std::sqrt(static_cast<double>(N));

    // Forward over all arms, keeping activations.
    std::vector<Eigen::MatrixXd> acts(L - 1);
    acts[0] = (theta.weights[0] * arms_t).cwiseMax(0.0);
    for (int l = 1; l + 1 < L; ++l) acts[l] = (theta.weights[l] * acts[l - 1]).cwiseMax(0.0);
    const Eigen::RowVectorXd f = root_n * (theta.weights[L - 1] * acts[L - 2]);

    // Per-arm residual weight c_a f_a - s_a; loss uses the stored squared sums.
    const Eigen::RowVectorXd r =
        f.cwiseProduct(counts.transpose()) - target_sums.transpose();
    double loss = 0.5 * (f.cwiseProduct(r).sum() - f.dot(target_sums) + target_sqsums.sum());

    grads[L - 1].noalias() = root_n * (acts[L - 2] * r.transpose()).transpose();
    Eigen::MatrixXd delta =
        (root_n * theta.weights[L - 1].transpose()) * r;  // N x K
    for (int l = L - 2; l >= 0; --l) {
        delta.array() *= (acts[l].array() > 0.0).cast<double>();
        const Eigen::MatrixXd& below = (l == 0) ? arms_t : acts[l - 1];
        grads[l].noalias() = delta * below.transpose();
        if (l > 0) delta = theta.weights[l].transpose() * delta;
    }
    for (int l = 0; l < L; ++l) {
        const Eigen::MatrixXd diff = theta.weights[l] - theta0.weights[l];
        loss += 0.5 * lambda * N * diff.squaredNorm();
        grads[l] += lambda * N * diff;
    }
    return loss;
}

Eigen::MatrixXd ntk_gram(const NetworkParams& theta0, const ArmSet& arms) {
    const int K = arms.num_arms();
    Eigen::MatrixXd g(K, theta0.flat_dim());
    for (int i = 0; i < K; ++i) g.row(i) = grad_params(theta0, arms.arm(i)).transpose();
    return (g * g.transpose()) / static_cast<double>(theta0.width());
}

double effective_dimension(const Eigen::MatrixXd& gram, double T, int K, double lambda) {
    if (gram.rows() != gram.cols()) throw std::invalid_argument("effective_dimension: non-square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success)
        throw std::invalid_argument("effective_dimension: eigendecomposition failed");
    double logdet = 0.0;
    for (int i = 0; i < gram.rows(); ++i) {
        const double ev = es.eigenvalues()[i];
        if (ev < -1e-8) throw std::invalid_argument("effective_dimension: gram is not PSD");
        logdet += std::log1p(T * std::max(ev, 0.0) / lambda);
    }
    return logdet / std::log1p(T * K / lambda);
}

double theoretical_sigma_r(double alpha_t, double lambda, double lambda_k_of_a_k) {
    if (lambda_k_of_a_k <= lambda)
        throw std::invalid_argument("theoretical_sigma_r: requires lambda_K(A_K) > lambda");
    return alpha_t / std::sqrt(1.0 - lambda / lambda_k_of_a_k);
}

double mle_concentration_alpha(double sigma, double logdet_at, double logdet_lambda_identity,
                               double delta, double lambda, double s_bound) {
    const double log_ratio = logdet_at - logdet_lambda_identity - 2.0 * std::log(delta);
    return std::sqrt(sigma * sigma * log_ratio) + std::sqrt(lambda) * s_bound;
}

}  // namespace esb
