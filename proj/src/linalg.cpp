#include "esbandit/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace esb {

CovarianceState CovarianceState::regularized_identity(int d, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("CovarianceState: lambda must be > 0");
    CovarianceState s;
    s.A = lambda * Eigen::MatrixXd::Identity(d, d);
    s.A_inv = (1.0 / lambda) * Eigen::MatrixXd::Identity(d, d);
    s.logdet = d * std::log(lambda);
    return s;
}

void sherman_morrison_update(CovarianceState& state, const Eigen::VectorXd& x) {
    if (!x.allFinite()) throw std::invalid_argument("sherman_morrison_update: non-finite input");
    if (x.size() != state.A.rows())
        throw std::invalid_argument("sherman_morrison_update: dimension mismatch");

    state.A.selfadjointView<Eigen::Lower>().rankUpdate(x);
    state.A.triangularView<Eigen::StrictlyUpper>() =
        state.A.triangularView<Eigen::StrictlyLower>().transpose();

    const Eigen::VectorXd u = state.A_inv * x;
    const double denom = 1.0 + x.dot(u);
    state.A_inv.noalias() -= (u * u.transpose()) / denom;
    state.logdet += std::log(denom);

    if (++state.updates_since_refresh >= CovarianceState::kRevalidateEvery) {
        Eigen::LLT<Eigen::MatrixXd> llt(state.A);
        if (llt.info() != Eigen::Success)
            throw DecompositionError("sherman_morrison_update: matrix lost positive definiteness");
        state.A_inv = llt.solve(Eigen::MatrixXd::Identity(state.A.rows(), state.A.cols()));
        state.logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        state.updates_since_refresh = 0;
    }
}

namespace {

Eigen::MatrixXd design_gram(const ArmSet& arms, const Eigen::VectorXd& weights) {
    const int d = arms.dim();
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < arms.num_arms(); ++i) {
        if (weights[i] > 0.0)
            V.selfadjointView<Eigen::Lower>().rankUpdate(arms.arm(i), weights[i]);
    }
    V.triangularView<Eigen::StrictlyUpper>() = V.triangularView<Eigen::StrictlyLower>().transpose();
    return V;
}

// Leverage x_i' V^{-1} x_i for every arm. Throws RankError when V is singular.
Eigen::VectorXd leverages(const ArmSet& arms, const Eigen::MatrixXd& V) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(V);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() < 1e-14)
        throw RankError("g_optimal_design: arm set does not span R^d");
    const Eigen::MatrixXd solved = ldlt.solve(arms.features.transpose());  // d x K
    return (arms.features.transpose().array() * solved.array()).colwise().sum().transpose();
}

}  // namespace

double design_value(const ArmSet& arms, const DesignWeights& zeta) {
    return leverages(arms, design_gram(arms, zeta.weights)).maxCoeff();
}

DesignWeights g_optimal_design(const ArmSet& arms, double tol, int max_iters) {
    const int K = arms.num_arms();
    const int d = arms.dim();
    if (K < 1) throw std::invalid_argument("g_optimal_design: empty arm set");
    if (max_iters <= 0) max_iters = 10 * K * d;

    Eigen::VectorXd w = Eigen::VectorXd::Constant(K, 1.0 / K);
    Eigen::MatrixXd V = design_gram(arms, w);

    auto finish = [&](const Eigen::VectorXd& weights) {
        DesignWeights out;
        out.dim = d;
        out.weights = weights;
        const double floor = 1e-6 / K;
        for (int i = 0; i < K; ++i) {
            if (out.weights[i] < floor) out.weights[i] = 0.0;
        }
        out.weights /= out.weights.sum();
        for (int i = 0; i < K; ++i)
            if (out.weights[i] > 0.0) out.support.push_back(i);
        return out;
    };

    const double target = d * (1.0 + tol);
    for (int iter = 0; iter < max_iters; ++iter) {
        const Eigen::VectorXd g = leverages(arms, V);
        int best = 0;
        double gmax = g[0];
        for (int i = 1; i < K; ++i) {
            if (g[i] > gmax) {
                gmax = g[i];
                best = i;
            }
        }
        if (gmax <= target) return finish(w);

        // Wynn-Fedorov step toward the worst-covered arm.
        const double gamma = (gmax / d - 1.0) / (gmax - 1.0);
        w *= (1.0 - gamma);
        w[best] += gamma;
        V *= (1.0 - gamma);
        V.selfadjointView<Eigen::Lower>().rankUpdate(arms.arm(best), gamma);
        V.triangularView<Eigen::StrictlyUpper>() =
            V.triangularView<Eigen::StrictlyLower>().transpose();
    }
    throw ConvergenceError("g_optimal_design: no convergence within max_iters", finish(w));
}

std::vector<int> round_design(int tau, const DesignWeights& zeta, double eps) {
    const int p = static_cast<int>(zeta.support.size());
    if (p < 1) throw std::invalid_argument("round_design: empty support");
    if (tau < p) throw std::invalid_argument("round_design: tau smaller than support size");
    if (eps <= 0.0 || eps >= 1.0) throw std::invalid_argument("round_design: eps must be in (0,1)");

    Eigen::VectorXd zs(p);
    for (int i = 0; i < p; ++i) zs[i] = zeta.weights[zeta.support[i]];

    std::vector<int> counts(p);
    for (int i = 0; i < p; ++i)
        counts[i] = static_cast<int>(std::ceil((tau - p / 2.0) * zs[i]));

    auto balance = [&]() {
        long total = 0;
        for (int c : counts) total += c;
        while (total != tau) {
            if (total < tau) {
                int j = 0;
                double best = (counts[0] - 1.0) / zs[0];
                for (int i = 1; i < p; ++i) {
                    const double v = (counts[i] - 1.0) / zs[i];
                    if (v < best) {
                        best = v;
                        j = i;
                    }
                }
                ++counts[j];
                ++total;
            } else {
                int j = 0;
                double best = (counts[0] - 1.0) / zs[0];
                for (int i = 1; i < p; ++i) {
                    const double v = (counts[i] - 1.0) / zs[i];
                    if (v > best) {
                        best = v;
                        j = i;
                    }
                }
                --counts[j];
                --total;
            }
        }
    };

    balance();
    // Lower-bound clamp, then one more balancing pass to restore the budget.
    const double r = (zeta.dim * (zeta.dim + 1) / 2.0 + 1.0) / eps;
    const int lower = static_cast<int>(std::ceil(r / p));
    for (int i = 0; i < p; ++i) counts[i] = std::max(counts[i], lower);
    balance();
    return counts;
}

Eigen::VectorXd chol_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
        throw DecompositionError("chol_solve: matrix is not positive definite");
    return llt.solve(b);
}

}  // namespace esb
