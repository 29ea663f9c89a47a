#pragma once

#include <vector>

#include <Eigen/Core>

#include "esbandit/envs.hpp"
#include "esbandit/errors.hpp"

namespace esb {

// Probability weights over an arm set; zero outside `support`.
struct DesignWeights {
    std::vector<int> support;   // indices into the arm set, ascending
    Eigen::VectorXd weights;    // full length K, sums to 1
    int dim = 0;                // ambient dimension d of the arms
};

// Regularized Gram matrix A = lambda*I + sum x x', with its inverse and
// log-determinant maintained across rank-one updates. The inverse is
// recomputed from A every `kRevalidateEvery` updates to cap drift.
struct CovarianceState {
    Eigen::MatrixXd A;
    Eigen::MatrixXd A_inv;
    double logdet = 0.0;
    long updates_since_refresh = 0;

    static constexpr long kRevalidateEvery = 1000;

    static CovarianceState regularized_identity(int d, double lambda);
};

// A <- A + x x'; inverse and logdet updated via Sherman-Morrison.
void sherman_morrison_update(CovarianceState& state, const Eigen::VectorXd& x);

// Worst-case leverage max_x ||x||^2_{V(zeta)^{-1}} of a design.
double design_value(const ArmSet& arms, const DesignWeights& zeta);

// G-optimal design by Frank-Wolfe on the log-det criterion from uniform
// weights. Stops once the design value is <= d*(1+tol); max_iters <= 0 picks
// the default 10*K*d. Weights below 1e-6/K are dropped from the support.
// Throws RankError if the arms do not span R^d and ConvergenceError (carrying
// the best iterate) on non-convergence.
DesignWeights g_optimal_design(const ArmSet& arms, double tol, int max_iters = 0);

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, DesignWeights best)
        : std::runtime_error(what), best_iterate(std::move(best)) {}
    DesignWeights best_iterate;
};

// Integer pull counts per support arm with sum exactly tau, via the
// initialize-then-balance rounding loop. The final lower-bound clamp is
// followed by one more balancing pass so the tau budget is preserved.
std::vector<int> round_design(int tau, const DesignWeights& zeta, double eps);

// Solve A x = b for symmetric positive-definite A via Cholesky.
Eigen::VectorXd chol_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace esb
