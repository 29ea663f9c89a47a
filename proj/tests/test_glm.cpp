#include <cmath>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "esbandit/glm.hpp"
#include "esbandit/rng.hpp"

using namespace esb;

namespace {

GlmDataset random_dataset(int n, int d, std::uint64_t seed, bool binary) {
    Rng rng(seed);
    GlmDataset data;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x = rng.gaussian_vector(d);
        data.xs.push_back(x / std::max(1.0, x.norm()));
        data.ys.push_back(binary ? static_cast<double>(rng.uniform01() < 0.5) : rng.normal());
    }
    return data;
}

}  // namespace

TEST_CASE("link_value/link_derivative: logistic at zero") {
    LinkFunction link = LinkFunction::logistic();
    CHECK(link_value(link, 0.0) == doctest::Approx(0.5));
    CHECK(link_derivative(link, 0.0) == doctest::Approx(0.25));
}

TEST_CASE("link_value: identity passes through") {
    LinkFunction link = LinkFunction::identity();
    CHECK(link_value(link, 3.7) == 3.7);
    CHECK(link_derivative(link, 3.7) == 1.0);
}

TEST_CASE("link_value: logistic at -40 stays positive and finite") {
    LinkFunction link = LinkFunction::logistic();
    const double v = link_value(link, -40.0);
    CHECK(v > 0.0);
    CHECK(std::isfinite(v));
    CHECK(std::isfinite(link_derivative(link, -40.0)));
}

TEST_CASE("link properties: strictly increasing, logistic derivative <= 0.25") {
    LinkFunction link = LinkFunction::logistic();
    double prev = link_value(link, -10.0);
    for (double u = -9.9; u <= 10.0; u += 0.1) {
        const double v = link_value(link, u);
        CHECK(v > prev);
        CHECK(link_derivative(link, u) <= 0.25 + 1e-15);
        prev = v;
    }
}

TEST_CASE("link_primitive: b' = mu by finite differences") {
    for (LinkFunction link : {LinkFunction::identity(), LinkFunction::logistic()}) {
        for (double u : {-3.0, -0.5, 0.0, 0.7, 4.2}) {
            const double h = 1e-6;
            const double fd = (link_primitive(link, u + h) - link_primitive(link, u - h)) / (2 * h);
            CHECK(fd == doctest::Approx(link_value(link, u)).epsilon(1e-6));
        }
    }
}

TEST_CASE("nll_value_grad: empty data gives gradient lambda*theta") {
    GlmDataset data;
    Eigen::VectorXd theta = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
    NllResult r = nll_value_grad(theta, data, 2.5, LinkFunction::logistic());
    CHECK((r.grad - 2.5 * theta).norm() < 1e-14);
    CHECK(r.value == doctest::Approx(0.5 * 2.5 * theta.squaredNorm()));
}

TEST_CASE("nll_value_grad: logistic single sample at theta=0") {
    GlmDataset data;
    data.xs.push_back(Eigen::VectorXd::Unit(3, 0));
    data.ys.push_back(1.0);
    NllResult r = nll_value_grad(Eigen::VectorXd::Zero(3), data, 0.0, LinkFunction::logistic());
    CHECK((r.grad - (-0.5) * Eigen::VectorXd::Unit(3, 0)).norm() < 1e-14);
}

TEST_CASE("nll_value_grad: gradient matches central finite differences") {
    // [DERIVED] finite-difference oracle, relative error < 1e-5.
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Rng rng(seed * 100 + 9);
        GlmDataset data = random_dataset(10, 5, seed, true);
        Eigen::VectorXd theta = 0.5 * rng.gaussian_vector(5);
        NllResult r = nll_value_grad(theta, data, 1.0, LinkFunction::logistic());
        const double h = 1e-6;
        for (int i = 0; i < 5; ++i) {
            Eigen::VectorXd tp = theta, tm = theta;
            tp[i] += h;
            tm[i] -= h;
            const double fd = (nll_value_grad(tp, data, 1.0, LinkFunction::logistic()).value -
                               nll_value_grad(tm, data, 1.0, LinkFunction::logistic()).value) /
                              (2 * h);
            CHECK(std::abs(fd - r.grad[i]) <= 1e-5 * std::max(1.0, std::abs(r.grad[i])));
        }
    }
}

TEST_CASE("nll_value_grad: non-finite theta throws") {
    GlmDataset data = random_dataset(3, 2, 5, true);
    Eigen::VectorXd bad = Eigen::VectorXd::Constant(2, std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(nll_value_grad(bad, data, 1.0, LinkFunction::logistic()),
                    std::invalid_argument);
}

TEST_CASE("nll convexity along random chords") {
    Rng rng(77);
    GlmDataset data = random_dataset(12, 4, 13, true);
    LinkFunction link = LinkFunction::logistic();
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd a = rng.gaussian_vector(4), b = rng.gaussian_vector(4);
        const double alpha = rng.uniform01();
        const double lhs =
            nll_value_grad(alpha * a + (1 - alpha) * b, data, 1.0, link).value;
        const double rhs = alpha * nll_value_grad(a, data, 1.0, link).value +
                           (1 - alpha) * nll_value_grad(b, data, 1.0, link).value;
        CHECK(lhs <= rhs + 1e-10);
    }
}

TEST_CASE("fit_mle: identity link matches the closed-form ridge solution") {
    // [DERIVED] ridge oracle via chol_solve, tolerance 1e-4 after 2000 steps.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        GlmDataset data = random_dataset(30, 5, 1000 + seed, false);
        const double lambda = 1.0;
        Eigen::MatrixXd A = lambda * Eigen::MatrixXd::Identity(5, 5);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(5);
        for (std::size_t i = 0; i < data.size(); ++i) {
            A += data.xs[i] * data.xs[i].transpose();
            rhs += data.xs[i] * data.ys[i];
        }
        const Eigen::VectorXd ridge = chol_solve(A, rhs);
        GdOptions opt{2000, 1.0 / (lambda + static_cast<double>(data.size()))};
        const Eigen::VectorXd theta = fit_mle(data, lambda, LinkFunction::identity(), opt);
        CHECK((theta - ridge).norm() < 1e-4);
    }
}

TEST_CASE("fit_mle: empty data with positive lambda returns zero") {
    GlmDataset data;
    const Eigen::VectorXd theta = fit_mle(data, 1.0, LinkFunction::logistic(), GdOptions{100, 0.01});
    CHECK(theta.norm() == 0.0);
}

TEST_CASE("fit_mle: logistic separable data improves on the zero initializer") {
    // [DERIVED] monotonicity trace: NLL strictly below NLL(0) and gradient shrinks.
    Rng rng(99);
    GlmDataset data;
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd x = rng.gaussian_vector(4);
        x /= std::max(1.0, x.norm());
        data.xs.push_back(x);
        data.ys.push_back(x[0] > 0.0 ? 1.0 : 0.0);  // separable by e1
    }
    LinkFunction link = LinkFunction::logistic();
    GdOptions opt{500, 0.02};
    const Eigen::VectorXd theta = fit_mle(data, 1.0, link, opt);
    const double nll0 = nll_value_grad(Eigen::VectorXd::Zero(4), data, 1.0, link).value;
    NllResult at_fit = nll_value_grad(theta, data, 1.0, link);
    CHECK(at_fit.value < nll0);
    CHECK(at_fit.grad.norm() <
          nll_value_grad(Eigen::VectorXd::Zero(4), data, 1.0, link).grad.norm());
}

TEST_CASE("fit_mle: warm start is honored") {
    GlmDataset data = random_dataset(10, 3, 4, true);
    Eigen::VectorXd warm = Eigen::VectorXd::Constant(3, 0.2);
    const Eigen::VectorXd a = fit_mle(data, 1.0, LinkFunction::logistic(), GdOptions{1, 1e-12});
    const Eigen::VectorXd b =
        fit_mle(data, 1.0, LinkFunction::logistic(), GdOptions{1, 1e-12}, warm);
    CHECK(a.norm() < 1e-9);          // one tiny step from zero
    CHECK((b - warm).norm() < 1e-9); // one tiny step from the warm start
}

TEST_CASE("glm_warmup_schedule: orthonormal arms, tau=2d pulls each arm twice") {
    const int d = 5;
    ArmSet arms;
    arms.features = Eigen::MatrixXd::Identity(d, d);
    std::vector<int> schedule = glm_warmup_schedule(arms, 2 * d);
    CHECK(schedule.size() == 10);
    std::vector<int> counts(d, 0);
    for (int a : schedule) counts[a]++;
    for (int c : counts) CHECK(c == 2);
}

TEST_CASE("glm_warmup_schedule: benchmark-scale tau=500 K=50 d=20") {
    Instance inst = generate_instance(RewardKind::Logistic, 50, 20, 12345);
    std::vector<int> schedule = glm_warmup_schedule(inst.arms, 500);
    CHECK(schedule.size() == 500);

    // [DERIVED] eigenvalue check: the warm-up Gram spans R^d.
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(20, 20);
    for (int a : schedule) G += inst.arms.arm(a) * inst.arms.arm(a).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("warmup_length_theory examples") {
    CHECK(warmup_length_theory(1.0, 20, 0.25) == 120);
    CHECK(warmup_length_theory(1.0, 1, 1.5) == 1);
    CHECK(warmup_length_theory(2.0, 20, 0.25) == 480);
}

TEST_CASE("lambda_theory: matches direct arithmetic and respects the floor at 1") {
    const double d = 20, M = 1.0, S = 1.0, T = 1e4, L = 1.0, delta = 0.01;
    const double expected =
        std::max(1.0, (2.0 * d * M / S) *
                          std::log(std::max(std::exp(1.0) * std::sqrt(1.0 + T * L / d),
                                            1.0 / delta)));
    CHECK(lambda_theory(20, M, S, T, L, delta) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(lambda_theory(1, 1e-9, 1.0, 2.0, 1.0, 1.0) == 1.0);
}
