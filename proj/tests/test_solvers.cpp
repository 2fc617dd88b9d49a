#include <catch2/catch_amalgamated.hpp>

#include "lqrecover/bounds.hpp"
#include "lqrecover/common.hpp"
#include "lqrecover/core.hpp"
#include "lqrecover/penalties.hpp"
#include "lqrecover/solvers.hpp"

#include <cmath>

using namespace lqrec;

namespace {

Mat worked_design() {
    Mat X(2, 3);
    X << 2, 3, 1, 2, 1, 3;
    return X;
}

PenaltySpec make(PenaltyKind kind, double lambda, double q = 0.5) {
    PenaltySpec pen;
    pen.kind = kind;
    pen.q = q;
    pen.lambda = lambda;
    return pen;
}

Mat gaussian(Index m, Index n, std::uint64_t seed) {
    Rng rng(seed);
    Mat X(m, n);
    for (Index r = 0; r < m; ++r)
        for (Index c = 0; c < n; ++c) X(r, c) = rng.normal();
    return X;
}

double objective(const Mat& X, const Vec& y, const Vec& beta, const PenaltySpec& pen) {
    return (y - X * beta).squaredNorm() / (2.0 * static_cast<double>(X.rows())) +
           penalty_vector_value(beta, pen);
}

double max_step_increase(const std::vector<double>& trace) {
    double worst = 0.0;
    for (std::size_t i = 1; i < trace.size(); ++i)
        worst = std::max(worst, trace[i] - trace[i - 1]);
    return worst;
}

}  // namespace

TEST_CASE("identity design reduces to coordinatewise thresholding") {
    const Index n = 6;
    const Mat X = Mat::Identity(n, n);
    Rng rng(41);
    const Vec y = rng.normal_vector(n) * 2.0;
    const double lambda = 0.1;

    // with X = I the loss is (1/2n)||y - beta||^2, so the minimizer is the
    // soft threshold of y at level n*lambda
    SolverOptions opts;
    opts.step = static_cast<double>(n);  // exact 1/L step solves in one move
    opts.max_iters = 50;
    opts.tol = 1e-15;
    const SolveResult res = prox_gradient_solve(X, y, make(PenaltyKind::L1, lambda), opts);
    REQUIRE(res.converged);
    for (Index i = 0; i < n; ++i) {
        const double expect =
            std::copysign(std::max(std::abs(y[i]) - static_cast<double>(n) * lambda, 0.0), y[i]);
        CHECK_THAT(res.beta_hat[i], Catch::Matchers::WithinAbs(expect, 1e-12));
    }
    // the exact step lands on the fixed point, so the residual vanishes
    CHECK(res.stationarity_residual <= 10.0 * opts.tol);
}

TEST_CASE("noiseless data with vanishing penalty recovers the least-squares fit") {
    const Mat X = gaussian(10, 4, 42);
    Rng rng(43);
    const Vec beta_star = rng.normal_vector(4);
    const Vec y = X * beta_star;

    SolverOptions opts;
    opts.max_iters = 20000;
    opts.tol = 1e-15;
    const SolveResult res = prox_gradient_solve(X, y, make(PenaltyKind::L1, 1e-10), opts);
    CHECK((res.beta_hat - beta_star).norm() <= 1e-5);
    CHECK(objective(X, y, res.beta_hat, make(PenaltyKind::L1, 1e-10)) <= 1e-9);
}

TEST_CASE("objective trace is monotone for every penalty with AUTO step") {
    Rng rng(44);
    const Mat X = gaussian(12, 20, 45);
    const Vec y = X * rng.normal_vector(20) * 0.3 + 0.05 * rng.normal_vector(12);
    const PenaltySpec pens[] = {make(PenaltyKind::L0, 0.05), make(PenaltyKind::L1, 0.05),
                                make(PenaltyKind::LQ, 0.05, 0.5),
                                make(PenaltyKind::LQ, 0.05, 2.0 / 3.0),
                                make(PenaltyKind::SCAD, 0.05), make(PenaltyKind::MCP, 0.05)};
    for (const auto& pen : pens) {
        SolverOptions opts;
        opts.max_iters = 400;
        const SolveResult res = prox_gradient_solve(X, y, pen, opts);
        CHECK(max_step_increase(res.objective_trace) <= 1e-12);
    }
    // accelerated convex solve stays monotone too (restart guard)
    SolverOptions fopts;
    fopts.accelerate = true;
    fopts.max_iters = 400;
    const SolveResult fast = prox_gradient_solve(X, y, make(PenaltyKind::L1, 0.05), fopts);
    CHECK(max_step_increase(fast.objective_trace) <= 1e-12);
}

TEST_CASE("gram-fed solver matches the design-fed solver") {
    Rng rng(46);
    const Mat X = gaussian(15, 8, 47);
    const Vec y = X * rng.normal_vector(8) * 0.5 + 0.1 * rng.normal_vector(15);
    const double m = static_cast<double>(X.rows());
    const PenaltySpec pen = make(PenaltyKind::LQ, 0.02, 0.5);

    SolverOptions opts;
    opts.max_iters = 600;
    opts.tol = 1e-12;
    const SolveResult a = prox_gradient_solve(X, y, pen, opts);
    const SolveResult b = prox_gradient_solve_gram(X.transpose() * X / m, X.transpose() * y / m,
                                                   y.squaredNorm() / m, X.rows(), pen, opts);
    CHECK((a.beta_hat - b.beta_hat).norm() <= 1e-8);
}

TEST_CASE("user-forced oversized step on a nonconvex penalty raises an error") {
    const Mat X = gaussian(8, 8, 48);
    Rng rng(49);
    const Vec y = 5.0 * rng.normal_vector(8);
    SolverOptions opts;
    opts.step = 1e8;  // far beyond 1/L
    opts.max_iters = 50;
    CHECK_THROWS_AS(prox_gradient_solve(X, y, make(PenaltyKind::LQ, 0.5, 0.5), opts),
                    SolverError);
}

TEST_CASE("converged solves sit near a prox fixed point") {
    Rng rng(50);
    const Mat X = gaussian(20, 10, 51);
    const Vec y = X * rng.normal_vector(10) * 0.5;
    SolverOptions opts;
    opts.max_iters = 50000;
    opts.tol = 1e-12;
    for (const auto& pen : {make(PenaltyKind::L1, 0.05), make(PenaltyKind::LQ, 0.05, 0.5)}) {
        const SolveResult res = prox_gradient_solve(X, y, pen, opts);
        REQUIRE(res.converged);
        CHECK(res.stationarity_residual <= 1e-5);
    }
}

TEST_CASE("exhaustive tiny solver") {
    const Mat X = worked_design();
    Vec beta_star(3);
    beta_star << 1, 0, 0;
    const Vec y = X * beta_star;

    // huge penalty forces the zero solution
    CHECK(global_solve_tiny(X, y, 1e6, 0.5).beta_hat.norm() == 0.0);

    // tiny penalty on a full-rank square system approaches the exact inverse
    Mat S(2, 2);
    S << 3, 1, 1, 2;
    Vec ys(2);
    ys << 1, 4;
    const Vec direct = S.colPivHouseholderQr().solve(ys);
    const SolveResult inv = global_solve_tiny(S, ys, 1e-12, 0.5);
    CHECK((inv.beta_hat - direct).norm() <= 1e-4);

    // the true support wins for moderate penalties on noiseless data
    for (double lambda : {1e-3, 1e-2, 1e-1}) {
        const SolveResult res = global_solve_tiny(X, y, lambda, 0.5);
        CHECK(support_of(res.beta_hat, 1e-8) == IndexSet{0});
        CHECK((res.beta_hat - beta_star).norm() <= 0.05);
    }

    CHECK_THROWS_AS(global_solve_tiny(gaussian(4, 13, 52), Vec::Zero(4), 0.1, 0.5),
                    std::invalid_argument);
}

TEST_CASE("local descent never beats the exhaustive solver") {
    const Mat X = worked_design();
    Rng rng(53);
    for (int rep = 0; rep < 10; ++rep) {
        const Vec y = X * Vec::Unit(3, 0) + 0.1 * rng.normal_vector(2);
        const PenaltySpec pen = make(PenaltyKind::LQ, 0.5, 0.5);
        const SolveResult global = global_solve_tiny(X, y, 0.5, 0.5);
        const double global_obj = objective(X, y, global.beta_hat, pen);

        SolverOptions opts;
        opts.max_iters = 4000;
        opts.tol = 1e-14;
        Vec start = rng.normal_vector(3);
        const SolveResult local = prox_gradient_solve(X, y, pen, opts, start);
        CHECK(objective(X, y, local.beta_hat, pen) >= global_obj - 1e-10);
    }
}

TEST_CASE("reweighted constrained solver basics") {
    // zero is optimal once the ball swallows the data
    {
        const Mat X = gaussian(6, 10, 54);
        Rng rng(55);
        const Vec y = rng.normal_vector(6);
        const SolveResult res = irl1_constrained_solve(X, y, y.norm() * 1.01, 0.5);
        CHECK(res.beta_hat.norm() == 0.0);
    }
    // infeasible ball is reported
    {
        Mat X(2, 1);
        X << 1, 1;
        Vec y(2);
        y << 1, -1;
        CHECK_THROWS_AS(irl1_constrained_solve(X, y, 0.1, 1.0), SolverError);
    }
}

TEST_CASE("reweighted solver recovers sparse signals from noiseless data") {
    const Mat X = gaussian(10, 20, 56) / std::sqrt(10.0);
    Vec beta_star = Vec::Zero(20);
    beta_star[3] = 1.2;
    beta_star[11] = -0.8;
    const Vec y = X * beta_star;

    SolverOptions opts;
    opts.max_iters = 4000;
    for (double q : {1.0, 0.5}) {
        const SolveResult res = irl1_constrained_solve(X, y, 1e-6, q, opts);
        CHECK((res.beta_hat - beta_star).norm() <= 1e-3);
        CHECK((y - X * res.beta_hat).norm() <= 1e-6 * (1.0 + 1e-6));
    }
}

TEST_CASE("constrained solve on the worked design stays within the recovery bound") {
    const Mat X = worked_design();
    Vec beta_star(3);
    beta_star << 1, 0, 0;
    const double sigma = 0.01;
    const double eps = epsilon_default(sigma, X.rows());
    // certified modulus of this design at q=1/2, s=t=a=1
    const double phi = 0.9607789213;
    const double bound = theorem1_bound(phi, 0.5, 1, 1, eps);

    Rng rng(57);
    int within = 0, valid = 0;
    for (int draw = 0; draw < 30; ++draw) {
        const Vec e = sigma * rng.normal_vector(2);
        if (e.norm() > eps) continue;  // the bound is claimed on this event
        ++valid;
        const Vec y = X * beta_star + e;
        SolverOptions opts;
        opts.max_iters = 4000;
        const SolveResult res = irl1_constrained_solve(X, y, eps, 0.5, opts);
        if ((res.beta_hat - beta_star).squaredNorm() <= bound) ++within;
    }
    REQUIRE(valid >= 25);
    CHECK(within >= valid * 9 / 10);
}
