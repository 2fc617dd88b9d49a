#pragma once

#include "lqrecover/common.hpp"
#include "lqrecover/core.hpp"
#include "lqrecover/penalties.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <vector>

namespace lqrec {

struct SolverOptions {
    int max_iters = 1000;
    double tol = 1e-8;       // relative objective change
    double step = 0.0;       // 0 = AUTO (1/L with L = sigma_max(X^T X)/m)
    bool accelerate = false; // momentum, convex penalties only
    std::uint64_t seed = 0;
    // optional caller-supplied upper bound on the gradient Lipschitz
    // constant; lets repeated solves on related data skip power iteration
    // while keeping AUTO-step descent guarantees
    double lipschitz_hint = 0.0;
};

struct SolveResult {
    Vec beta_hat;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
    double stationarity_residual = 0.0;
};

namespace detail {

/// Largest eigenvalue of G (symmetric PSD) by power iteration, inflated a
/// hair so 1/L is a safe step.
inline double top_eigenvalue(const Mat& G, int iters = 60) {
    const Index n = G.rows();
    Vec v = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
    double lam = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vec w = G * v;
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        lam = nw;
    }
    return lam;
}

/// Quadratic part of the objective in either design form: f(beta) =
/// (1/2m)||y - X beta||^2 expressed through X itself or through the Gram
/// matrix G = X^T X / m, c = X^T y / m, y2 = ||y||^2 / m.
struct QuadModel {
    const Mat* X = nullptr;
    const Vec* y = nullptr;
    Mat G;
    Vec c;
    double y2 = 0.0;
    Index m = 0;

    static QuadModel from_design(const Mat& X, const Vec& y) {
        QuadModel qm;
        qm.X = &X;
        qm.y = &y;
        qm.m = X.rows();
        return qm;
    }

    static QuadModel from_gram(Mat G, Vec c, double y2, Index m) {
        QuadModel qm;
        qm.G = std::move(G);
        qm.c = std::move(c);
        qm.y2 = y2;
        qm.m = m;
        return qm;
    }

    bool gram_mode() const { return X == nullptr; }
    Index dim() const { return gram_mode() ? G.rows() : X->cols(); }

    double value(const Vec& beta) const {
        if (gram_mode()) {
            const double v = 0.5 * (beta.dot(G * beta) + y2) - c.dot(beta);
            return std::max(v, 0.0);  // guard rounding at near-exact fits
        }
        return (*y - *X * beta).squaredNorm() / (2.0 * static_cast<double>(m));
    }

    /// Value and gradient together (one matrix product in design mode).
    double value_grad(const Vec& beta, Vec& grad) const {
        if (gram_mode()) {
            const Vec Gb = G * beta;
            grad = Gb - c;
            return std::max(0.5 * (beta.dot(Gb) + y2) - c.dot(beta), 0.0);
        }
        const Vec resid = *X * beta - *y;
        grad = X->transpose() * resid / static_cast<double>(m);
        return resid.squaredNorm() / (2.0 * static_cast<double>(m));
    }

    double lipschitz() const {
        if (gram_mode()) return top_eigenvalue(G);
        return top_eigenvalue(X->transpose() * *X) / static_cast<double>(m);
    }
};

inline double prox_tau(double step, const PenaltySpec& pen) {
    const bool bare = pen.kind == PenaltyKind::L0 || pen.kind == PenaltyKind::L1 ||
                      pen.kind == PenaltyKind::LQ;
    return bare ? step * pen.lambda : step;
}

inline SolveResult prox_gradient_core(const QuadModel& qm, const PenaltySpec& pen,
                                      const SolverOptions& opts, Vec beta) {
    pen.validate();
    if (beta.size() != qm.dim()) throw std::invalid_argument("prox_gradient: beta0 size mismatch");
    double step = opts.step;
    const bool user_step = step > 0.0;
    if (!user_step) {
        const double L = opts.lipschitz_hint > 0.0 ? opts.lipschitz_hint : qm.lipschitz();
        step = L > 0.0 ? 1.0 / (1.02 * L) : 1.0;
    }

    SolveResult res;
    Vec grad(qm.dim());
    double fval = qm.value_grad(beta, grad);
    double obj = fval + penalty_vector_value(beta, pen);
    const double obj0 = obj;
    res.objective_trace.push_back(obj);

    // momentum state (convex penalties only)
    const bool accel = opts.accelerate && pen.convex();
    Vec beta_prev = beta;
    double t_momentum = 1.0;

    bool converged = false;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        Vec cand;
        double cand_obj = std::numeric_limits<double>::infinity();
        bool accepted = false;

        if (accel) {
            // monotone FISTA: try the extrapolated step, fall back to the
            // plain step whenever it would raise the objective
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
            Vec z = beta + ((t_momentum - 1.0) / t_next) * (beta - beta_prev);
            Vec gz(qm.dim());
            qm.value_grad(z, gz);
            Vec y_cand = prox_penalty_vector(z - step * gz, prox_tau(step, pen), pen);
            const double y_obj = qm.value(y_cand) + penalty_vector_value(y_cand, pen);
            if (y_obj <= obj) {
                cand = std::move(y_cand);
                cand_obj = y_obj;
                accepted = true;
                t_momentum = t_next;
            } else {
                t_momentum = 1.0;  // restart momentum
            }
        }
        if (!accepted && user_step) {
            // honor a user-forced step exactly; a nonconvex penalty with an
            // oversized step may then diverge, which we surface as an error
            cand = prox_penalty_vector(beta - step * grad, prox_tau(step, pen), pen);
            cand_obj = qm.value(cand) + penalty_vector_value(cand, pen);
            if (cand_obj > 10.0 * std::max(obj0, 1e-300))
                throw SolverError("prox_gradient: divergence with user-forced step");
            accepted = true;
        }
        if (!accepted) {
            // AUTO step: accept only objective-nonincreasing moves, halving
            // the step if rounding ever breaks the majorization guarantee
            double local_step = step;
            for (int half = 0; half < 40; ++half) {
                cand = prox_penalty_vector(beta - local_step * grad, prox_tau(local_step, pen), pen);
                cand_obj = qm.value(cand) + penalty_vector_value(cand, pen);
                if (cand_obj <= obj) {
                    accepted = true;
                    break;
                }
                local_step *= 0.5;
            }
            if (!accepted) break;  // objective plateaued to rounding level
        }

        beta_prev = beta;
        beta = std::move(cand);
        const double prev_obj = obj;
        obj = cand_obj;
        res.objective_trace.push_back(obj);
        fval = qm.value_grad(beta, grad);
        if (std::abs(prev_obj - obj) <= opts.tol * std::max(1.0, std::abs(prev_obj))) {
            converged = true;
            ++it;
            break;
        }
    }

    res.beta_hat = beta;
    res.iterations = it;
    res.converged = converged;
    const Vec fixed = prox_penalty_vector(beta - step * grad, prox_tau(step, pen), pen);
    res.stationarity_residual = (beta - fixed).norm();
    return res;
}

}  // namespace detail

/// Proximal gradient for (1/2m)||y - X beta||^2 + penalty. AUTO step is
/// 1/L; every accepted step is objective-nonincreasing (majorization plus
/// an explicit guard), so the trace is monotone for all penalties.
inline SolveResult prox_gradient_solve(const Mat& X, const Vec& y, const PenaltySpec& pen,
                                       const SolverOptions& opts = {}, Vec beta0 = Vec()) {
    if (X.rows() != y.size()) throw std::invalid_argument("prox_gradient_solve: X rows != y size");
    if (beta0.size() == 0) beta0 = Vec::Zero(X.cols());
    return detail::prox_gradient_core(detail::QuadModel::from_design(X, y), pen, opts,
                                      std::move(beta0));
}

/// Same solver fed by precomputed Gram data G = X^T X / m, c = X^T y / m,
/// y2 = ||y||^2 / m. Preferable when the same design serves many solves.
inline SolveResult prox_gradient_solve_gram(Mat G, Vec c, double y2, Index m,
                                            const PenaltySpec& pen, const SolverOptions& opts = {},
                                            Vec beta0 = Vec()) {
    if (G.rows() != G.cols() || G.rows() != c.size())
        throw std::invalid_argument("prox_gradient_solve_gram: shape mismatch");
    if (beta0.size() == 0) beta0 = Vec::Zero(G.rows());
    return detail::prox_gradient_core(
        detail::QuadModel::from_gram(std::move(G), std::move(c), y2, m), pen, opts,
        std::move(beta0));
}

/// Constrained lq minimization min ||beta||_q^q s.t. ||y - X beta||_2 <= eps,
/// solved by iterative reweighting: each outer pass minimizes a weighted l1
/// surrogate over the residual ball via a primal-dual splitting, with the
/// smoothing offset delta_k = max(0.1 * 2^-k, 1e-8).
inline SolveResult irl1_constrained_solve(const Mat& X, const Vec& y, double epsilon, double q,
                                          const SolverOptions& opts = {}) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("irl1_constrained_solve: epsilon <= 0");
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("irl1_constrained_solve: q not in (0,1]");
    if (X.rows() != y.size()) throw std::invalid_argument("irl1_constrained_solve: shape mismatch");
    const Index n = X.cols();

    const double Xnorm = std::sqrt(detail::top_eigenvalue(X.transpose() * X));
    const double sigma_pd = Xnorm > 0.0 ? 1.0 / Xnorm : 1.0;
    const double tau_pd = sigma_pd;

    // min-norm least squares, used as feasibility repair anchor
    const Vec beta_ls = X.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
    if ((y - X * beta_ls).norm() > epsilon * (1.0 + 1e-6))
        throw SolverError("irl1_constrained_solve: residual ball is empty");

    Vec beta = Vec::Zero(n);
    if ((y - X * beta).norm() > epsilon) beta = beta_ls;

    SolveResult res;
    res.objective_trace.push_back(lq_power_sum(beta, q));

    const int outer_iters = q == 1.0 ? 1 : std::max(8, opts.max_iters / 250);
    const int inner_iters = std::max(200, opts.max_iters);
    Vec w = Vec::Ones(n);
    for (int k = 0; k < outer_iters; ++k) {
        if (q < 1.0) {
            const double delta = std::max(0.1 * std::pow(2.0, -k), 1e-8);
            for (Index i = 0; i < n; ++i) w[i] = std::pow(std::abs(beta[i]) + delta, q - 1.0);
        }
        // primal-dual iterations for min sum w_i |beta_i| s.t. ||y-X beta|| <= eps
        Vec z = Vec::Zero(X.rows());
        Vec bbar = beta;
        Vec beta_in = beta;
        for (int it = 0; it < inner_iters; ++it) {
            // dual: prox of the conjugate of the ball indicator
            Vec u = z + sigma_pd * (X * bbar);
            Vec v = u / sigma_pd;
            Vec proj = v - y;
            const double pn = proj.norm();
            if (pn > epsilon) proj *= epsilon / pn;
            proj += y;
            z = u - sigma_pd * proj;
            // primal: weighted soft threshold
            Vec beta_next = beta_in - tau_pd * (X.transpose() * z);
            for (Index i = 0; i < n; ++i) {
                const double thr = tau_pd * w[i];
                beta_next[i] = std::copysign(std::max(std::abs(beta_next[i]) - thr, 0.0),
                                             beta_next[i]);
            }
            bbar = 2.0 * beta_next - beta_in;
            const double move = (beta_next - beta_in).norm();
            beta_in = std::move(beta_next);
            if (move <= 1e-10 * std::max(1.0, beta_in.norm()) && it > 10) break;
        }
        beta = beta_in;
        // repair: walk toward the least-squares anchor until feasible
        double resid = (y - X * beta).norm();
        if (resid > epsilon * (1.0 + 1e-6)) {
            double lo = 0.0, hi = 1.0;
            for (int bis = 0; bis < 60; ++bis) {
                const double mid = 0.5 * (lo + hi);
                const Vec cand = beta + mid * (beta_ls - beta);
                ((y - X * cand).norm() <= epsilon ? hi : lo) = mid;
            }
            beta += hi * (beta_ls - beta);
            resid = (y - X * beta).norm();
        }
        res.objective_trace.push_back(lq_power_sum(beta, q));
        const auto& tr = res.objective_trace;
        if (tr.size() >= 2 &&
            std::abs(tr[tr.size() - 2] - tr.back()) <= opts.tol * std::max(1.0, tr[tr.size() - 2])) {
            res.converged = true;
            break;
        }
    }

    res.beta_hat = beta;
    res.iterations = static_cast<int>(res.objective_trace.size()) - 1;
    res.stationarity_residual = std::max((y - X * beta).norm() - epsilon, 0.0);
    return res;
}

/// Exact global minimizer of (1/2m)||y - X beta||^2 + lambda ||beta||_q^q
/// for tiny n, by enumerating all supports and descending on each restricted
/// problem from several starts.
inline SolveResult global_solve_tiny(const Mat& X, const Vec& y, double lambda, double q,
                                     Index max_n = 12, const SolverOptions& opts = {}) {
    const Index n = X.cols();
    if (n > max_n) throw std::invalid_argument("global_solve_tiny: n exceeds max_n");
    if (!(lambda > 0.0)) throw std::invalid_argument("global_solve_tiny: lambda <= 0");
    const double m = static_cast<double>(X.rows());

    PenaltySpec pen;
    pen.lambda = lambda;
    if (q == 1.0) {
        pen.kind = PenaltyKind::L1;
    } else {
        pen.kind = PenaltyKind::LQ;
        pen.q = q;
    }

    Rng rng(mix_seed({opts.seed, 0x676c6f62ULL}));
    Vec best_beta = Vec::Zero(n);
    double best_obj = y.squaredNorm() / (2.0 * m);
    std::vector<double> best_trace{best_obj};

    SolverOptions sub = opts;
    sub.max_iters = std::max(opts.max_iters, 2000);
    sub.tol = std::min(opts.tol, 1e-12);

    for (std::uint64_t mask = 1; mask < (1ULL << n); ++mask) {
        IndexSet S;
        for (Index i = 0; i < n; ++i)
            if (mask & (1ULL << i)) S.push_back(i);
        const Index k = static_cast<Index>(S.size());
        Mat Xs(X.rows(), k);
        for (Index j = 0; j < k; ++j) Xs.col(j) = X.col(S[static_cast<std::size_t>(j)]);

        const Vec ls = Xs.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
        std::vector<Vec> starts{ls, Vec::Zero(k)};
        for (int extra = 0; extra < 8; ++extra)
            starts.push_back(ls + 0.5 * rng.normal_vector(k));

        for (const Vec& b0 : starts) {
            SolveResult sr = prox_gradient_solve(Xs, y, pen, sub, b0);
            const double obj = (y - Xs * sr.beta_hat).squaredNorm() / (2.0 * m) +
                               penalty_vector_value(sr.beta_hat, pen);
            if (obj < best_obj - 1e-15) {
                best_obj = obj;
                best_beta = Vec::Zero(n);
                for (Index j = 0; j < k; ++j)
                    best_beta[S[static_cast<std::size_t>(j)]] = sr.beta_hat[j];
                best_trace = sr.objective_trace;
            }
        }
    }

    SolveResult res;
    res.beta_hat = best_beta;
    res.objective_trace = best_trace;
    res.iterations = static_cast<int>(best_trace.size()) - 1;
    res.converged = true;
    res.stationarity_residual = 0.0;
    return res;
}

}  // namespace lqrec
