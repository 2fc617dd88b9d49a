#pragma once

#include "lqrecover/bounds.hpp"
#include "lqrecover/common.hpp"
#include "lqrecover/core.hpp"
#include "lqrecover/io.hpp"
#include "lqrecover/parallel.hpp"
#include "lqrecover/penalties.hpp"
#include "lqrecover/regularity.hpp"
#include "lqrecover/solvers.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace lqrec {

struct RegressionInstance {
    Mat X;
    Vec beta_star;
    Vec e;
    Vec y;
    double sigma = 0.0;
};

struct CovarianceSpec {
    enum class Kind { IDENTITY, TOEPLITZ, EXPLICIT };
    Kind kind = Kind::IDENTITY;
    double rho = 0.0;  // Toeplitz correlation
    Mat matrix;        // explicit covariance

    Mat materialize(Index n) const {
        switch (kind) {
            case Kind::IDENTITY:
                return Mat::Identity(n, n);
            case Kind::TOEPLITZ: {
                Mat S(n, n);
                for (Index i = 0; i < n; ++i)
                    for (Index j = 0; j < n; ++j)
                        S(i, j) = std::pow(rho, std::abs(static_cast<double>(i - j)));
                return S;
            }
            case Kind::EXPLICIT:
                if (matrix.rows() != n || matrix.cols() != n)
                    throw std::invalid_argument("CovarianceSpec: explicit matrix has wrong size");
                return matrix;
        }
        return Mat::Identity(n, n);
    }

    /// Symmetric square root; rejects covariances with eigenvalues below
    /// -1e-8 and clamps smaller negatives caused by rounding.
    Mat sqrt_matrix(Index n) const {
        if (kind == Kind::IDENTITY) return Mat();  // empty = skip the multiply
        const Mat S = materialize(n);
        if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10)
            throw std::invalid_argument("CovarianceSpec: covariance not symmetric");
        Eigen::SelfAdjointEigenSolver<Mat> es(S);
        if (es.eigenvalues().minCoeff() < -1e-8)
            throw std::invalid_argument("CovarianceSpec: covariance not positive semidefinite");
        Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
    }
};

/// Gaussian-ensemble instance: X has i.i.d. N(0, Sigma) rows, beta_star has
/// s standard-normal nonzeros (redrawn while below min_magnitude) at
/// uniformly random positions, e ~ N(0, sigma^2 I). Identical seeds yield
/// identical instances bit for bit.
inline RegressionInstance generate_instance(Index m, Index n, Index s, double sigma,
                                            const CovarianceSpec& cov, std::uint64_t seed,
                                            double min_magnitude = 0.1) {
    if (s > n || s < 0 || m < 1) throw std::invalid_argument("generate_instance: bad shape");
    if (sigma < 0.0) throw std::invalid_argument("generate_instance: negative sigma");
    Rng rng(seed);

    RegressionInstance inst;
    inst.sigma = sigma;
    inst.X = Mat(m, n);
    for (Index r = 0; r < m; ++r)
        for (Index c = 0; c < n; ++c) inst.X(r, c) = rng.normal();
    const Mat S = cov.sqrt_matrix(n);
    if (S.size() > 0) inst.X = inst.X * S;

    IndexSet positions(static_cast<std::size_t>(n));
    std::iota(positions.begin(), positions.end(), Index{0});
    rng.shuffle(positions);
    positions.resize(static_cast<std::size_t>(s));
    std::sort(positions.begin(), positions.end());

    inst.beta_star = Vec::Zero(n);
    for (Index i : positions) {
        double v = rng.normal();
        while (std::abs(v) < min_magnitude) v = rng.normal();
        inst.beta_star[i] = v;
    }

    inst.e = Vec(m);
    for (Index r = 0; r < m; ++r) inst.e[r] = sigma * rng.normal();
    inst.y = inst.X * inst.beta_star + inst.e;
    return inst;
}

/// Sensitivity and specificity of the estimated support {|beta_i| > tol}.
/// Conventions: sensitivity = 1 with no true positives to find, specificity
/// = 1 with no true negatives to keep.
inline std::pair<double, double> support_metrics(const Vec& beta_hat, const Vec& beta_star,
                                                 double support_tol) {
    if (beta_hat.size() != beta_star.size())
        throw std::invalid_argument("support_metrics: length mismatch");
    Index tp = 0, fn = 0, tn = 0, fp = 0;
    for (Index i = 0; i < beta_hat.size(); ++i) {
        const bool est = std::abs(beta_hat[i]) > support_tol;
        const bool truth = beta_star[i] != 0.0;
        if (truth)
            (est ? tp : fn)++;
        else
            (est ? fp : tn)++;
    }
    const double sens = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double spec = (tn + fp) == 0 ? 1.0 : static_cast<double>(tn) / static_cast<double>(tn + fp);
    return {sens, spec};
}

/// One estimator entry in a sweep: a penalty family solved in regularized
/// form (lambda by cross-validation), or the constrained form solved by
/// reweighting with epsilon from the chi-square rule.
struct MethodSpec {
    std::string name;
    PenaltyKind kind = PenaltyKind::L1;
    double q = 0.5;  // for LQ
    bool constrained = false;
    double constrained_q = 1.0;

    PenaltySpec penalty(double lambda) const {
        PenaltySpec pen;
        pen.kind = kind;
        pen.q = q;
        pen.lambda = lambda;
        return pen;
    }

    /// q used for the residual cone check (SCAD/MCP/L0 behave like q=1 there).
    double cone_q() const {
        if (constrained) return constrained_q;
        return kind == PenaltyKind::LQ ? q : 1.0;
    }
};

inline std::vector<MethodSpec> paper_methods() {
    std::vector<MethodSpec> ms;
    ms.push_back({"q=0", PenaltyKind::L0, 0.5, false, 1.0});
    ms.push_back({"q=1/2", PenaltyKind::LQ, 0.5, false, 1.0});
    ms.push_back({"q=2/3", PenaltyKind::LQ, 2.0 / 3.0, false, 1.0});
    ms.push_back({"q=1", PenaltyKind::L1, 0.5, false, 1.0});
    ms.push_back({"scad", PenaltyKind::SCAD, 0.5, false, 1.0});
    ms.push_back({"mcp", PenaltyKind::MCP, 0.5, false, 1.0});
    return ms;
}

struct ExperimentConfig {
    Index n = 1024;
    Index s = 102;
    std::vector<Index> sample_sizes;
    double sigma = 0.01;
    int num_trials = 100;
    std::vector<MethodSpec> methods;
    int cv_folds = 10;
    std::vector<double> lambda_grid;  // descending after normalization
    double support_tol = 1e-4;
    std::uint64_t master_seed = 0;
    int jobs = 0;
    CovarianceSpec cov;
};

inline std::vector<double> default_lambda_grid() {
    // log-spaced, descending so warm starts walk from sparse to dense
    std::vector<double> grid;
    for (int i = 6; i >= 0; --i) grid.push_back(std::pow(10.0, -5.0 + 4.0 * i / 6.0));
    return grid;
}

/// The published-table setup: n=1024, 10% sparsity, noise level 0.01, the
/// six-step sample-size ladder, 10-fold CV, 100 trials.
inline ExperimentConfig paper_preset() {
    ExperimentConfig cfg;
    cfg.n = 1024;
    cfg.s = 102;
    cfg.sample_sizes = {177, 355, 532, 710, 887, 976};
    cfg.sigma = 0.01;
    cfg.num_trials = 100;
    cfg.methods = paper_methods();
    cfg.cv_folds = 10;
    cfg.lambda_grid = default_lambda_grid();
    cfg.support_tol = 1e-4;
    return cfg;
}

/// Sample sizes of the form m = ceil(c * s * ln n).
inline Index sample_size_rule(double c, Index s, Index n) {
    return static_cast<Index>(
        std::ceil(c * static_cast<double>(s) * std::log(static_cast<double>(n))));
}

struct TrialReport {
    std::string method;
    Index m = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    double lambda = 0.0;
    double l2_error_sq = 0.0;
    double prediction_error = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    bool dominant_property_held = false;
    bool converged = false;
    int iterations = 0;
    double max_trace_increase = 0.0;  // over every solve in the trial
    std::string error;                // nonempty when the trial failed
};

struct AggregateRow {
    std::string method;
    Index m = 0;
    int trials = 0;
    double sens_mean = 0.0, sens_ci = 0.0;
    double spec_mean = 0.0, spec_ci = 0.0;
    double l2_mean = 0.0, l2_ci = 0.0;
    double pred_mean = 0.0, pred_ci = 0.0;
};

struct SweepResult {
    std::vector<TrialReport> trials;      // fixed order: method-major, then m, then trial
    std::vector<AggregateRow> aggregate;  // same outer order
    double max_trace_increase = 0.0;
};

namespace detail {

inline double max_increase(const std::vector<double>& trace) {
    double worst = 0.0;
    for (std::size_t i = 1; i < trace.size(); ++i)
        worst = std::max(worst, trace[i] - trace[i - 1]);
    return worst;
}

/// Precomputed full-data Gram quantities shared by every fold of a CV run.
struct GramCache {
    Mat G;       // X^T X (unnormalized)
    Vec c;       // X^T y
    double y2;   // ||y||^2
    double topeig;  // sigma_max(X^T X), an upper bound for every row-subset Gram

    static GramCache build(const Mat& X, const Vec& y) {
        GramCache g;
        g.G.noalias() = X.transpose() * X;
        g.c.noalias() = X.transpose() * y;
        g.y2 = y.squaredNorm();
        g.topeig = top_eigenvalue(g.G);
        return g;
    }
};

/// Warm-started descending-lambda path on fixed Gram data; returns the
/// solution at the last grid value and exposes each solve to the visitor.
template <typename Visit>
Vec solve_path_gram(const Mat& G, const Vec& c, double y2, Index m, const MethodSpec& method,
                    const std::vector<double>& grid, double lipschitz, const SolverOptions& base,
                    Visit&& visit) {
    Vec beta = Vec::Zero(G.rows());
    Vec l1_warm = Vec::Zero(G.rows());
    for (double lambda : grid) {
        SolverOptions opts = base;
        opts.lipschitz_hint = lipschitz;
        opts.accelerate = method.kind == PenaltyKind::L1;
        SolveResult sr =
            prox_gradient_solve_gram(G, c, y2, m, method.penalty(lambda), opts, beta);
        if (method.kind != PenaltyKind::L1) {
            // nonconvex fits are local; also try a start from the convex
            // relaxation at the same lambda and keep the better objective.
            // the sparse-to-dense warm start wanders into bad basins on hard
            // instances, and this second candidate catches those
            SolverOptions l1o = base;
            l1o.lipschitz_hint = lipschitz;
            l1o.accelerate = true;
            PenaltySpec l1;
            l1.kind = PenaltyKind::L1;
            l1.lambda = lambda;
            l1_warm = prox_gradient_solve_gram(G, c, y2, m, l1, l1o, l1_warm).beta_hat;
            if ((l1_warm - beta).norm() != 0.0) {
                SolveResult alt =
                    prox_gradient_solve_gram(G, c, y2, m, method.penalty(lambda), opts, l1_warm);
                if (alt.objective_trace.back() < sr.objective_trace.back()) sr = std::move(alt);
            }
        }
        beta = sr.beta_hat;
        visit(lambda, sr);
    }
    return beta;
}

}  // namespace detail

/// 10-fold (by default) cross-validation for a regularized method. Rows are
/// shuffled once, folds are contiguous blocks of the shuffled order, the
/// held-out quadratic loss is averaged per lambda, and ties take the larger
/// (sparser) lambda. Deterministic given the seed.
inline double cross_validate_lambda(const Mat& X, const Vec& y, const MethodSpec& method,
                                    std::vector<double> lambda_grid, int folds,
                                    std::uint64_t seed, double* trace_increase = nullptr,
                                    const detail::GramCache* cache = nullptr) {
    const Index m = X.rows();
    if (folds < 2 || m < folds) throw std::invalid_argument("cross_validate_lambda: bad folds");
    if (lambda_grid.empty()) throw std::invalid_argument("cross_validate_lambda: empty grid");
    std::sort(lambda_grid.begin(), lambda_grid.end(), std::greater<double>());

    detail::GramCache local;
    if (!cache) {
        local = detail::GramCache::build(X, y);
        cache = &local;
    }

    std::vector<Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng(mix_seed({seed, 0x63762d666f6c64ULL}));
    rng.shuffle(perm);

    std::vector<double> cv_err(lambda_grid.size(), 0.0);
    double worst_increase = 0.0;

    // fold solves must be run to convergence: an under-converged dense fit
    // hides the held-out penalty for overfitting and drags the selection
    // toward the smallest lambda
    SolverOptions cv_opts;
    cv_opts.max_iters = 400;
    cv_opts.tol = 1e-8;

    for (int f = 0; f < folds; ++f) {
        const std::size_t lo = static_cast<std::size_t>(f) * static_cast<std::size_t>(m) /
                               static_cast<std::size_t>(folds);
        const std::size_t hi = static_cast<std::size_t>(f + 1) * static_cast<std::size_t>(m) /
                               static_cast<std::size_t>(folds);
        if (hi == lo) throw std::invalid_argument("cross_validate_lambda: empty fold");
        const Index held = static_cast<Index>(hi - lo);
        const Index mtrain = m - held;

        Mat Xh(held, X.cols());
        Vec yh(held);
        for (Index i = 0; i < held; ++i) {
            Xh.row(i) = X.row(perm[lo + static_cast<std::size_t>(i)]);
            yh[i] = y[perm[lo + static_cast<std::size_t>(i)]];
        }
        // downdate the full Gram instead of rebuilding from scratch
        Mat Gt = cache->G;
        Gt.noalias() -= Xh.transpose() * Xh;
        Vec ct = cache->c;
        ct.noalias() -= Xh.transpose() * yh;
        const double y2t = cache->y2 - yh.squaredNorm();
        const double md = static_cast<double>(mtrain);
        Gt /= md;
        ct /= md;

        std::size_t gi = 0;
        detail::solve_path_gram(Gt, ct, std::max(y2t, 0.0) / md, mtrain, method, lambda_grid,
                                cache->topeig / md, cv_opts, [&](double, const SolveResult& sr) {
                                    const double err = (yh - Xh * sr.beta_hat).squaredNorm() /
                                                       (2.0 * static_cast<double>(held));
                                    cv_err[gi++] += err;
                                    worst_increase = std::max(
                                        worst_increase, detail::max_increase(sr.objective_trace));
                                });
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < cv_err.size(); ++i)
        if (cv_err[i] < cv_err[best]) best = i;
    // ties keep the larger (sparser) lambda; a tie is anything within 0.1%
    // of the minimum, which is below the fold-resampling noise
    for (std::size_t i = 0; i < best; ++i)
        if (cv_err[i] <= cv_err[best] * (1.0 + 1e-3)) {
            best = i;
            break;
        }
    if (trace_increase) *trace_increase = std::max(*trace_increase, worst_increase);
    return lambda_grid[best];
}

/// One sweep cell: generate, tune, solve, score.
inline TrialReport run_trial(const ExperimentConfig& cfg, const MethodSpec& method,
                             std::size_t method_idx, Index m, int trial) {
    TrialReport rep;
    rep.method = method.name;
    rep.m = m;
    rep.trial = trial;
    rep.seed = mix_seed({cfg.master_seed, static_cast<std::uint64_t>(m),
                         static_cast<std::uint64_t>(method_idx),
                         static_cast<std::uint64_t>(trial)});

    const RegressionInstance inst =
        generate_instance(m, cfg.n, cfg.s, cfg.sigma, cfg.cov, rep.seed);

    Vec beta_hat;
    if (method.constrained) {
        const double eps = epsilon_experiment(cfg.sigma, m);
        SolverOptions opts;
        opts.max_iters = 2000;
        opts.tol = 1e-8;
        const SolveResult sr = irl1_constrained_solve(inst.X, inst.y, eps, method.constrained_q, opts);
        beta_hat = sr.beta_hat;
        rep.converged = sr.converged;
        rep.iterations = sr.iterations;
        rep.lambda = 0.0;
    } else {
        const auto cache = detail::GramCache::build(inst.X, inst.y);
        std::vector<double> grid = cfg.lambda_grid.empty() ? default_lambda_grid() : cfg.lambda_grid;
        rep.lambda = cross_validate_lambda(inst.X, inst.y, method, grid, cfg.cv_folds, rep.seed,
                                           &rep.max_trace_increase, &cache);
        // final fit: warm-started path on the full data down to the chosen
        // lambda, then a tighter polish there
        std::sort(grid.begin(), grid.end(), std::greater<double>());
        std::vector<double> path;
        for (double l : grid) {
            path.push_back(l);
            if (l == rep.lambda) break;
        }
        const double md = static_cast<double>(m);
        const Mat G = cache.G / md;
        const Vec c = cache.c / md;
        const double y2 = cache.y2 / md;
        SolverOptions path_opts;
        path_opts.max_iters = 250;
        path_opts.tol = 1e-7;
        Vec warm = detail::solve_path_gram(G, c, y2, m, method, path, cache.topeig / md,
                                           path_opts, [&](double, const SolveResult& sr) {
                                               rep.max_trace_increase = std::max(
                                                   rep.max_trace_increase,
                                                   detail::max_increase(sr.objective_trace));
                                           });
        SolverOptions fin;
        fin.max_iters = 2000;
        fin.tol = 1e-10;
        fin.lipschitz_hint = cache.topeig / md;
        fin.accelerate = method.kind == PenaltyKind::L1;
        const SolveResult sr =
            prox_gradient_solve_gram(G, c, y2, m, method.penalty(rep.lambda), fin, warm);
        beta_hat = sr.beta_hat;
        rep.converged = sr.converged;
        rep.iterations = sr.iterations;
        rep.max_trace_increase =
            std::max(rep.max_trace_increase, detail::max_increase(sr.objective_trace));
    }

    const Vec delta = beta_hat - inst.beta_star;
    rep.l2_error_sq = delta.squaredNorm();
    rep.prediction_error = (inst.X * delta).squaredNorm() / static_cast<double>(m);
    const auto [sens, spec] = support_metrics(beta_hat, inst.beta_star, cfg.support_tol);
    rep.sensitivity = sens;
    rep.specificity = spec;
    ConeParams cone{method.cone_q(), std::max<Index>(cfg.s, 1),
                    method.constrained ? 1.0 : 3.0};
    rep.dominant_property_held = cone_membership(delta, cone);
    return rep;
}

/// Full Monte-Carlo sweep. Work items are independent and seeded from
/// (master_seed, m, method, trial), so any worker count gives identical
/// results; aggregation runs in a fixed order.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
    if (cfg.methods.empty() || cfg.sample_sizes.empty() || cfg.num_trials < 1)
        throw std::invalid_argument("run_sweep: empty configuration");
    struct Item {
        std::size_t method_idx;
        Index m;
        int trial;
    };
    std::vector<Item> items;
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
        for (Index m : cfg.sample_sizes)
            for (int t = 0; t < cfg.num_trials; ++t) items.push_back({mi, m, t});

    SweepResult out;
    out.trials.resize(items.size());
    parallel_for(cfg.jobs, items.size(), [&](std::size_t i) {
        const Item& it = items[i];
        try {
            out.trials[i] = run_trial(cfg, cfg.methods[it.method_idx], it.method_idx, it.m, it.trial);
        } catch (const std::exception& ex) {
            TrialReport rep;
            rep.method = cfg.methods[it.method_idx].name;
            rep.m = it.m;
            rep.trial = it.trial;
            rep.error = ex.what();
            out.trials[i] = rep;
        }
    });

    // aggregate per (method, m) in the item order
    std::size_t pos = 0;
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        for (Index m : cfg.sample_sizes) {
            AggregateRow row;
            row.method = cfg.methods[mi].name;
            row.m = m;
            std::vector<double> sens, spec, l2, pred;
            for (int t = 0; t < cfg.num_trials; ++t, ++pos) {
                const TrialReport& rep = out.trials[pos];
                if (!rep.error.empty()) continue;
                sens.push_back(rep.sensitivity);
                spec.push_back(rep.specificity);
                l2.push_back(rep.l2_error_sq);
                pred.push_back(rep.prediction_error);
                out.max_trace_increase = std::max(out.max_trace_increase, rep.max_trace_increase);
            }
            row.trials = static_cast<int>(sens.size());
            auto mean_ci = [](const std::vector<double>& v, double& mean, double& ci) {
                if (v.empty()) {
                    mean = ci = 0.0;
                    return;
                }
                mean = 0.0;
                for (double x : v) mean += x;
                mean /= static_cast<double>(v.size());
                double var = 0.0;
                for (double x : v) var += (x - mean) * (x - mean);
                var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
                ci = 1.959963984540054 * std::sqrt(var / static_cast<double>(v.size()));
            };
            mean_ci(sens, row.sens_mean, row.sens_ci);
            mean_ci(spec, row.spec_mean, row.spec_ci);
            mean_ci(l2, row.l2_mean, row.l2_ci);
            mean_ci(pred, row.pred_mean, row.pred_ci);
            out.aggregate.push_back(row);
        }
    }
    return out;
}

/// Dominant-property harness: at the given scale, the rate at which the
/// residual of the constrained solve lies in C_q(s,1) and the residual of
/// the regularized solve (lambda from the closed-form rule with a=3) lies
/// in C_q(s,3).
struct DominantConfig {
    Index n = 256;
    Index s = 8;
    Index m = 178;
    double sigma = 0.01;
    int num_trials = 200;
    double q = 0.5;
    std::uint64_t master_seed = 0;
    int jobs = 0;
};

struct DominantRates {
    double constrained = 0.0;
    double regularized = 0.0;
};

inline DominantRates dominant_property_rate(const DominantConfig& cfg) {
    std::vector<int> con(static_cast<std::size_t>(cfg.num_trials), 0);
    std::vector<int> reg(static_cast<std::size_t>(cfg.num_trials), 0);
    CovarianceSpec identity;

    parallel_for(cfg.jobs, static_cast<std::size_t>(cfg.num_trials), [&](std::size_t t) {
        const std::uint64_t seed =
            mix_seed({cfg.master_seed, static_cast<std::uint64_t>(cfg.m), 0ULL,
                      static_cast<std::uint64_t>(t)});
        const RegressionInstance inst =
            generate_instance(cfg.m, cfg.n, cfg.s, cfg.sigma, identity, seed);

        // constrained route
        {
            const double eps = epsilon_default(inst.sigma, cfg.m);
            SolverOptions opts;
            opts.max_iters = 1500;
            const SolveResult sr = irl1_constrained_solve(inst.X, inst.y, eps, cfg.q, opts);
            ConeParams cone{cfg.q, cfg.s, 1.0};
            con[t] = cone_membership(sr.beta_hat - inst.beta_star, cone) ? 1 : 0;
        }
        // regularized route with the closed-form lambda
        {
            TuningParams tp;
            tp.sigma = inst.sigma;
            tp.m = cfg.m;
            tp.n = cfg.n;
            tp.a = 3.0;
            tp.theta = 0.0;
            tp.b = 0.0;
            tp.q = cfg.q;
            tp.r = std::max(lq_quasi_norm(inst.beta_star, cfg.q), 1e-6);
            const double lambda = lambda_default(tp);

            // stabilize the nonconvex solve by starting from the l1 solution
            SolverOptions l1opts;
            l1opts.max_iters = 800;
            l1opts.accelerate = true;
            PenaltySpec l1;
            l1.kind = PenaltyKind::L1;
            l1.lambda = lambda;
            const Vec init = prox_gradient_solve(inst.X, inst.y, l1, l1opts).beta_hat;

            PenaltySpec pen;
            pen.lambda = lambda;
            if (cfg.q == 1.0) {
                pen.kind = PenaltyKind::L1;
            } else {
                pen.kind = PenaltyKind::LQ;
                pen.q = cfg.q;
            }
            SolverOptions opts;
            opts.max_iters = 1500;
            opts.tol = 1e-10;
            const SolveResult sr = prox_gradient_solve(inst.X, inst.y, pen, opts, init);
            ConeParams cone{cfg.q, cfg.s, 3.0};
            reg[t] = cone_membership(sr.beta_hat - inst.beta_star, cone) ? 1 : 0;
        }
    });

    DominantRates rates;
    for (int v : con) rates.constrained += v;
    for (int v : reg) rates.regularized += v;
    rates.constrained /= static_cast<double>(cfg.num_trials);
    rates.regularized /= static_cast<double>(cfg.num_trials);
    return rates;
}

/// Coverage study on the worked 2x3 design: per lambda, the fraction of
/// noise draws whose lq-regularization error squared stays below the
/// theoretical l2 bound computed from the certified modulus. The l1 column
/// is flagged NOT-APPLICABLE because the q=1 modulus of this design is zero.
struct Example1Row {
    double lambda = 0.0;
    double mean_error_lhalf = 0.0;
    double ci_half_width = 0.0;
    double bound_lhalf = 0.0;
    double coverage_lhalf = 0.0;
    double mean_error_l1 = 0.0;
    std::string l1_bound_status = "NOT-APPLICABLE";
};

struct Example1Report {
    std::vector<Example1Row> rows;
    double phi_half = 0.0;
    Certification phi_half_cert = Certification::UNKNOWN;
    Certification phi_one_cert = Certification::UNKNOWN;
    double sigma = 0.0;
};

inline Mat example1_design() {
    Mat X(2, 3);
    X << 2, 3, 1, 2, 1, 3;
    return X;
}

inline Example1Report verify_example1(int num_lambdas = 25, int num_noise_draws = 500,
                                      std::uint64_t seed = 0, bool noise_value_is_variance = false,
                                      int jobs = 0) {
    const Mat X = example1_design();
    Vec beta_star(3);
    beta_star << 1, 0, 0;
    // the worked example writes e ~ N(0, 0.01); with the noise-level
    // convention of the simulation section, 0.01 is the standard deviation
    const double sigma = noise_value_is_variance ? 0.1 : 0.01;

    Example1Report rep;
    rep.sigma = sigma;

    const RecParams rec_half{0.5, 1, 1, 1.0};
    SearchConfig sc;
    sc.seed = seed;
    const RecEstimate est_half = rec_modulus_estimate(X, rec_half, sc);
    rep.phi_half = est_half.modulus_upper;
    rep.phi_half_cert = est_half.certified;
    const RecParams rec_one{1.0, 1, 1, 1.0};
    rep.phi_one_cert = rec_modulus_estimate(X, rec_one, sc).certified;

    std::vector<double> lambdas;
    for (int i = 0; i < num_lambdas; ++i)
        lambdas.push_back(std::pow(10.0, -8.0 + 8.0 * i / (num_lambdas - 1.0)));

    // one noise panel shared across lambdas
    std::vector<Vec> noises(static_cast<std::size_t>(num_noise_draws));
    {
        Rng rng(mix_seed({seed, 0x6578616d31ULL}));
        for (auto& e : noises) e = sigma * rng.normal_vector(2);
    }

    rep.rows.resize(lambdas.size());
    parallel_for(jobs, lambdas.size(), [&](std::size_t li) {
        const double lambda = lambdas[li];
        Example1Row row;
        row.lambda = lambda;
        // phi is the modulus of X itself; theorem2 expects it through
        // phi/sqrt(m). The regularized theorem needs a cone opening a > 1
        // (its lambda rule divides by a-1); a=3 is the standard choice.
        // The (1,1,1) modulus only overstates phi(1,1,3), so the resulting
        // curve understates the a=3 bound and the coverage check stays
        // conservative.
        row.bound_lhalf =
            theorem2_bounds(rep.phi_half, X.rows(), 0.5, 1, 1, 3.0, lambda).l2;

        std::vector<double> errs_half(noises.size()), errs_one(noises.size());
        int covered = 0;
        for (std::size_t d = 0; d < noises.size(); ++d) {
            const Vec y = X * beta_star + noises[d];
            const SolveResult half = global_solve_tiny(X, y, lambda, 0.5, 12, {});
            errs_half[d] = (half.beta_hat - beta_star).squaredNorm();
            if (errs_half[d] <= row.bound_lhalf) ++covered;

            PenaltySpec l1;
            l1.kind = PenaltyKind::L1;
            l1.lambda = lambda;
            SolverOptions opts;
            opts.max_iters = 5000;
            opts.tol = 1e-12;
            opts.accelerate = true;
            const SolveResult one = prox_gradient_solve(X, y, l1, opts);
            errs_one[d] = (one.beta_hat - beta_star).squaredNorm();
        }
        double mean = 0.0;
        for (double v : errs_half) mean += v;
        mean /= static_cast<double>(errs_half.size());
        double var = 0.0;
        for (double v : errs_half) var += (v - mean) * (v - mean);
        var = errs_half.size() > 1 ? var / static_cast<double>(errs_half.size() - 1) : 0.0;
        row.mean_error_lhalf = mean;
        row.ci_half_width = 1.959963984540054 * std::sqrt(var / static_cast<double>(errs_half.size()));
        row.coverage_lhalf = static_cast<double>(covered) / static_cast<double>(errs_half.size());
        double mean1 = 0.0;
        for (double v : errs_one) mean1 += v;
        row.mean_error_l1 = mean1 / static_cast<double>(errs_one.size());
        rep.rows[li] = row;
    });
    return rep;
}

/// CSV emission with 17-digit round-trip formatting; identical inputs give
/// byte-identical files.
inline std::string trial_csv(const std::vector<TrialReport>& trials) {
    std::ostringstream out;
    out << "method,m,trial,seed,lambda,l2_error_sq,prediction_error,sensitivity,specificity,"
           "dominant,converged,iterations,error\n";
    for (const auto& t : trials) {
        out << t.method << "," << t.m << "," << t.trial << "," << t.seed << ","
            << format_g17(t.lambda) << "," << format_g17(t.l2_error_sq) << ","
            << format_g17(t.prediction_error) << "," << format_g17(t.sensitivity) << ","
            << format_g17(t.specificity) << "," << (t.dominant_property_held ? 1 : 0) << ","
            << (t.converged ? 1 : 0) << "," << t.iterations << "," << t.error << "\n";
    }
    return out.str();
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream out;
    out << "method,m,trials,sensitivity_mean,sensitivity_ci,specificity_mean,specificity_ci,"
           "l2_mean,l2_ci,prediction_mean,prediction_ci\n";
    for (const auto& r : rows) {
        out << r.method << "," << r.m << "," << r.trials << "," << format_g17(r.sens_mean) << ","
            << format_g17(r.sens_ci) << "," << format_g17(r.spec_mean) << ","
            << format_g17(r.spec_ci) << "," << format_g17(r.l2_mean) << ","
            << format_g17(r.l2_ci) << "," << format_g17(r.pred_mean) << ","
            << format_g17(r.pred_ci) << "\n";
    }
    return out.str();
}

inline std::string example1_csv(const Example1Report& rep) {
    std::ostringstream out;
    out << "lambda,mean_error_lhalf,ci_half_width,bound_lhalf,coverage_lhalf,mean_error_l1,"
           "l1_bound_status\n";
    for (const auto& r : rep.rows) {
        out << format_g17(r.lambda) << "," << format_g17(r.mean_error_lhalf) << ","
            << format_g17(r.ci_half_width) << "," << format_g17(r.bound_lhalf) << ","
            << format_g17(r.coverage_lhalf) << "," << format_g17(r.mean_error_l1) << ","
            << r.l1_bound_status << "\n";
    }
    return out.str();
}

}  // namespace lqrec
