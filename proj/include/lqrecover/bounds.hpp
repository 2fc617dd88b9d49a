#pragma once

#include "lqrecover/common.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace lqrec {

/// Inputs of the closed-form tuning rules: noise level, problem size, the
/// cone aggressiveness a > 1, the column-norm slack theta, the tail
/// exponent b, and an upper bound r on the true lq quasi-norm.
struct TuningParams {
    double sigma;
    Index m;
    Index n;
    double a = 3.0;
    double theta = 0.0;
    double b = 0.0;
    double r = 1.0;
    double q = 1.0;

    void validate() const {
        if (!(sigma > 0.0)) throw std::invalid_argument("TuningParams: sigma must be positive");
        if (m < 1 || n < 1) throw std::invalid_argument("TuningParams: m, n must be positive");
        if (!(a > 1.0)) throw std::invalid_argument("TuningParams: a must exceed 1");
        if (!(theta >= 0.0 && theta < 1.0))
            throw std::invalid_argument("TuningParams: theta must be in [0,1)");
        if (!(b >= 0.0)) throw std::invalid_argument("TuningParams: b must be nonnegative");
        if (!(r > 0.0)) throw std::invalid_argument("TuningParams: r must be positive");
        if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("TuningParams: q must be in (0,1]");
    }
};

/// Constants of the random-design statements, configurable because the
/// source results fix them only "up to universal constants".
struct UniversalConstants {
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;
    double c4 = 1.0;
    double tau = 1.0;
};

struct TheoremBounds {
    double epsilon = 0.0;
    double rho = 0.0;
    double lambda = 0.0;
    double cp_l2_bound = 0.0;
    double rp_prediction = 0.0;
    double rp_oracle = 0.0;
    double rp_l2 = 0.0;
    double random_cp_l2 = 0.0;
    double random_rp_prediction = 0.0;
    double random_rp_oracle = 0.0;
    double random_rp_l2 = 0.0;
    double prob_floor = 0.0;
};

/// Noise radius of the constrained problem: sigma*sqrt(5m). The experiment
/// variant sigma*sqrt(m + 2*sqrt(2m)) tracks the chi-square mean plus two
/// standard deviations, so the truth is feasible with high probability.
inline double epsilon_default(double sigma, Index m) {
    if (!(sigma > 0.0) || m < 1) throw std::invalid_argument("epsilon_default: bad inputs");
    return sigma * std::sqrt(5.0 * static_cast<double>(m));
}

inline double epsilon_experiment(double sigma, Index m) {
    if (!(sigma > 0.0) || m < 1) throw std::invalid_argument("epsilon_experiment: bad inputs");
    const double md = static_cast<double>(m);
    return sigma * std::sqrt(md + 2.0 * std::sqrt(2.0 * md));
}

/// lambda = max{ ((a+1)/(a-1)) sigma (1+theta) 2^{1-q} (1+r^q)^{(1-q)/q}
///               sqrt(2(1+b) ln n / m), (5/2) sigma^2 }. Natural log.
inline double lambda_default(const TuningParams& p) {
    p.validate();
    const double rq = std::pow(p.r, p.q);
    const double first = (p.a + 1.0) / (p.a - 1.0) * p.sigma * (1.0 + p.theta) *
                         std::pow(2.0, 1.0 - p.q) * std::pow(1.0 + rq, (1.0 - p.q) / p.q) *
                         std::sqrt(2.0 * (1.0 + p.b) * std::log(static_cast<double>(p.n)) /
                                   static_cast<double>(p.m));
    return std::max(first, 2.5 * p.sigma * p.sigma);
}

/// rho = (5 sigma^2 / (2 lambda) + r^q)^{1/q}; satisfies
/// lambda (rho^q - r^q) = (5/2) sigma^2 exactly.
inline double rho_default(const TuningParams& p, double lambda) {
    p.validate();
    if (!(lambda > 0.0)) throw std::invalid_argument("rho_default: lambda must be positive");
    return std::pow(5.0 * p.sigma * p.sigma / (2.0 * lambda) + std::pow(p.r, p.q), 1.0 / p.q);
}

/// l2 bound for the constrained estimator: (1 + (s/t)^{2/q-1}) 4 eps^2 / phi^2.
inline double theorem1_bound(double phi, double q, Index s, Index t, double epsilon) {
    if (!(phi > 0.0)) throw std::invalid_argument("theorem1_bound: phi must be positive");
    const double st = static_cast<double>(s) / static_cast<double>(t);
    return (1.0 + std::pow(st, 2.0 / q - 1.0)) * 4.0 * epsilon * epsilon / (phi * phi);
}

struct RpBounds {
    double prediction;
    double oracle;
    double l2;
};

/// Prediction / oracle / l2 bounds for the regularized estimator with a
/// deterministic design; phi is the modulus of X itself.
inline RpBounds theorem2_bounds(double phi, Index m, double q, Index s, Index t, double a,
                                double lambda) {
    if (!(phi > 0.0)) throw std::invalid_argument("theorem2_bounds: phi must be positive");
    const double sd = static_cast<double>(s);
    const double st = sd / static_cast<double>(t);
    const double phin = phi / std::sqrt(static_cast<double>(m));  // normalized modulus
    const double expo = 2.0 / (2.0 - q);
    RpBounds out;
    out.prediction = std::pow(2.0 * a * lambda / std::pow(phin, q), expo) * sd;
    out.oracle = std::pow(std::pow(2.0, q / 2.0) * a * lambda / std::pow(phin, q), expo) * sd;
    out.l2 = (1.0 + std::pow(a, 2.0 / q) * std::pow(st, 2.0 / q - 1.0)) *
             std::pow(2.0 * a * lambda / (phin * phin), expo) * sd;
    return out;
}

struct RandomDesignBounds {
    double cp_l2;
    RpBounds rp;
};

/// Random-design versions: phi is the modulus of the covariance square root
/// and the constants become 2^{q+1}, 8^{q/2}, 8.
inline RandomDesignBounds theorem34_bounds(double phi_sigma_half, Index m, double q, Index s,
                                           Index t, double a, double lambda, double epsilon) {
    if (!(phi_sigma_half > 0.0))
        throw std::invalid_argument("theorem34_bounds: phi must be positive");
    const double sd = static_cast<double>(s);
    const double st = sd / static_cast<double>(t);
    const double phi = phi_sigma_half;
    const double expo = 2.0 / (2.0 - q);
    RandomDesignBounds out;
    out.cp_l2 = 16.0 * (1.0 + std::pow(st, 2.0 / q - 1.0)) * epsilon * epsilon /
                (static_cast<double>(m) * phi * phi);
    out.rp.prediction = std::pow(std::pow(2.0, q + 1.0) * a * lambda / std::pow(phi, q), expo) * sd;
    out.rp.oracle = std::pow(std::pow(8.0, q / 2.0) * a * lambda / std::pow(phi, q), expo) * sd;
    out.rp.l2 = (1.0 + std::pow(a, 2.0 / q) * std::pow(st, 2.0 / q - 1.0)) *
                std::pow(8.0 * a * lambda / (phi * phi), expo) * sd;
    return out;
}

/// Lower bounds on the probabilities of the good events, clipped to [0,1].
inline std::map<std::string, double> probability_floors(Index m, Index n, double b,
                                                        const UniversalConstants& c,
                                                        double theta) {
    const double md = static_cast<double>(m);
    const double logn = std::log(static_cast<double>(n));
    auto clip = [](double x) { return std::clamp(x, 0.0, 1.0); };
    std::map<std::string, double> out;
    const double pa = 1.0 - std::exp(-md);
    const double pb = 1.0 - 1.0 / (std::pow(static_cast<double>(n), b) * std::sqrt(M_PI * logn));
    out["A"] = clip(pa);
    out["B"] = clip(pb);
    out["A_and_B"] = clip(pa + pb - 1.0);
    out["C"] = clip(1.0 - std::exp(-c.c2 * md));
    out["D"] = clip(1.0 - 2.0 * std::exp(-c.c4 * theta * theta * md /
                                         (c.tau * c.tau * c.tau * c.tau)));
    return out;
}

/// Sample-size thresholds guaranteeing (with high probability) the design
/// inherits the covariance square root's restricted eigenvalue modulus and
/// the column-norm bound.
inline std::map<std::string, double> sample_size_thresholds(double q, Index s, Index t, double a,
                                                            double phi_sigma_half,
                                                            double zeta_sigma, Index n,
                                                            double theta,
                                                            const UniversalConstants& c) {
    if (!(phi_sigma_half > 0.0))
        throw std::invalid_argument("sample_size_thresholds: phi must be positive");
    const double sd = static_cast<double>(s), td = static_cast<double>(t);
    const double logn = std::log(static_cast<double>(n));
    const double head = std::sqrt(sd + td) +
                        a * std::sqrt(sd) * std::pow(a * sd / td, 1.0 / q - 1.0);
    std::map<std::string, double> out;
    out["rec"] = c.c1 * zeta_sigma / (phi_sigma_half * phi_sigma_half) * head * head * logn;
    out["column_norm"] = theta > 0.0
                             ? c.c3 * std::pow(c.tau, 4.0) / (theta * theta) * logn
                             : std::numeric_limits<double>::infinity();
    out["combined"] = std::max(out["rec"], out["column_norm"]);
    return out;
}

}  // namespace lqrec
