#pragma once

#include "lqrecover/common.hpp"

#include <cmath>
#include <limits>

namespace lqrec {

enum class PenaltyKind { L0, LQ, L1, SCAD, MCP };

/// Scalar penalty family. For L0/L1/LQ the penalty is the bare rho
/// (1{x!=0}, |x|, |x|^q) and the solver scales tau by step*lambda; for
/// SCAD/MCP the standard formulas already embed lambda, so the solver
/// scales tau by step only.
struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::L1;
    double q = 0.5;          // for LQ, in (0,1)
    double scad_a = 3.7;     // > 2
    double mcp_gamma = 3.0;  // > 1
    double lambda = 0.1;     // > 0

    void validate() const {
        if (!(lambda > 0.0)) throw std::invalid_argument("PenaltySpec: lambda must be positive");
        if (kind == PenaltyKind::LQ && !(q > 0.0 && q < 1.0))
            throw std::invalid_argument("PenaltySpec: LQ needs q in (0,1)");
        if (kind == PenaltyKind::SCAD && !(scad_a > 2.0))
            throw std::invalid_argument("PenaltySpec: SCAD needs a > 2");
        if (kind == PenaltyKind::MCP && !(mcp_gamma > 1.0))
            throw std::invalid_argument("PenaltySpec: MCP needs gamma > 1");
    }

    bool convex() const { return kind == PenaltyKind::L1; }
};

/// rho(x) as minimized by prox_penalty: bare for L0/L1/LQ, lambda-inclusive
/// for SCAD/MCP.
inline double penalty_value(double x, const PenaltySpec& pen) {
    const double ax = std::abs(x);
    switch (pen.kind) {
        case PenaltyKind::L0:
            return ax != 0.0 ? 1.0 : 0.0;
        case PenaltyKind::L1:
            return ax;
        case PenaltyKind::LQ:
            return std::pow(ax, pen.q);
        case PenaltyKind::SCAD: {
            const double l = pen.lambda, a = pen.scad_a;
            if (ax <= l) return l * ax;
            if (ax <= a * l) return (2.0 * a * l * ax - ax * ax - l * l) / (2.0 * (a - 1.0));
            return (a + 1.0) * l * l / 2.0;
        }
        case PenaltyKind::MCP: {
            const double l = pen.lambda, g = pen.mcp_gamma;
            if (ax <= g * l) return l * ax - ax * ax / (2.0 * g);
            return g * l * l / 2.0;
        }
    }
    return 0.0;
}

/// Penalty contribution of a whole vector, with the solver's convention:
/// lambda multiplies the bare penalties, SCAD/MCP already contain it.
inline double penalty_vector_value(const Vec& beta, const PenaltySpec& pen) {
    double acc = 0.0;
    const bool bare = pen.kind == PenaltyKind::L0 || pen.kind == PenaltyKind::L1 ||
                      pen.kind == PenaltyKind::LQ;
    for (Index i = 0; i < beta.size(); ++i) acc += penalty_value(beta[i], pen);
    return bare ? pen.lambda * acc : acc;
}

namespace detail {

inline double half_objective(double x, double v, double tau, const PenaltySpec& pen) {
    const double d = x - v;
    return 0.5 * d * d + tau * penalty_value(x, pen);
}

/// Interior prox for rho(x)=x^q on x>0: solves h'(x) = x - v + tau q x^{q-1} = 0
/// on the branch where h is convex (x >= xbar, the root of h''), then compares
/// against x=0. v > 0 assumed.
inline double prox_lq_positive(double v, double tau, double q) {
    double x;
    if (q == 0.5) {
        // substitute x = y^2: y^3 - v y + tau/2 = 0; take the largest root of
        // the depressed cubic (three real roots iff (v/3)^3 >= (tau/4)^2)
        const double c = 0.75 * std::sqrt(3.0) * tau / (v * std::sqrt(v));
        if (c > 1.0) return 0.0;  // no interior stationary point
        const double y = 2.0 * std::sqrt(v / 3.0) * std::cos(std::acos(-c) / 3.0);
        x = y * y;
    } else {
        // h''(x) = 1 - tau q (1-q) x^{q-2} vanishes at xbar; the interior
        // minimizer, if any, lies in [xbar, v]. h' is increasing and convex
        // there, so Newton started at x=v (where h'>0) descends monotonically.
        const double xbar = std::pow(tau * q * (1.0 - q), 1.0 / (2.0 - q));
        if (xbar >= v || xbar - v + tau * q * std::pow(xbar, q - 1.0) > 0.0) return 0.0;
        x = v;
        for (int it = 0; it < 100; ++it) {
            const double h1 = x - v + tau * q * std::pow(x, q - 1.0);
            const double h2 = 1.0 - tau * q * (1.0 - q) * std::pow(x, q - 2.0);
            const double step = h1 / h2;
            x -= step;
            if (x < xbar) {  // safeguard; cannot happen in exact arithmetic
                x = xbar;
                break;
            }
            if (std::abs(step) <= 1e-15 * x) break;
        }
    }
    const double d0 = 0.5 * v * v;  // objective at x = 0
    const double dx = 0.5 * (x - v) * (x - v) + tau * std::pow(x, q);
    return dx <= d0 ? x : 0.0;
}

/// SCAD prox (tau-scaled): minimize (1/2)(x-v)^2 + tau*scad(x; lambda, a).
/// Enumerate the stationary candidate of each piece, clamped to its
/// interval, plus the breakpoints; pick the best. Robust for any tau.
inline double prox_scad_positive(double v, double tau, double lambda, double a) {
    PenaltySpec pen;
    pen.kind = PenaltyKind::SCAD;
    pen.lambda = lambda;
    pen.scad_a = a;
    double best_x = 0.0, best_f = half_objective(0.0, v, tau, pen);
    auto consider = [&](double x) {
        if (x < 0.0) x = 0.0;
        const double f = half_objective(x, v, tau, pen);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    };
    // piece 1: x in [0, lambda], derivative x - v + tau*lambda
    consider(std::min(std::max(v - tau * lambda, 0.0), lambda));
    // piece 2: x in [lambda, a*lambda], derivative x - v + tau*(a*lambda - x)/(a-1)
    {
        const double denom = 1.0 - tau / (a - 1.0);
        double x;
        if (std::abs(denom) > 1e-14) {
            x = (v - tau * a * lambda / (a - 1.0)) / denom;
        } else {
            x = v;  // flat derivative; endpoints cover it
        }
        consider(std::min(std::max(x, lambda), a * lambda));
        consider(lambda);
        consider(a * lambda);
    }
    // piece 3: x >= a*lambda, penalty constant, minimizer x = v
    consider(std::max(v, a * lambda));
    return best_x;
}

inline double prox_mcp_positive(double v, double tau, double lambda, double g) {
    PenaltySpec pen;
    pen.kind = PenaltyKind::MCP;
    pen.lambda = lambda;
    pen.mcp_gamma = g;
    double best_x = 0.0, best_f = half_objective(0.0, v, tau, pen);
    auto consider = [&](double x) {
        if (x < 0.0) x = 0.0;
        const double f = half_objective(x, v, tau, pen);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    };
    // piece 1: x in [0, g*lambda], derivative x - v + tau*(lambda - x/g)
    {
        const double denom = 1.0 - tau / g;
        double x;
        if (std::abs(denom) > 1e-14) {
            x = (v - tau * lambda) / denom;
        } else {
            x = v;
        }
        consider(std::min(std::max(x, 0.0), g * lambda));
        consider(g * lambda);
    }
    // piece 2: x >= g*lambda, penalty constant
    consider(std::max(v, g * lambda));
    return best_x;
}

}  // namespace detail

/// Global minimizer of (1/2)(x-v)^2 + tau*rho(x). Sign-symmetric.
inline double prox_penalty(double v, double tau, const PenaltySpec& pen) {
    if (!(tau > 0.0)) throw std::invalid_argument("prox_penalty: tau must be positive");
    pen.validate();
    const double sign = v < 0.0 ? -1.0 : 1.0;
    const double av = std::abs(v);
    double x = 0.0;
    switch (pen.kind) {
        case PenaltyKind::L0:
            // keep v iff (1/2)v^2 > tau; tie at the boundary goes to 0
            x = (av * av > 2.0 * tau) ? av : 0.0;
            break;
        case PenaltyKind::L1:
            x = std::max(av - tau, 0.0);
            break;
        case PenaltyKind::LQ:
            x = av == 0.0 ? 0.0 : detail::prox_lq_positive(av, tau, pen.q);
            break;
        case PenaltyKind::SCAD:
            x = detail::prox_scad_positive(av, tau, pen.lambda, pen.scad_a);
            break;
        case PenaltyKind::MCP:
            x = detail::prox_mcp_positive(av, tau, pen.lambda, pen.mcp_gamma);
            break;
    }
    return sign * x;
}

inline Vec prox_penalty_vector(const Vec& v, double tau, const PenaltySpec& pen) {
    Vec out(v.size());
    for (Index i = 0; i < v.size(); ++i) out[i] = prox_penalty(v[i], tau, pen);
    return out;
}

}  // namespace lqrec
