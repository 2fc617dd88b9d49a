#pragma once

#include "lqrecover/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lqrec {

/// Parameters of the feasible cone C_q(s,a): vectors whose off-support
/// lq mass is at most a times the on-support mass for some |J| <= s.
struct ConeParams {
    double q;   // in (0,1]
    Index s;    // 1 <= s <= n
    double a;   // > 0

    void validate() const {
        if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("ConeParams: q must be in (0,1]");
        if (s < 1) throw std::invalid_argument("ConeParams: s must be positive");
        if (!(a > 0.0)) throw std::invalid_argument("ConeParams: a must be positive");
    }
};

inline void require_finite(const Vec& v, const char* what) {
    if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

/// Sum of |v_i|^q. The workhorse behind the quasi-norm and cone tests.
inline double lq_power_sum(const Vec& v, double q) {
    double acc = 0.0;
    for (Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), q);
    return acc;
}

/// lq quasi-norm: (sum |v_i|^q)^(1/q) for q in (0,1]; exact nonzero count
/// for q = 0. Support estimation with a tolerance lives in the experiment
/// harness, not here.
inline double lq_quasi_norm(const Vec& v, double q) {
    require_finite(v, "lq_quasi_norm");
    if (q == 0.0) {
        Index count = 0;
        for (Index i = 0; i < v.size(); ++i)
            if (v[i] != 0.0) ++count;
        return static_cast<double>(count);
    }
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("lq_quasi_norm: q must be 0 or in (0,1]");
    const double s = lq_power_sum(v, q);
    return s == 0.0 ? 0.0 : std::pow(s, 1.0 / q);
}

inline IndexSet complement(const IndexSet& J, Index n) {
    IndexSet out;
    out.reserve(static_cast<std::size_t>(n) - J.size());
    std::size_t k = 0;
    for (Index i = 0; i < n; ++i) {
        if (k < J.size() && J[k] == i) {
            ++k;
        } else {
            out.push_back(i);
        }
    }
    return out;
}

/// Indices of `pool` ordered by decreasing |delta|, ties broken by lowest
/// index (determinism contract).
inline IndexSet rank_by_magnitude(const Vec& delta, const IndexSet& pool) {
    IndexSet order = pool;
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) {
        return std::abs(delta[i]) > std::abs(delta[j]);
    });
    return order;
}

/// J(delta; t): the first t largest coordinates in absolute value of delta
/// outside J. Returned sorted.
inline IndexSet top_index_set(const Vec& delta, const IndexSet& J, Index t) {
    require_finite(delta, "top_index_set");
    const IndexSet jc = complement(J, delta.size());
    if (t < 1 || static_cast<std::size_t>(t) > jc.size())
        throw std::invalid_argument("top_index_set: t exceeds |J^c|");
    IndexSet order = rank_by_magnitude(delta, jc);
    order.resize(static_cast<std::size_t>(t));
    std::sort(order.begin(), order.end());
    return order;
}

/// Batches J_0, J_1, ..., J_r of J^c ranked by |delta|: sizes t except
/// possibly the last; min |delta| over batch k >= max over batch k+1.
inline std::vector<IndexSet> batch_partition(const Vec& delta, const IndexSet& J, Index t) {
    require_finite(delta, "batch_partition");
    const IndexSet jc = complement(J, delta.size());
    if (t < 1 || static_cast<std::size_t>(t) > jc.size())
        throw std::invalid_argument("batch_partition: t exceeds |J^c|");
    const IndexSet order = rank_by_magnitude(delta, jc);
    std::vector<IndexSet> batches;
    for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(t)) {
        const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(t));
        IndexSet batch(order.begin() + static_cast<std::ptrdiff_t>(pos),
                       order.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(batch.begin(), batch.end());
        batches.push_back(std::move(batch));
    }
    return batches;
}

/// Top-s coordinates of |delta| over all indices, ties to the lowest index.
inline IndexSet top_support(const Vec& delta, Index s) {
    IndexSet all(static_cast<std::size_t>(delta.size()));
    std::iota(all.begin(), all.end(), Index{0});
    IndexSet order = rank_by_magnitude(delta, all);
    order.resize(static_cast<std::size_t>(std::min<Index>(s, delta.size())));
    std::sort(order.begin(), order.end());
    return order;
}

/// Membership in C_q(s,a). Testing J = the s largest-|delta| coordinates is
/// optimal: that choice maximizes the right side and minimizes the left side
/// simultaneously, so it decides the existential over all |J| <= s.
inline bool cone_membership(const Vec& delta, const ConeParams& cone) {
    cone.validate();
    require_finite(delta, "cone_membership");
    const IndexSet J = top_support(delta, cone.s);
    double head = 0.0;
    for (Index i : J) head += std::pow(std::abs(delta[i]), cone.q);
    const double tail = lq_power_sum(delta, cone.q) - head;
    return tail <= cone.a * head * (1.0 + 1e-12) + 1e-15;
}

inline IndexSet support_of(const Vec& v, double tol = 0.0) {
    IndexSet out;
    for (Index i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) > tol) out.push_back(i);
    return out;
}

}  // namespace lqrec
