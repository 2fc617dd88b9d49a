#include <catch2/catch_amalgamated.hpp>

#include "lqrecover/common.hpp"
#include "lqrecover/core.hpp"

#include <cmath>
#include <limits>
#include <set>

using namespace lqrec;

namespace {

Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST_CASE("lq quasi-norm basics") {
    CHECK(lq_quasi_norm(Vec::Zero(4), 0.5) == 0.0);
    CHECK(lq_quasi_norm(make_vec({1, 0, 0}), 0.0) == 1.0);
    CHECK(lq_quasi_norm(make_vec({-2, 1, 1}), 0.0) == 3.0);
    // (sqrt(2) + 1 + 1)^2
    CHECK_THAT(lq_quasi_norm(make_vec({-2, 1, 1}), 0.5),
               Catch::Matchers::WithinRel(11.65685424949238, 1e-14));
    CHECK(lq_quasi_norm(make_vec({3, -4}), 1.0) == 7.0);

    Vec bad = make_vec({1, 0});
    bad[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(lq_quasi_norm(bad, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(lq_quasi_norm(make_vec({1, 2}), 1.5), std::invalid_argument);
}

TEST_CASE("quasi-norm ordering across exponents") {
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const Index n = 6;
        const Vec beta = rng.normal_vector(n);
        const double pairs[3][2] = {{0.3, 0.5}, {0.5, 1.0}, {2.0 / 3.0, 1.0}};
        for (const auto& p : pairs) {
            const double q1 = p[0], q2 = p[1];
            const double n1 = lq_quasi_norm(beta, q1);
            const double n2 = lq_quasi_norm(beta, q2);
            CHECK(n2 <= n1 * (1.0 + 1e-12));
            const double cap = std::pow(static_cast<double>(n), 1.0 / q1 - 1.0 / q2) * n2;
            CHECK(n1 <= cap * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("power sum quasi-triangle inequality") {
    Rng rng(12);
    const double qs[] = {0.3, 0.5, 2.0 / 3.0, 1.0};
    for (int rep = 0; rep < 50; ++rep) {
        const Vec a = rng.normal_vector(5);
        const Vec b = rng.normal_vector(5);
        for (double q : qs) {
            const double pa = lq_power_sum(a, q);
            const double pb = lq_power_sum(b, q);
            const double pab = lq_power_sum(a + b, q);
            CHECK(pab <= pa + pb + 1e-12);
            CHECK(pab >= pa - pb - 1e-12);
        }
    }
}

TEST_CASE("power sum domination under elementwise ordering") {
    // whenever max(alpha) <= min(beta) and sum(alpha) <= c*sum(beta),
    // the same holds for every power p >= 1
    Rng rng(13);
    const double ps[] = {1.0, 1.5, 2.0, 3.0};
    for (int rep = 0; rep < 50; ++rep) {
        Vec alpha(4), beta(6);
        for (Index i = 0; i < alpha.size(); ++i) alpha[i] = rng.uniform();        // [0,1)
        for (Index i = 0; i < beta.size(); ++i) beta[i] = 1.0 + rng.uniform();    // [1,2)
        const double c = alpha.sum() / beta.sum();
        for (double p : ps) {
            double sa = 0.0, sb = 0.0;
            for (Index i = 0; i < alpha.size(); ++i) sa += std::pow(alpha[i], p);
            for (Index i = 0; i < beta.size(); ++i) sb += std::pow(beta[i], p);
            CHECK(sa <= c * sb * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("top index set selection and ties") {
    CHECK(top_index_set(make_vec({5, 1, 3}), {0}, 1) == IndexSet{2});
    CHECK(top_index_set(make_vec({0, 0, 0}), {0}, 2) == IndexSet{1, 2});
    // tie between |2| and |-2| resolved to the lower index before |1|
    CHECK(top_index_set(make_vec({1, -4, 2, -2}), {1}, 2) == IndexSet{2, 3});
    CHECK_THROWS_AS(top_index_set(make_vec({1, 2, 3}), {0}, 3), std::invalid_argument);
}

TEST_CASE("batch partition shapes") {
    {
        const auto batches = batch_partition(make_vec({0, 2, 1}), {0}, 1);
        REQUIRE(batches.size() == 2);
        CHECK(batches[0] == IndexSet{1});
        CHECK(batches[1] == IndexSet{2});
    }
    {
        const auto batches = batch_partition(make_vec({0, 1, 3, 2}), {0}, 2);
        REQUIRE(batches.size() == 2);
        CHECK(batches[0] == IndexSet{2, 3});
        CHECK(batches[1] == IndexSet{1});
    }
    {
        const auto batches = batch_partition(make_vec({1, 1}), {0}, 1);
        REQUIRE(batches.size() == 1);
        CHECK(batches[0] == IndexSet{1});
    }
}

TEST_CASE("batch partition is an ordered partition of the complement") {
    Rng rng(14);
    for (int rep = 0; rep < 30; ++rep) {
        const Index n = 9;
        const Vec delta = rng.normal_vector(n);
        const IndexSet J{1, 4};
        const Index t = 1 + static_cast<Index>(rng.uniform_int(3));
        const auto batches = batch_partition(delta, J, t);

        std::set<Index> seen;
        for (const auto& b : batches)
            for (Index i : b) {
                CHECK(seen.insert(i).second);  // pairwise disjoint
            }
        const IndexSet jc = complement(J, n);
        CHECK(seen == std::set<Index>(jc.begin(), jc.end()));

        for (std::size_t k = 0; k + 1 < batches.size(); ++k) {
            double lo_k = std::numeric_limits<double>::infinity();
            double hi_next = 0.0;
            for (Index i : batches[k]) lo_k = std::min(lo_k, std::abs(delta[i]));
            for (Index i : batches[k + 1]) hi_next = std::max(hi_next, std::abs(delta[i]));
            CHECK(lo_k >= hi_next);
        }
        for (std::size_t k = 0; k + 1 < batches.size(); ++k)
            CHECK(batches[k].size() == static_cast<std::size_t>(t));
    }
}

TEST_CASE("cone membership on the worked 3-vector") {
    CHECK(cone_membership(Vec::Zero(3), {0.5, 1, 1.0}));
    CHECK(cone_membership(make_vec({-2, 1, 1}), {1.0, 1, 1.0}));
    CHECK_FALSE(cone_membership(make_vec({-2, 1, 1}), {0.5, 1, 1.0}));
    CHECK_THROWS_AS(cone_membership(make_vec({1, 2}), ConeParams{1.5, 1, 1.0}),
                    std::invalid_argument);
}

TEST_CASE("cone membership is monotone in the exponent") {
    // C_{q1}(s,a) is contained in C_{q2}(s,a) for q1 <= q2
    Rng rng(15);
    const Index n = 8, s = 2;
    const double a = 1.0;
    int members = 0;
    for (int rep = 0; rep < 300; ++rep) {
        Vec delta = rng.normal_vector(n);
        if (rep % 2 == 0) {
            // mostly-sparse vectors so the sample actually hits the cone
            for (Index i = s; i < n; ++i) delta[i] *= 0.05;
        }
        const bool in_half = cone_membership(delta, {0.5, s, a});
        const bool in_two_thirds = cone_membership(delta, {2.0 / 3.0, s, a});
        const bool in_one = cone_membership(delta, {1.0, s, a});
        if (in_half) {
            ++members;
            CHECK(in_two_thirds);
        }
        if (in_two_thirds) CHECK(in_one);
    }
    CHECK(members > 20);  // the implication was not vacuous
}

TEST_CASE("support and ranking helpers") {
    CHECK(top_support(make_vec({1, -4, 2, -2}), 2) == IndexSet{1, 2});
    CHECK(support_of(make_vec({0.5, 0, -1e-9}), 1e-8) == IndexSet{0});
    CHECK(complement({0, 2}, 4) == IndexSet{1, 3});
    CHECK(rank_by_magnitude(make_vec({1, -4, 2, -2}), {0, 1, 2, 3}) == IndexSet{1, 2, 3, 0});
}
