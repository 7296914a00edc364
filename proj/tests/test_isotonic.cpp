#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace ratingbias;
using namespace rbtest;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

PartialOrder chain(std::size_t n) {
    std::vector<ElementId> ranked;
    for (std::size_t j = 0; j < n; ++j) ranked.push_back({0, j});
    return build_total_ordering(ranked);
}

double norm2(const std::vector<double>& v) { return std::inner_product(v.begin(), v.end(), v.begin(), 0.0); }

} // namespace

TEST(Pava, FrozenExamples) {
    EXPECT_EQ(pava({1.0, 2.0, 3.0}).fitted, (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(pava({3.0, 1.0, 2.0}).fitted, (std::vector<double>{2, 2, 2}));
    EXPECT_EQ(pava({2.0, 0.0}).fitted, (std::vector<double>{1, 1}));
    auto blocks = pava({1.0, 3.0, 2.0, 4.0}).blocks;
    EXPECT_EQ(blocks, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 3}, {3, 4}}));
}

TEST(Pava, Errors) {
    EXPECT_THROW(pava(std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(pava(WeightedSequence{{1.0, 2.0}, {1.0, 0.0}}), std::invalid_argument);
    EXPECT_THROW(pava(WeightedSequence{{1.0, 2.0}, {1.0}}), std::invalid_argument);
}

TEST(Pava, MatchesBlockEnumeration) {
    Rng rng(1);
    for (int t = 0; t < 400; ++t) {
        std::size_t n = 1 + rng.index(8);
        auto y = random_vector(n, rng);
        std::vector<double> w(n);
        for (auto& x : w) x = 0.2 + rng.uniform() * 3.0;
        bool weighted = t % 2 == 1;
        auto got = weighted ? pava(WeightedSequence{y, w}).fitted : pava(y).fitted;
        auto want = brute_force_chain_projection(y, weighted ? w : std::vector<double>{});
        EXPECT_LT(max_abs_diff(got, want), 1e-8);
    }
}

TEST(Pava, StructureAndIdempotence) {
    Rng rng(2);
    for (int t = 0; t < 200; ++t) {
        auto y = random_vector(1 + rng.index(30), rng);
        auto fit = pava(y);
        for (std::size_t k = 1; k < y.size(); ++k) EXPECT_LE(fit.fitted[k - 1], fit.fitted[k]);
        std::size_t covered = 0;
        for (auto [b, e] : fit.blocks) {
            ASSERT_EQ(b, covered);
            covered = e;
            double mean = std::accumulate(y.begin() + static_cast<long>(b), y.begin() + static_cast<long>(e), 0.0) /
                          static_cast<double>(e - b);
            for (auto k = b; k < e; ++k) EXPECT_NEAR(fit.fitted[k], mean, 1e-12);
        }
        EXPECT_EQ(covered, y.size());
        EXPECT_LT(max_abs_diff(pava(fit.fitted).fitted, fit.fitted), 1e-14);
    }
}

TEST(Pava, Contraction) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        std::size_t n = 1 + rng.index(20);
        auto a = random_vector(n, rng), b = random_vector(n, rng);
        auto pa = pava(a).fitted, pb = pava(b).fitted;
        std::vector<double> dp(n), dy(n);
        for (std::size_t k = 0; k < n; ++k) {
            dp[k] = pa[k] - pb[k];
            dy[k] = a[k] - b[k];
        }
        EXPECT_LE(norm2(dp), norm2(dy) + 1e-12);
    }
}

TEST(IsotonicProject, EqualsPavaOnTotalOrders) {
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        auto cells = ObservationSet::ragged(random_sizes(1 + rng.index(3), 1, 6, rng));
        auto order = random_total_order(cells, rng);
        auto v = random_vector(order.size(), rng);
        std::vector<double> seq;
        std::vector<std::size_t> idx;
        for (std::size_t c = 0; c < order.num_classes(); ++c) {
            idx.push_back(order.members(c)[0]);
            seq.push_back(v[idx.back()]);
        }
        auto p = pava(seq).fitted;
        auto got = isotonic_project(v, order);
        for (std::size_t c = 0; c < idx.size(); ++c) EXPECT_NEAR(got[idx[c]], p[c], 1e-10);
    }
}

TEST(IsotonicProject, FrozenExamples) {
    auto two = chain(2);
    EXPECT_EQ(isotonic_project({2.0, 0.0}, two), (std::vector<double>{1, 1}));
    EXPECT_EQ(isotonic_project({-1.0, 4.0}, two), (std::vector<double>{-1, 4}));
    // group ordering: {a, b} below {c}; values (3, 0, 1) -> max of group 0 pooled with c
    auto g = build_group_ordering({{{0, 0}, 0}, {{0, 1}, 0}, {{1, 0}, 1}}, 2);
    auto p = isotonic_project({3.0, 0.0, 1.0}, g);
    EXPECT_NEAR(p[0], 2.0, 1e-14);
    EXPECT_NEAR(p[1], 0.0, 1e-14);
    EXPECT_NEAR(p[2], 2.0, 1e-14);
}

TEST(IsotonicProject, FeasibleInputUnchanged) {
    Rng rng(5);
    for (std::size_t kind = 0; kind < 4; ++kind)
        for (int t = 0; t < 25; ++t) {
            auto cells = ObservationSet::ragged(random_sizes(3, 1, 5, rng));
            auto order = random_order(kind, cells, rng);
            auto b = generate_bias(order, cells, 1.0, rng);
            EXPECT_EQ(isotonic_project(b.values(), order), b.values());
        }
}

TEST(IsotonicProject, MatchesHildrethOnEveryKind) {
    Rng rng(6);
    for (std::size_t kind = 0; kind < 4; ++kind)
        for (int t = 0; t < 100; ++t) {
            auto cells = ObservationSet::ragged(random_sizes(2 + rng.index(2), 1, 4, rng));
            auto order = random_order(kind, cells, rng);
            auto v = random_vector(order.size(), rng);
            std::vector<double> w(order.size());
            for (auto& x : w) x = 0.5 + rng.uniform();
            if (t % 2 == 0) w.clear();
            auto got = isotonic_project(v, order, w);
            auto want = hildreth_projection(v, order.implied_pairs(), w);
            EXPECT_LT(max_abs_diff(got, want), 1e-6) << to_string(order.kind());
            EXPECT_TRUE(satisfies(got, order, 1e-12));
        }
}

TEST(IsotonicProject, MatchesQpOracleOnGroupOrders) {
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
        auto cells = ObservationSet::full(1, 6);
        auto order = random_group_order(cells, 3, rng);
        if (order.num_classes() < 2) continue;
        auto v = random_vector(6, rng);
        // one course, lambda = 0: the oracle's bias equals the projection of the centered data
        RatingMatrix y(cells, v);
        auto sol = qp_oracle(y, order, Lambda::finite(0.0));
        double mean = std::accumulate(v.begin(), v.end(), 0.0) / 6.0;
        std::vector<double> centered = v;
        for (auto& x : centered) x -= mean;
        auto proj = isotonic_project(centered, order);
        EXPECT_LT(max_abs_diff(proj, sol.b_hat.values()), 1e-6);
    }
}

TEST(IsotonicProject, BlocksReproduceFittedValues) {
    Rng rng(8);
    for (std::size_t kind = 0; kind < 4; ++kind)
        for (int t = 0; t < 30; ++t) {
            auto cells = ObservationSet::ragged(random_sizes(3, 2, 5, rng));
            auto order = random_order(kind, cells, rng);
            auto v = random_vector(order.size(), rng);
            auto p = project_with_blocks(v, order);
            std::vector<int> seen(order.size(), 0);
            for (const auto& block : p.blocks) {
                double s = 0.0;
                for (auto e : block) {
                    s += v[e];
                    ++seen[e];
                }
                for (auto e : block) EXPECT_NEAR(p.fitted[e], s / static_cast<double>(block.size()), 1e-10);
            }
            for (int k : seen) EXPECT_EQ(k, 1);
        }
}

TEST(IsotonicProject, Errors) {
    auto two = chain(2);
    EXPECT_THROW(isotonic_project({1.0}, two), std::invalid_argument);
    EXPECT_THROW(isotonic_project({1.0, 2.0}, two, {1.0, -1.0}), std::invalid_argument);
}

TEST(RegularizedIsotonic, FrozenExamples) {
    auto two = chain(2);
    EXPECT_EQ(regularized_isotonic({2.0, 0.0}, two, 1.0), (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(regularized_isotonic({2.0, 0.0}, two, 0.0), isotonic_project({2.0, 0.0}, two));
    EXPECT_THROW(regularized_isotonic({2.0, 0.0}, two, -1.0), std::invalid_argument);
}

TEST(RegularizedIsotonic, GridSearchAgrees) {
    auto two = chain(2);
    double best = 1e300, bu = 0, bv = 0;
    for (int a = -200; a <= 200; ++a)
        for (int b = a; b <= 200; ++b) {
            double u = a * 0.005, v = b * 0.005;
            double f = (2 - u) * (2 - u) + v * v + u * u + v * v;
            if (f < best) {
                best = f;
                bu = u;
                bv = v;
            }
        }
    auto r = regularized_isotonic({2.0, 0.0}, two, 1.0);
    EXPECT_NEAR(r[0], bu, 1e-3);
    EXPECT_NEAR(r[1], bv, 1e-3);
}

TEST(RegularizedIsotonic, ScalingIdentityAndObjective) {
    Rng rng(9);
    for (int t = 0; t < 100; ++t) {
        std::size_t n = 1 + rng.index(12);
        auto order = chain(n);
        auto y = random_vector(n, rng);
        double lam = std::exp(rng.uniform(-4.0, 3.0));
        auto pi = isotonic_project(y, order);
        auto u = regularized_isotonic(y, order, lam);
        for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(u[k], pi[k] / (1 + lam), 1e-12);
        std::vector<double> resid(n);
        for (std::size_t k = 0; k < n; ++k) resid[k] = y[k] - pi[k];
        double closed = norm2(resid) / (1 + lam) + lam / (1 + lam) * norm2(y);
        EXPECT_NEAR(regularized_objective(y, u, lam), closed, 1e-10);
    }
}

TEST(RegularizedIsotonic, MinimizesOnGeneralPosets) {
    Rng rng(10);
    for (std::size_t kind = 0; kind < 4; ++kind)
        for (int t = 0; t < 25; ++t) {
            auto cells = ObservationSet::ragged(random_sizes(2, 1, 4, rng));
            auto order = random_order(kind, cells, rng);
            auto y = random_vector(order.size(), rng);
            double lam = 0.3 + rng.uniform();
            auto u = regularized_isotonic(y, order, lam);
            // same problem: project y / (1 + lam) onto the cone
            std::vector<double> scaled = y;
            for (auto& x : scaled) x /= 1 + lam;
            auto want = hildreth_projection(scaled, order.implied_pairs());
            EXPECT_LT(max_abs_diff(u, want), 1e-6);
        }
}

TEST(RegularizedIsotonic, LargeLambdaVanishes) {
    Rng rng(11);
    auto y = random_vector(10, rng);
    auto u = regularized_isotonic(y, chain(10), 1e9);
    EXPECT_LT(std::sqrt(norm2(u)), 1e-8 * std::sqrt(norm2(y)));
}

TEST(SmallQp, ProjectionOntoHalfspaces) {
    Eigen::VectorXd target(2);
    target << 0.0, 0.0;
    // z0 >= 1 and z0 + z1 >= 3
    std::vector<LinearConstraint> cons;
    Eigen::VectorXd a1(2), a2(2);
    a1 << 1, 0;
    a2 << 1, 1;
    cons.push_back({a1, 1.0});
    cons.push_back({a2, 3.0});
    auto res = project_onto_polyhedron(target, cons);
    EXPECT_NEAR(res.z[0], 1.5, 1e-12);
    EXPECT_NEAR(res.z[1], 1.5, 1e-12);
    target << 2.0, 0.0;
    res = project_onto_polyhedron(target, cons);
    EXPECT_NEAR(res.z[0], 2.5, 1e-12);
    EXPECT_NEAR(res.z[1], 0.5, 1e-12);
}
