#include <gtest/gtest.h>

#include <numeric>

#include "test_support.hpp"

using namespace ratingbias;
using namespace rbtest;

namespace {

PartialOrder per_slot_groups(const ObservationSet& cells, std::size_t r) {
    std::map<ElementId, std::size_t> g;
    for (const auto& e : cells.cells()) g[e] = e.slot % r;
    return build_group_ordering(g, r);
}

} // namespace

TEST(MeanEstimator, Examples) {
    EXPECT_EQ(mean_estimator(RatingMatrix::from_rows({{1, 3}, {2, 4}})), (QualityVector{2, 3}));
    auto y = RatingMatrix::from_rows({{5}, {1, 2, 6}});
    EXPECT_EQ(mean_estimator(y), (QualityVector{5, 3}));
    auto omega = ObservationSet::from_cells(2, {{0, 0}, {1, 0}, {1, 2}});
    EXPECT_EQ(mean_estimator(y, omega), (QualityVector{5, 3.5}));
}

TEST(MeanEstimator, BitwiseEqualToFitAtInfinity) {
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        auto inst = random_instance(static_cast<std::size_t>(t), 1 + rng.index(4), 1, 9, rng);
        EXPECT_EQ(mean_estimator(inst.y), fit(inst.y, inst.order, Lambda::infinity()).x_hat);
    }
}

TEST(MedianEstimator, Examples) {
    EXPECT_EQ(median_estimator(RatingMatrix::from_rows({{1, 2, 9}})), (QualityVector{2}));
    EXPECT_EQ(median_estimator(RatingMatrix::from_rows({{1, 3}})), (QualityVector{2}));
    EXPECT_EQ(median_estimator(RatingMatrix::from_rows({{0, 0, 0, 100}})), (QualityVector{0}));
    EXPECT_EQ(median_estimator(RatingMatrix::from_rows({{9, 1, 2}, {4}})), (QualityVector{2, 4}));
}

TEST(ReweightedMean, FrozenExample) {
    auto y = RatingMatrix::from_rows({{0, 2}, {4, 6}});
    auto order = per_slot_groups(y.cells(), 2);
    auto x = reweighted_mean(y, order);
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 5.0);
}

TEST(ReweightedMean, IdenticalCompositionEqualsMean) {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
        auto cells = ObservationSet::full(3, 6);
        auto order = per_slot_groups(cells, 3);
        auto y = random_matrix(cells, rng);
        EXPECT_LT(max_abs_diff(reweighted_mean(y, order), mean_estimator(y)), 1e-12);
    }
}

TEST(ReweightedMean, GroupMissingFromOneCourseIsDropped) {
    // group 2 only occurs in course 0
    std::map<ElementId, std::size_t> g{{{0, 0}, 0}, {{0, 1}, 1}, {{0, 2}, 2}, {{1, 0}, 0}, {{1, 1}, 1}};
    auto order = build_group_ordering(g, 3);
    auto layout = layout_of(order, order.cells(), PartitionBy::group);
    EXPECT_EQ(layout.R, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(layout.ell_min, (std::vector<std::size_t>{1, 1, 0}));
    auto y = RatingMatrix::from_rows({{0, 2, 100}, {4, 6}});
    auto x = reweighted_mean(y, order);
    // pre-shift (1, 5); recentering moves both by (112 - (3 + 10)) / 5
    double shift = (112.0 - 13.0) / 5.0;
    EXPECT_NEAR(x[0], 1.0 + shift, 1e-12);
    EXPECT_NEAR(x[1], 5.0 + shift, 1e-12);
}

TEST(ReweightedMean, NotApplicableWithoutSharedGroup) {
    std::map<ElementId, std::size_t> g{{{0, 0}, 0}, {{1, 0}, 1}};
    auto order = build_group_ordering(g, 2);
    EXPECT_THROW(reweighted_mean(RatingMatrix::from_rows({{0}, {1}}), order), not_applicable_error);
    auto total = build_total_ordering({{0, 0}, {1, 0}});
    EXPECT_THROW(reweighted_mean(RatingMatrix::from_rows({{0}, {1}}), total), not_applicable_error);
}

TEST(ReweightedMean, RecenteringIdentity) {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        auto cells = ObservationSet::ragged(random_sizes(3, 3, 9, rng));
        auto order = random_group_order(cells, 2, rng);
        auto y = random_matrix(cells, rng);
        QualityVector x;
        try {
            x = reweighted_mean(y, order);
        } catch (const not_applicable_error&) {
            continue;
        }
        double lhs = 0.0;
        for (std::size_t i = 0; i < 3; ++i) lhs += static_cast<double>(cells.course_size(i)) * x[i];
        double rhs = std::accumulate(y.values().begin(), y.values().end(), 0.0);
        EXPECT_NEAR(lhs, rhs, 1e-10);
    }
}

TEST(Baselines, ShiftEquivariant) {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        auto cells = ObservationSet::ragged(random_sizes(3, 4, 8, rng));
        auto order = per_slot_groups(cells, 2);
        auto y = random_matrix(cells, rng);
        std::vector<double> delta{rng.normal(), rng.normal(), rng.normal()};
        auto ys = shifted(y, delta);
        auto check = [&](const QualityVector& a, const QualityVector& b) {
            for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(b[i], a[i] + delta[i], 1e-10);
        };
        check(mean_estimator(y), mean_estimator(ys));
        check(median_estimator(y), median_estimator(ys));
        check(reweighted_mean(y, order), reweighted_mean(ys, order));
    }
}

TEST(ReweightedMeanTree, SingleNodeIsSampleMean) {
    std::map<ElementId, std::size_t> node;
    auto y = RatingMatrix::from_rows({{1, 2, 6}, {0, 4}});
    for (const auto& e : y.cells().cells()) node[e] = 0;
    auto order = build_tree_ordering(node, {});
    for (auto mode : {TreeMode::node, TreeMode::level})
        EXPECT_LT(max_abs_diff(reweighted_mean_tree(y, order, mode), mean_estimator(y)), 1e-12);
}

TEST(ReweightedMeanTree, LevelModeEqualsGroupLayout) {
    Rng rng(5);
    std::map<std::size_t, std::size_t> parents{{1, 0}, {2, 0}, {3, 1}, {4, 1}, {5, 2}, {6, 2}};
    auto cells = ObservationSet::full(3, 9);
    std::map<ElementId, std::size_t> node, level;
    for (const auto& e : cells.cells()) {
        std::size_t v = rng.index(7);
        node[e] = v;
        level[e] = v == 0 ? 0 : (v <= 2 ? 1 : 2);
    }
    auto tree = build_tree_ordering(node, parents);
    auto groups = build_group_ordering(level, 3);
    auto y = random_matrix(cells, rng);
    QualityVector a, b;
    bool tree_ok = true, group_ok = true;
    try {
        a = reweighted_mean_tree(y, tree, TreeMode::level);
    } catch (const not_applicable_error&) {
        tree_ok = false;
    }
    try {
        b = reweighted_mean(y, groups);
    } catch (const not_applicable_error&) {
        group_ok = false;
    }
    ASSERT_EQ(tree_ok, group_ok);
    if (tree_ok) {
        EXPECT_LT(max_abs_diff(a, b), 1e-12);
    }
}

TEST(ReweightedMeanTree, NodeModeNeedsSharedNode) {
    // root only in course 0, leaf only in course 1: no node shared by both courses
    auto order = build_tree_ordering({{{0, 0}, 0}, {{1, 0}, 1}}, {{1, 0}});
    auto y = RatingMatrix::from_rows({{0}, {1}});
    EXPECT_THROW(reweighted_mean_tree(y, order, TreeMode::node), not_applicable_error);
    EXPECT_THROW(reweighted_mean_tree(y, order, TreeMode::level), not_applicable_error);
    auto groups = build_group_ordering({{{0, 0}, 0}, {{1, 0}, 0}}, 1, true);
    EXPECT_THROW(reweighted_mean_tree(y, groups, TreeMode::node), not_applicable_error);
}
