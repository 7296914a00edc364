#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace ratingbias;
using namespace rbtest;

namespace {

std::size_t constraint_count(const PartialOrder& o) { return o.implied_pairs().size(); }

PartialOrder d2n2_groups() {
    return build_group_ordering({{{0, 0}, 0}, {{0, 1}, 1}, {{1, 0}, 0}, {{1, 1}, 1}}, 2);
}

} // namespace

TEST(GroupOrdering, TwoElementsGiveOneConstraint) {
    auto o = build_group_ordering({{{0, 0}, 0}, {{0, 1}, 1}}, 2);
    auto pairs = o.implied_pairs();
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(o.element(pairs[0].first), (ElementId{0, 0}));
    EXPECT_EQ(o.element(pairs[0].second), (ElementId{0, 1}));
}

TEST(GroupOrdering, SingleGroupIsVacuous) {
    std::map<ElementId, std::size_t> g{{{0, 0}, 0}, {{0, 1}, 0}, {{0, 2}, 0}, {{0, 3}, 0}};
    EXPECT_THROW(build_group_ordering(g, 1), std::invalid_argument);
    EXPECT_EQ(constraint_count(build_group_ordering(g, 1, true)), 0u);
}

TEST(GroupOrdering, CrossGroupPairsOnly) {
    auto o = d2n2_groups();
    EXPECT_EQ(constraint_count(o), 4u);
    for (auto [a, b] : o.implied_pairs()) {
        EXPECT_EQ(o.element(a).slot, 0u);
        EXPECT_EQ(o.element(b).slot, 1u);
    }
}

TEST(GroupOrdering, Errors) {
    EXPECT_THROW(build_group_ordering({{{0, 0}, 2}}, 2), std::invalid_argument);
    EXPECT_THROW(build_group_ordering({}, 2), std::invalid_argument);
}

TEST(GroupOrdering, EmptyGroupsAreSkippedTransitively) {
    // group 1 is empty: group 0 must still lie below group 2
    auto o = build_group_ordering({{{0, 0}, 0}, {{0, 1}, 2}}, 3);
    EXPECT_EQ(constraint_count(o), 1u);
}

TEST(TotalOrdering, ChainOfTwo) {
    auto o = build_total_ordering({{0, 0}, {0, 1}});
    EXPECT_EQ(constraint_count(o), 1u);
    EXPECT_TRUE(o.is_chain());
}

TEST(TotalOrdering, NonInterleavingAndInterleaving) {
    auto non = build_total_ordering({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    auto inter = build_total_ordering({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    EXPECT_EQ(constraint_count(non), 6u);
    EXPECT_EQ(*classify(non, 0.5).interleaving_points, 1u);
    EXPECT_EQ(*classify(inter, 0.5).interleaving_points, 3u);
    EXPECT_TRUE(non.implies(non.index_of({0, 1}), non.index_of({1, 0})));
    EXPECT_TRUE(inter.implies(inter.index_of({1, 0}), inter.index_of({0, 1})));
}

TEST(TotalOrdering, DuplicatesRejected) {
    EXPECT_THROW(build_total_ordering({{0, 0}, {0, 0}}), std::invalid_argument);
    EXPECT_THROW(build_total_ordering({}), std::invalid_argument);
}

TEST(TreeOrdering, RootWithTwoChildren) {
    auto o = build_tree_ordering({{{0, 0}, 0}, {{0, 1}, 1}, {{1, 0}, 2}}, {{1, 0}, {2, 0}});
    EXPECT_EQ(constraint_count(o), 2u);
    EXPECT_TRUE(o.implies(o.index_of({0, 0}), o.index_of({0, 1})));
    EXPECT_TRUE(o.implies(o.index_of({0, 0}), o.index_of({1, 0})));
    EXPECT_FALSE(o.implies(o.index_of({0, 1}), o.index_of({1, 0})));
}

TEST(TreeOrdering, EdgeAdjacentNodesOnlyDirectlyConstrained) {
    // three-level binary tree, k = 2 elements per node
    std::map<std::size_t, std::size_t> parents{{1, 0}, {2, 0}, {3, 1}, {4, 1}, {5, 2}, {6, 2}};
    std::map<ElementId, std::size_t> node;
    for (std::size_t v = 0; v < 7; ++v)
        for (std::size_t t = 0; t < 2; ++t) node[{v % 3, 2 * v + t}] = v;
    auto o = build_tree_ordering(node, parents);
    for (std::size_t c = 0; c < o.num_classes(); ++c)
        for (auto s : o.successors(c)) {
            auto child = o.class_label(s), parent = o.class_label(c);
            EXPECT_EQ(parents.at(child), parent);
        }
    // root to grandchild holds by transitivity
    auto root = o.index_of({0, 0}), leaf = o.index_of({0, 6});
    EXPECT_TRUE(o.implies(root, leaf));
}

TEST(TreeOrdering, TotalTreeWithOneLeafRemoved) {
    ScenarioConfig c;
    c.scenario = Scenario::tree_total;
    c.n = 3; // depth 3: 7 nodes, one leaf removed
    auto inst = generate_instance(c, 0);
    EXPECT_EQ(inst.order.size(), 6u);
    EXPECT_EQ(inst.order.kind(), OrderKind::tree);
}

TEST(TreeOrdering, CycleRejected) {
    EXPECT_THROW(build_tree_ordering({{{0, 0}, 0}}, {{0, 1}, {1, 0}}), std::invalid_argument);
}

TEST(DagOrdering, CycleRejected) {
    EXPECT_THROW(build_dag_ordering({{0, 0}, {0, 1}}, std::vector<std::pair<ElementId, ElementId>>{
                                                          {{0, 0}, {0, 1}}, {{0, 1}, {0, 0}}}),
                 std::invalid_argument);
}

TEST(Satisfies, Examples) {
    auto chain = build_total_ordering({{0, 0}, {0, 1}});
    EXPECT_TRUE(satisfies(RatingMatrix(chain.cells(), 0.0), chain, 0.0));
    EXPECT_FALSE(satisfies(RatingMatrix::from_rows({{1.0, 0.0}}), chain, 0.0));
    auto g = d2n2_groups();
    EXPECT_TRUE(satisfies(RatingMatrix::from_rows({{-2.5, 2.5}, {-2.5, 2.5}}), g, 0.0));
    EXPECT_FALSE(satisfies(RatingMatrix::from_rows({{-2.5, 2.5}, {3.0, 2.5}}), g, 0.0));
}

TEST(Satisfies, MonotoneInTolerance) {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        auto inst = random_instance(static_cast<std::size_t>(t), 2, 1, 4, rng);
        const std::vector<double> tols{0.0, 1e-6, 1e-3, 0.1, 1.0, 10.0};
        bool seen = false;
        for (double tol : tols) {
            bool ok = satisfies(inst.y, inst.order, tol);
            if (seen) {
                EXPECT_TRUE(ok);
            }
            seen = seen || ok;
        }
    }
}

TEST(LinearExtension, TotalOrderIsFixed) {
    Rng rng(1);
    auto o = build_total_ordering({{1, 0}, {0, 1}, {0, 0}, {1, 1}});
    for (int t = 0; t < 50; ++t) {
        auto ext = sample_linear_extension(o, rng);
        EXPECT_EQ(ext.ranked, (std::vector<ElementId>{{1, 0}, {0, 1}, {0, 0}, {1, 1}}));
    }
}

TEST(LinearExtension, TwoSingletonGroups) {
    Rng rng(2);
    auto o = build_group_ordering({{{0, 0}, 1}, {{1, 0}, 0}}, 2);
    for (int t = 0; t < 20; ++t)
        EXPECT_EQ(sample_linear_extension(o, rng).ranked, (std::vector<ElementId>{{1, 0}, {0, 0}}));
}

TEST(LinearExtension, UniformWithinOneGroup) {
    Rng rng(0);
    auto o = build_group_ordering({{{0, 0}, 0}, {{0, 1}, 0}, {{0, 2}, 0}}, 1, true);
    std::map<std::vector<std::size_t>, int> counts;
    const int draws = 60000;
    for (int t = 0; t < draws; ++t) ++counts[sample_extension_indices(o, rng)];
    ASSERT_EQ(counts.size(), 6u);
    const double expected = draws / 6.0, sd = std::sqrt(expected * 5.0 / 6.0);
    double chi2 = 0.0;
    for (const auto& [perm, k] : counts) {
        EXPECT_NEAR(k, expected, 3 * sd);
        chi2 += (k - expected) * (k - expected) / expected;
    }
    EXPECT_LT(chi2, 20.5); // 5 degrees of freedom, p = 0.001
}

TEST(LinearExtension, TreeSamplerIsUniform) {
    // root with two children, one of which has a child: extensions differ in count per interleaving
    auto o = build_tree_ordering({{{0, 0}, 0}, {{0, 1}, 1}, {{1, 0}, 1}, {{1, 1}, 2}, {{0, 2}, 3}},
                                 {{1, 0}, {2, 0}, {3, 1}});
    auto all = all_linear_extensions(o);
    std::map<std::vector<std::size_t>, int> counts;
    Rng rng(4);
    const int draws = 60000;
    for (int t = 0; t < draws; ++t) ++counts[sample_extension_indices(o, rng)];
    EXPECT_EQ(counts.size(), all.size());
    const double p = 1.0 / static_cast<double>(all.size()), sd = std::sqrt(draws * p * (1 - p));
    for (const auto& ext : all) EXPECT_NEAR(counts[ext], draws * p, 4 * sd);
}

TEST(LinearExtension, DagSamplerReachesEveryExtension) {
    auto o = build_dag_ordering({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, std::vector<std::pair<ElementId, ElementId>>{
                                                                       {{0, 0}, {1, 1}}, {{1, 0}, {1, 1}}, {{1, 0}, {0, 1}}});
    auto all = all_linear_extensions(o);
    std::set<std::vector<std::size_t>> seen;
    Rng rng(5);
    for (int t = 0; t < 5000; ++t) seen.insert(sample_extension_indices(o, rng));
    EXPECT_EQ(seen.size(), all.size());
}

TEST(LinearExtension, ConsistentForEveryKind) {
    Rng rng(6);
    for (std::size_t kind = 0; kind < 4; ++kind) {
        auto inst = random_instance(kind, 3, 2, 6, rng);
        for (int t = 0; t < 1000; ++t) {
            auto ext = sample_linear_extension(inst.order, rng);
            ASSERT_TRUE(is_linear_extension(inst.order, ext)) << to_string(inst.order.kind());
        }
    }
}

TEST(LinearExtension, RejectsViolations) {
    auto o = build_total_ordering({{0, 0}, {0, 1}});
    EXPECT_FALSE(is_linear_extension(o, std::vector<std::size_t>{1, 0}));
    EXPECT_FALSE(is_linear_extension(o, std::vector<std::size_t>{0}));
}

TEST(ReduceConstraints, SingleGroupChainBySortedValues) {
    auto o = build_group_ordering({{{0, 0}, 0}, {{0, 1}, 0}, {{0, 2}, 0}}, 1, true);
    auto cs = reduce_constraints(o, RatingMatrix::from_rows({{3.0, 1.0, 2.0}}));
    std::vector<std::pair<ElementId, ElementId>> expected{{{0, 1}, {0, 2}}, {{0, 2}, {0, 0}}};
    EXPECT_EQ(cs.pairs, expected);
}

TEST(ReduceConstraints, TwoSingletonGroups) {
    auto o = build_group_ordering({{{0, 0}, 0}, {{1, 0}, 1}}, 2);
    auto cs = reduce_constraints(o, RatingMatrix::from_rows({{0.3}, {-1.0}}));
    ASSERT_EQ(cs.pairs.size(), 1u);
    EXPECT_EQ(cs.pairs[0], (std::pair<ElementId, ElementId>{{0, 0}, {1, 0}}));
}

TEST(ReduceConstraints, CellExtremaOnly) {
    // d = 2, r = 2, each (course, group) cell of size 2
    std::map<ElementId, std::size_t> g;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 4; ++j) g[{i, j}] = j / 2;
    auto o = build_group_ordering(g, 2);
    auto y = RatingMatrix::from_rows({{0.5, 0.1, 0.9, 0.7}, {0.2, 0.6, 0.3, 0.8}});
    auto cs = reduce_constraints(o, y);
    EXPECT_EQ(cs.pairs.size(), 4u + 4u); // one chain link per cell, one link per cell pair across groups
    EXPECT_LT(cs.pairs.size(), constraint_count(o));
    for (const auto& [a, b] : cs.pairs) {
        if (g[a] == g[b]) continue;
        EXPECT_EQ(y.at(a), std::max(y.at({a.course, a.slot < 2 ? 0u : 2u}), y.at({a.course, a.slot < 2 ? 1u : 3u})));
        EXPECT_EQ(y.at(b), std::min(y.at({b.course, 2}), y.at({b.course, 3})));
    }
}

TEST(ReduceConstraints, SameOptimumAsFullConstraintSet) {
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        std::size_t d = 1 + rng.index(3);
        auto inst = random_instance(0, d, 1, 6, rng);
        auto cs = reduce_constraints(inst.order, inst.y);
        auto reduced = build_dag_ordering(inst.order.cells().cells(), cs);
        for (auto lam : {Lambda::finite(0.0), Lambda::finite(0.5)}) {
            auto full = fit(inst.y, inst.order, lam);
            auto red = fit(inst.y, reduced, lam);
            EXPECT_NEAR(full.diagnostics.objective, red.diagnostics.objective, 1e-8);
            EXPECT_TRUE(satisfies(red.b_hat, inst.order, 1e-8));
        }
    }
}

TEST(Classify, EqualGroupsAreAllHalfFraction) {
    std::map<ElementId, std::size_t> g;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 10; ++j) g[{i, j}] = j < 5 ? 0 : 1;
    auto c = classify(build_group_ordering(g, 2), 0.5);
    EXPECT_TRUE(c.all_c_fraction);
    EXPECT_FALSE(c.interleaving_points.has_value());
}

TEST(Classify, BinaryLayoutFractions) {
    ScenarioConfig cfg;
    cfg.scenario = Scenario::binary;
    cfg.d = 2;
    cfg.n = 50;
    auto o = generate_instance(cfg, 0).order;
    EXPECT_TRUE(classify(o, 0.1).all_c_fraction);
    EXPECT_FALSE(classify(o, 0.2).all_c_fraction);
    EXPECT_TRUE(classify(o, 0.05).single_c_fraction);
}

TEST(Classify, TotalOrderAsSingletonGroups) {
    Rng rng(8);
    for (int t = 0; t < 20; ++t) {
        auto o = random_total_order(ObservationSet::full(2 + rng.index(2), 2 + rng.index(4)), rng);
        EXPECT_FALSE(classify(o, 0.01).all_c_fraction);
    }
}

TEST(Classify, RejectsTrees) {
    auto o = build_tree_ordering({{{0, 0}, 0}, {{0, 1}, 1}}, {{1, 0}});
    EXPECT_THROW(classify(o, 0.5), std::invalid_argument);
}

TEST(RestrictTo, KeepsKindAndRelations) {
    Rng rng(9);
    for (std::size_t kind = 0; kind < 4; ++kind) {
        auto inst = random_instance(kind, 2, 3, 5, rng);
        std::vector<ElementId> keep;
        for (const auto& e : inst.order.cells().cells())
            if (e.slot != 1) keep.push_back(e);
        auto sub_cells = ObservationSet::from_cells(2, keep);
        auto sub = inst.order.restrict_to(sub_cells);
        EXPECT_EQ(sub.kind(), inst.order.kind());
        for (std::size_t a = 0; a < sub.size(); ++a)
            for (std::size_t b = 0; b < sub.size(); ++b)
                if (a != b) {
                    EXPECT_EQ(sub.implies(a, b),
                              inst.order.implies(inst.order.index_of(sub.element(a)), inst.order.index_of(sub.element(b))));
                }
    }
}

TEST(PosetIo, RoundTripEveryKind) {
    Rng rng(10);
    for (std::size_t kind = 0; kind < 4; ++kind) {
        auto inst = random_instance(kind, 3, 1, 4, rng);
        std::stringstream ss;
        write_poset(ss, inst.order);
        auto back = read_poset(ss);
        EXPECT_EQ(back.kind(), inst.order.kind());
        ASSERT_EQ(back.cells(), inst.order.cells());
        for (std::size_t a = 0; a < back.size(); ++a)
            for (std::size_t b = 0; b < back.size(); ++b)
                if (a != b) {
                    EXPECT_EQ(back.implies(a, b), inst.order.implies(a, b));
                }
    }
}

TEST(PosetIo, ParsesDocumentedFormat) {
    std::istringstream in("# two courses\n"
                          "tree 2 3\n"
                          "0 0 0\n0 1 1\n1 0 2\n"
                          "1 0\n2 0\n0 -1\n");
    auto o = read_poset(in);
    EXPECT_EQ(o.kind(), OrderKind::tree);
    EXPECT_EQ(o.implied_pairs().size(), 2u);
}

TEST(PosetIo, Errors) {
    std::istringstream bad_kind("ring 2 2\n0 0 0\n1 0 1\n");
    EXPECT_THROW(read_poset(bad_kind), std::invalid_argument);
    std::istringstream missing_course("group 2 2\n0 0 0\n0 1 1\n");
    EXPECT_THROW(read_poset(missing_course), std::invalid_argument);
    std::istringstream relation_in_group("group 1 2\n0 0 0\n0 1 1\n0 1\n");
    EXPECT_THROW(read_poset(relation_in_group), std::invalid_argument);
}
