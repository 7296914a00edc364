#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "estimator.hpp"
#include "poset.hpp"
#include "types.hpp"

namespace ratingbias {

/// Per-course mean over omega; identical arithmetic to the lambda = inf fit.
inline QualityVector mean_estimator(const RatingMatrix& y, const ObservationSet& omega) {
    return course_means(omega == y.cells() ? y : y.restrict_to(omega));
}

inline QualityVector mean_estimator(const RatingMatrix& y) { return course_means(y); }

/// Per-course median; even counts average the two central values.
inline QualityVector median_estimator(const RatingMatrix& y, const ObservationSet& omega) {
    auto yo = omega == y.cells() ? y : y.restrict_to(omega);
    QualityVector x(yo.num_courses());
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto row = yo.row(i);
        std::sort(row.begin(), row.end());
        const auto m = row.size();
        x[i] = m % 2 ? row[m / 2] : 0.5 * (row[m / 2 - 1] + row[m / 2]);
    }
    return x;
}

inline QualityVector median_estimator(const RatingMatrix& y) { return median_estimator(y, y.cells()); }

/// Counts ell[i][k] of course i in partition cell k, their per-cell minimum over
/// courses, and R, the cells present in every course.
struct GroupLayout {
    std::vector<std::vector<std::size_t>> ell;
    std::vector<std::size_t> ell_min;
    std::vector<std::size_t> R;
    /// partition cell of each element of the observed set (flat order)
    std::vector<std::size_t> label;
    ObservationSet cells;
};

inline GroupLayout make_layout(const ObservationSet& omega, std::vector<std::size_t> label, std::size_t num_labels) {
    if (label.size() != omega.size()) throw std::invalid_argument("make_layout: label count mismatch");
    GroupLayout g;
    const std::size_t d = omega.num_courses();
    g.ell.assign(d, std::vector<std::size_t>(num_labels, 0));
    for (std::size_t e = 0; e < label.size(); ++e) {
        if (label[e] >= num_labels) throw std::invalid_argument("make_layout: label out of range");
        ++g.ell[omega.course_of(e)][label[e]];
    }
    g.ell_min.assign(num_labels, 0);
    for (std::size_t k = 0; k < num_labels; ++k) {
        std::size_t m = g.ell[0][k];
        for (std::size_t i = 1; i < d; ++i) m = std::min(m, g.ell[i][k]);
        g.ell_min[k] = m;
        if (m > 0) g.R.push_back(k);
    }
    g.label = std::move(label);
    g.cells = omega;
    return g;
}

enum class PartitionBy { group, node, level };

/// Layout of the order restricted to omega, partitioned by group index, tree
/// node, or tree level.
inline GroupLayout layout_of(const PartialOrder& order, const ObservationSet& omega, PartitionBy by) {
    auto sub = omega == order.cells() ? order : order.restrict_to(omega);
    std::vector<std::size_t> label(sub.size());
    std::size_t count = 0;
    for (std::size_t e = 0; e < sub.size(); ++e) {
        auto c = sub.class_of(e);
        label[e] = by == PartitionBy::level ? sub.class_depth(c) : sub.class_label(c);
        count = std::max(count, label[e] + 1);
    }
    if (by != PartitionBy::level) count = std::max(count, sub.num_labels());
    return make_layout(sub.cells(), std::move(label), count);
}

/// Reweighting: x_i = sum_{k in R} w_k * mean of course i over partition cell k,
/// w_k = ell_min[k] / sum_R ell_min. Recentering: shift so sum_i n_i x_i equals
/// the sum of all observations. Throws not_applicable_error when R is empty.
inline QualityVector reweighted_mean(const RatingMatrix& y, const GroupLayout& layout) {
    if (layout.R.empty()) throw not_applicable_error("reweighted mean: no partition cell is present in every course");
    const auto& omega = layout.cells;
    const std::size_t d = omega.num_courses(), r = layout.ell_min.size();
    std::vector<std::vector<double>> sums(d, std::vector<double>(r, 0.0));
    double total = 0.0;
    for (std::size_t e = 0; e < omega.size(); ++e) {
        double v = y.at(omega.cell(e));
        sums[omega.course_of(e)][layout.label[e]] += v;
        total += v;
    }
    double wsum = 0.0;
    for (auto k : layout.R) wsum += static_cast<double>(layout.ell_min[k]);
    QualityVector x(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        for (auto k : layout.R)
            x[i] += static_cast<double>(layout.ell_min[k]) / wsum * sums[i][k] / static_cast<double>(layout.ell[i][k]);
    double weighted = 0.0;
    for (std::size_t i = 0; i < d; ++i) weighted += static_cast<double>(omega.course_size(i)) * x[i];
    const double shift = (total - weighted) / static_cast<double>(omega.size());
    for (auto& v : x) v += shift;
    return x;
}

inline QualityVector reweighted_mean(const RatingMatrix& y, const PartialOrder& group_order, const ObservationSet& omega) {
    if (group_order.kind() != OrderKind::group) throw not_applicable_error("reweighted mean: needs a group ordering");
    return reweighted_mean(y, layout_of(group_order, omega, PartitionBy::group));
}

inline QualityVector reweighted_mean(const RatingMatrix& y, const PartialOrder& group_order) {
    return reweighted_mean(y, group_order, group_order.cells());
}

enum class TreeMode { node, level };

/// The reweighted mean with the partition given by tree nodes or by tree depth.
/// Not applicable when no node (level) holds elements of every course.
inline QualityVector reweighted_mean_tree(const RatingMatrix& y, const PartialOrder& tree_order, TreeMode mode,
                                          const ObservationSet& omega) {
    if (tree_order.kind() != OrderKind::tree) throw not_applicable_error("reweighted mean (tree): needs a tree ordering");
    return reweighted_mean(y, layout_of(tree_order, omega, mode == TreeMode::node ? PartitionBy::node : PartitionBy::level));
}

inline QualityVector reweighted_mean_tree(const RatingMatrix& y, const PartialOrder& tree_order, TreeMode mode) {
    return reweighted_mean_tree(y, tree_order, mode, tree_order.cells());
}

} // namespace ratingbias
