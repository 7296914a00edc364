#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "estimator.hpp"
#include "poset.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace ratingbias {

struct Split {
    ObservationSet train;
    ObservationSet validation;
    /// pi_0, the sampled extension that guided the split (cells of omega, ascending).
    std::vector<ElementId> guide;
};

struct CvReport {
    std::vector<Lambda> lambdas;
    std::vector<double> errors; // aligned with lambdas
    Lambda selected;
    std::size_t selected_index = 0;
    std::size_t extensions_used = 0;
    std::uint64_t split_seed = 0;
    std::uint64_t interpolation_seed = 0;
    Split split;
};

struct CvFit {
    Solution solution;
    CvReport report;
};

enum class RefitOn { full, train };

/// Samples pi_0, then walks each course's cells in pi_0 order, sending one cell of
/// each consecutive pair to train and the other to validation by a fair coin; an
/// unpaired last cell goes to validation. Every course needs two cells so that
/// the training set keeps all courses.
inline Split split(const ObservationSet& omega, const PartialOrder& order, Rng& rng) {
    if (!omega.is_subset_of(order.cells())) throw std::invalid_argument("split: order does not cover the observed set");
    for (std::size_t i = 0; i < omega.num_courses(); ++i)
        if (omega.course_size(i) < 2)
            throw std::invalid_argument("split: course " + std::to_string(i) + " has fewer than 2 observed cells");
    auto sub = omega == order.cells() ? order : order.restrict_to(omega);
    auto ranked = sample_extension_indices(sub, rng);
    const std::size_t d = omega.num_courses();
    std::vector<std::vector<std::size_t>> per_course(d);
    Split s;
    for (auto e : ranked) {
        per_course[omega.course_of(e)].push_back(e);
        s.guide.push_back(omega.cell(e));
    }
    std::vector<ElementId> train, val;
    for (std::size_t i = 0; i < d; ++i) {
        const auto& seq = per_course[i];
        std::size_t t = 0;
        for (; t + 1 < seq.size(); t += 2) {
            bool first_to_train = rng.coin();
            train.push_back(omega.cell(seq[first_to_train ? t : t + 1]));
            val.push_back(omega.cell(seq[first_to_train ? t + 1 : t]));
        }
        if (t < seq.size()) val.push_back(omega.cell(seq[t]));
    }
    s.train = ObservationSet::from_cells(d, train);
    s.validation = ObservationSet::from_cells(d, val);
    return s;
}

/// Linear map from training-set bias values to interpolated validation bias.
/// row_of[v] indexes `rows`; each row holds (train flat index, weight) pairs.
struct InterpolationWeights {
    std::vector<std::size_t> row_of;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
    std::size_t extensions = 0;

    std::vector<double> apply(const std::vector<double>& b_train) const {
        std::vector<double> row_value(rows.size(), 0.0), out(row_of.size());
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (auto [t, w] : rows[r]) row_value[r] += w * b_train[t];
        for (std::size_t v = 0; v < row_of.size(); ++v) out[v] = row_value[row_of[v]];
        return out;
    }
};

/// For K sampled extensions of the order on train u validation, each validation
/// cell takes the bias of the nearest training cell in rank (the mean of the two
/// neighbours when they are equally far; the single nearest at either end), and
/// the results are averaged over extensions. Cells of one class are exchangeable,
/// so their expected interpolation is identical; the weights are averaged over
/// each class's validation cells, which removes sampling noise between them.
/// A total order has a single extension, so K is forced to 1 there.
inline InterpolationWeights interpolation_weights(const Split& s, const PartialOrder& order, std::size_t K, Rng& rng) {
    if (K < 1) throw std::invalid_argument("interpolate: need at least one extension");
    const std::size_t d = s.train.num_courses();
    std::vector<ElementId> all = s.train.cells();
    auto vc = s.validation.cells();
    all.insert(all.end(), vc.begin(), vc.end());
    auto omega = ObservationSet::from_cells(d, all);
    auto sub = omega == order.cells() ? order : order.restrict_to(omega);
    const std::size_t N = sub.size();
    std::vector<std::size_t> train_index(N, PartialOrder::npos), val_index(N, PartialOrder::npos);
    for (std::size_t e = 0; e < N; ++e) {
        auto cell = sub.element(e);
        train_index[e] = s.train.index_of(cell);
        val_index[e] = s.validation.index_of(cell);
    }
    if (sub.kind() == OrderKind::total || (sub.num_classes() == N && sub.is_chain())) K = 1;

    std::vector<std::vector<std::pair<std::size_t, double>>> acc(s.validation.size());
    std::vector<std::size_t> pos_train;
    for (std::size_t k = 0; k < K; ++k) {
        auto ranked = sample_extension_indices(sub, rng);
        pos_train.clear();
        for (std::size_t t = 0; t < N; ++t)
            if (train_index[ranked[t]] != PartialOrder::npos) pos_train.push_back(t);
        if (pos_train.empty()) throw std::invalid_argument("interpolate: empty training set");
        std::size_t next = 0; // first training position greater than t
        for (std::size_t t = 0; t < N; ++t) {
            while (next < pos_train.size() && pos_train[next] <= t) ++next;
            auto v = val_index[ranked[t]];
            if (v == PartialOrder::npos) continue;
            bool has_lo = next > 0, has_hi = next < pos_train.size();
            std::size_t lo = has_lo ? pos_train[next - 1] : 0, hi = has_hi ? pos_train[next] : 0;
            auto tr = [&](std::size_t p) { return train_index[ranked[p]]; };
            if (has_lo && has_hi && t - lo == hi - t) {
                acc[v].emplace_back(tr(lo), 0.5);
                acc[v].emplace_back(tr(hi), 0.5);
            } else if (has_lo && (!has_hi || t - lo < hi - t)) {
                acc[v].emplace_back(tr(lo), 1.0);
            } else {
                acc[v].emplace_back(tr(hi), 1.0);
            }
        }
    }
    // Pool rows by class.
    InterpolationWeights w;
    w.extensions = K;
    w.row_of.assign(s.validation.size(), 0);
    std::vector<std::size_t> class_row(sub.num_classes(), PartialOrder::npos);
    std::vector<std::size_t> row_size;
    std::vector<std::vector<std::pair<std::size_t, double>>> raw;
    for (std::size_t e = 0; e < N; ++e) {
        auto v = val_index[e];
        if (v == PartialOrder::npos) continue;
        auto c = sub.class_of(e);
        if (class_row[c] == PartialOrder::npos) {
            class_row[c] = raw.size();
            raw.emplace_back();
            row_size.push_back(0);
        }
        auto r = class_row[c];
        w.row_of[v] = r;
        raw[r].insert(raw[r].end(), acc[v].begin(), acc[v].end());
        ++row_size[r];
    }
    for (std::size_t r = 0; r < raw.size(); ++r) {
        auto& entries = raw[r];
        std::sort(entries.begin(), entries.end());
        std::vector<std::pair<std::size_t, double>> merged;
        for (auto [t, x] : entries) {
            if (!merged.empty() && merged.back().first == t)
                merged.back().second += x;
            else
                merged.emplace_back(t, x);
        }
        const double scale = 1.0 / (static_cast<double>(K) * static_cast<double>(row_size[r]));
        for (auto& m : merged) m.second *= scale;
        w.rows.push_back(std::move(merged));
    }
    return w;
}

namespace detail {

inline std::vector<double> train_values(const RatingMatrix& b_hat, const ObservationSet& train) {
    std::vector<double> v(train.size());
    for (std::size_t k = 0; k < train.size(); ++k) v[k] = b_hat.at(train.cell(k));
    return v;
}

} // namespace detail

/// Interpolated bias on the validation cells. b_hat_train may live on any cell
/// set containing the training cells.
inline RatingMatrix interpolate(const RatingMatrix& b_hat_train, const Split& s, const PartialOrder& order,
                                std::size_t K, Rng& rng) {
    auto w = interpolation_weights(s, order, K, rng);
    return RatingMatrix(s.validation, w.apply(detail::train_values(b_hat_train, s.train)));
}

/// Mean squared validation residual y - x_i - b_tilde.
inline double cv_error(const RatingMatrix& y, const QualityVector& x_hat, const RatingMatrix& b_tilde,
                       const ObservationSet& validation) {
    if (validation.size() == 0) throw std::invalid_argument("cv_error: empty validation set");
    if (x_hat.size() != validation.num_courses()) throw std::invalid_argument("cv_error: x length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < validation.size(); ++k) {
        auto e = validation.cell(k);
        double r = y.at(e) - x_hat[e.course] - b_tilde.at(e);
        s += r * r;
    }
    return s / static_cast<double>(validation.size());
}

/// First index attaining the minimum.
inline std::size_t argmin_first(const std::vector<double>& errors) {
    if (errors.empty()) throw std::invalid_argument("argmin_first: no candidates");
    std::size_t best = 0;
    for (std::size_t k = 1; k < errors.size(); ++k)
        if (errors[k] < errors[best]) best = k;
    return best;
}

/// One guided split, a fit on the training cells for every lambda, interpolation
/// onto validation, and the validation error. Ties go to the earliest lambda.
/// The split and the interpolation draw from two independent streams seeded from rng.
inline CvReport select_lambda(const RatingMatrix& y, const PartialOrder& order, const ObservationSet& omega,
                              const std::vector<Lambda>& grid, std::size_t K, Rng& rng) {
    if (grid.empty()) throw std::invalid_argument("select_lambda: empty lambda grid");
    if (K < 1) throw std::invalid_argument("select_lambda: need at least one extension");
    CvReport rep;
    rep.lambdas = grid;
    rep.split_seed = rng();
    rep.interpolation_seed = rng();
    Rng split_rng(rep.split_seed), interp_rng(rep.interpolation_seed);
    rep.split = split(omega, order, split_rng);
    auto weights = interpolation_weights(rep.split, order, K, interp_rng);
    rep.extensions_used = weights.extensions;
    auto path = fit_path(y, order, grid, rep.split.train);
    for (const auto& sol : path) {
        RatingMatrix bt(rep.split.validation, weights.apply(detail::train_values(sol.b_hat, rep.split.train)));
        rep.errors.push_back(cv_error(y, sol.x_hat, bt, rep.split.validation));
    }
    rep.selected_index = argmin_first(rep.errors);
    rep.selected = grid[rep.selected_index];
    return rep;
}

/// select_lambda followed by the fit at the selected lambda, on all of omega
/// by default or on the training cells only.
inline CvFit fit_cv(const RatingMatrix& y, const PartialOrder& order, const ObservationSet& omega,
                    const std::vector<Lambda>& grid, std::size_t K, Rng& rng, RefitOn refit = RefitOn::full) {
    CvFit out;
    out.report = select_lambda(y, order, omega, grid, K, rng);
    const auto& cells = refit == RefitOn::full ? omega : out.report.split.train;
    out.solution = fit(y, order, out.report.selected, cells);
    return out;
}

} // namespace ratingbias
