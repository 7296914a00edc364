#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isotonic.hpp"
#include "poset.hpp"
#include "small_qp.hpp"
#include "types.hpp"

namespace ratingbias {

struct FitDiagnostics {
    std::size_t iterations = 0;
    double objective = 0.0;
    double feasibility_residual = 0.0;
    double gradient_norm = 0.0;
    bool tie_break = false; // the lambda = 0 minimum-norm step ran
};

/// (x_hat, B_hat) for one lambda. b_hat lives on the order's cells and is zero
/// outside the observed set used for fitting.
struct Solution {
    QualityVector x_hat;
    RatingMatrix b_hat;
    Lambda lambda;
    FitDiagnostics diagnostics;
};

struct FitOptions {
    std::size_t max_iterations = 10000;
    /// Stop once the largest gradient entry falls below gradient_tol * (1 + sum |y|).
    double gradient_tol = 1e-13;
    std::optional<QualityVector> initial_x;
};

/// Per-course mean over the observed cells, summed in slot order. The lambda = inf
/// fit and the mean baseline both use this so their outputs agree bitwise.
inline QualityVector course_means(const RatingMatrix& y) {
    const auto& cells = y.cells();
    QualityVector x(cells.num_courses(), 0.0);
    for (std::size_t i = 0; i < cells.num_courses(); ++i) {
        double s = 0.0;
        for (std::size_t k = cells.offset(i); k < cells.offset(i + 1); ++k) s += y[k];
        x[i] = s / static_cast<double>(cells.course_size(i));
    }
    return x;
}

/// ||Y - x 1^T - B||^2 + lambda ||B||^2 over the cells of y. b must cover them;
/// lambda = inf is only finite when B vanishes there.
inline double objective(const RatingMatrix& y, const QualityVector& x, const RatingMatrix& b, Lambda lambda) {
    if (x.size() != y.num_courses()) throw std::invalid_argument("objective: x length mismatch");
    double fit = 0.0, norm = 0.0;
    const auto& cells = y.cells();
    for (std::size_t k = 0; k < y.size(); ++k) {
        auto e = cells.cell(k);
        double bk = b.cells() == cells ? b[k] : b.at(e);
        double res = y[k] - x[e.course] - bk;
        fit += res * res;
        norm += bk * bk;
    }
    if (lambda.is_infinite()) return norm == 0.0 ? fit : std::numeric_limits<double>::infinity();
    return fit + lambda.value() * norm;
}

namespace detail {

/// Data of a fit restricted to the observed cells; order elements and y share flat indexing.
struct Problem {
    PartialOrder order;
    std::vector<double> y;
    std::vector<std::size_t> course;
    std::vector<double> count;
    std::size_t d = 0;

    Problem(const RatingMatrix& ym, const PartialOrder& full, const ObservationSet& omega)
        : order(omega == full.cells() ? full : full.restrict_to(omega)) {
        y = values_on(order, ym);
        d = omega.num_courses();
        count.assign(d, 0.0);
        course.resize(order.size());
        for (std::size_t e = 0; e < order.size(); ++e) {
            course[e] = order.cells().course_of(e);
            count[course[e]] += 1.0;
        }
    }

    std::vector<double> residual(const Eigen::VectorXd& x) const {
        std::vector<double> r(y.size());
        for (std::size_t e = 0; e < y.size(); ++e) r[e] = y[e] - x[static_cast<Eigen::Index>(course[e])];
        return r;
    }
};

struct Evaluation {
    double value = 0.0;
    std::vector<double> r;
    PosetProjection proj;
};

inline Evaluation evaluate(const Problem& p, const Eigen::VectorXd& x, double lambda) {
    Evaluation ev;
    ev.r = p.residual(x);
    ev.proj = project_with_blocks(ev.r, p.order);
    const double s = 1.0 / (1.0 + lambda);
    for (std::size_t e = 0; e < ev.r.size(); ++e) {
        double b = ev.proj.fitted[e] * s;
        ev.value += (ev.r[e] - b) * (ev.r[e] - b) + lambda * b * b;
    }
    return ev;
}

/// Minimizes F(x) = min_B ||y - Ax - B||^2 + lambda ||B||^2, where the inner
/// minimum is Pi(y - Ax) / (1 + lambda). F is convex and piecewise quadratic, with
/// gradient -2 A^T (r - Pi(r)/(1+lambda)) and generalized Hessian
/// 2 (A^T A - A^T J A / (1+lambda)), J averaging over the level sets of Pi(r).
/// Damped Newton with Armijo backtracking; the objective never increases.
inline Eigen::VectorXd minimize_over_x(const Problem& p, double lambda, const FitOptions& opt,
                                       FitDiagnostics& diag) {
    const auto d = static_cast<Eigen::Index>(p.d);
    Eigen::VectorXd x(d);
    if (opt.initial_x && opt.initial_x->size() == p.d) {
        for (Eigen::Index i = 0; i < d; ++i) x[i] = (*opt.initial_x)[static_cast<std::size_t>(i)];
    } else {
        x.setZero();
        for (std::size_t e = 0; e < p.y.size(); ++e) x[static_cast<Eigen::Index>(p.course[e])] += p.y[e];
        for (Eigen::Index i = 0; i < d; ++i) x[i] /= p.count[static_cast<std::size_t>(i)];
    }
    double ysum = 0.0;
    for (double v : p.y) ysum += std::abs(v);
    const double gtol = opt.gradient_tol * (1.0 + ysum);
    const double s = 1.0 / (1.0 + lambda);
    const double max_count = *std::max_element(p.count.begin(), p.count.end());

    auto ev = evaluate(p, x, lambda);
    std::size_t it = 0, stalls = 0;
    Eigen::VectorXd g(d);
    for (; it < opt.max_iterations; ++it) {
        g.setZero();
        for (std::size_t e = 0; e < ev.r.size(); ++e)
            g[static_cast<Eigen::Index>(p.course[e])] -= 2.0 * (ev.r[e] - ev.proj.fitted[e] * s);
        diag.gradient_norm = g.cwiseAbs().maxCoeff();
        if (diag.gradient_norm <= gtol) break;

        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index i = 0; i < d; ++i) H(i, i) = 2.0 * p.count[static_cast<std::size_t>(i)];
        Eigen::VectorXd c(d);
        for (const auto& blk : ev.proj.blocks) {
            c.setZero();
            for (auto e : blk) c[static_cast<Eigen::Index>(p.course[e])] += 1.0;
            H.noalias() -= (2.0 * s / static_cast<double>(blk.size())) * (c * c.transpose());
        }
        Eigen::VectorXd dir = -H.completeOrthogonalDecomposition().solve(g);
        double slope = g.dot(dir);
        if (!dir.allFinite() || !(slope < 0.0)) {
            dir = -g / (2.0 * max_count);
            slope = g.dot(dir);
        }
        double t = 1.0;
        bool accepted = false;
        Evaluation trial;
        for (int k = 0; k < 60; ++k, t *= 0.5) {
            trial = evaluate(p, x + t * dir, lambda);
            if (trial.value <= ev.value + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // Newton direction useless at this precision; try plain gradient before giving up.
            Eigen::VectorXd gd = -g / (2.0 * max_count);
            double gs = g.dot(gd);
            t = 1.0;
            for (int k = 0; k < 60; ++k, t *= 0.5) {
                trial = evaluate(p, x + t * gd, lambda);
                if (trial.value <= ev.value + 1e-4 * t * gs) {
                    accepted = true;
                    dir = gd;
                    break;
                }
            }
        }
        if (!accepted) break;
        if (trial.value > ev.value) throw std::logic_error("fit: objective increased");
        x += t * dir;
        bool stalled = ev.value - trial.value <= 1e-16 * std::max(1.0, ev.value);
        ev = std::move(trial);
        stalls = stalled ? stalls + 1 : 0;
        // objective resolved to rounding level
        if ((stalled && t == 1.0) || stalls >= 3) {
            ++it;
            break;
        }
    }
    if (it >= opt.max_iterations) throw convergence_error("fit: iteration cap reached");
    diag.iterations = it;
    return x;
}

/// Among all (x, B) with x 1^T + B = W and B feasible, the one with the smallest
/// ||B||: minimize sum_i n_i (x_i - mean_i(W))^2 subject to x_i - x_j >= c_ij,
/// c_ij being the largest W_e - W_e' over implied pairs e (course i) below e' (course j).
inline Eigen::VectorXd min_norm_shift(const Problem& p, const std::vector<double>& w) {
    const std::size_t d = p.d, C = p.order.num_classes();
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> hi(C, std::vector<double>(d, ninf)), lo(C, std::vector<double>(d, -ninf));
    for (std::size_t e = 0; e < w.size(); ++e) {
        auto c = p.order.class_of(e), i = p.course[e];
        hi[c][i] = std::max(hi[c][i], w[e]);
        lo[c][i] = std::min(lo[c][i], w[e]);
    }
    // above[c][i]: max of W over course-i elements in strict ancestors of c
    std::vector<std::vector<double>> above(C, std::vector<double>(d, ninf));
    Eigen::MatrixXd cij = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), ninf);
    for (std::size_t c = 0; c < C; ++c) {
        for (auto pc : p.order.predecessors(c))
            for (std::size_t i = 0; i < d; ++i) above[c][i] = std::max({above[c][i], above[pc][i], hi[pc][i]});
        for (std::size_t i = 0; i < d; ++i) {
            if (above[c][i] == ninf) continue;
            for (std::size_t j = 0; j < d; ++j)
                if (j != i && lo[c][j] != -ninf)
                    cij(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        std::max(cij(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), above[c][i] - lo[c][j]);
        }
    }
    // Scaled variables z_i = sqrt(n_i) x_i turn the objective into a plain projection.
    Eigen::VectorXd sq(static_cast<Eigen::Index>(d)), target = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t e = 0; e < w.size(); ++e) target[static_cast<Eigen::Index>(p.course[e])] += w[e];
    for (std::size_t i = 0; i < d; ++i) {
        sq[static_cast<Eigen::Index>(i)] = std::sqrt(p.count[i]);
        target[static_cast<Eigen::Index>(i)] /= sq[static_cast<Eigen::Index>(i)];
    }
    std::vector<LinearConstraint> cons;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double c = cij(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (c == ninf) continue;
            LinearConstraint lc;
            lc.a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
            lc.a[static_cast<Eigen::Index>(i)] = 1.0 / sq[static_cast<Eigen::Index>(i)];
            lc.a[static_cast<Eigen::Index>(j)] = -1.0 / sq[static_cast<Eigen::Index>(j)];
            lc.b = c;
            cons.push_back(std::move(lc));
        }
    auto z = project_onto_polyhedron(target, cons).z;
    return z.cwiseQuotient(sq);
}

inline Solution assemble(const Problem& p, const PartialOrder& full, const Eigen::VectorXd& x,
                         const std::vector<double>& b, Lambda lambda, FitDiagnostics diag) {
    Solution sol;
    sol.lambda = lambda;
    sol.x_hat.assign(x.data(), x.data() + x.size());
    sol.b_hat = RatingMatrix(full.cells(), 0.0);
    const bool same = p.order.cells() == full.cells();
    for (std::size_t e = 0; e < b.size(); ++e)
        sol.b_hat[same ? e : full.index_of(p.order.element(e))] = b[e];
    diag.feasibility_residual = max_violation(b, p.order);
    double value = 0.0, norm = 0.0;
    for (std::size_t e = 0; e < b.size(); ++e) {
        double res = p.y[e] - x[static_cast<Eigen::Index>(p.course[e])] - b[e];
        value += res * res;
        norm += b[e] * b[e];
    }
    diag.objective = lambda.is_infinite() ? value : value + lambda.value() * norm;
    sol.diagnostics = diag;
    return sol;
}

inline void check_same_cells(const RatingMatrix& y, const PartialOrder& order) {
    if (!(y.cells() == order.cells())) throw std::invalid_argument("fit: ratings and order have different cells");
}

inline void check_omega(const RatingMatrix& y, const PartialOrder& order, const ObservationSet& omega) {
    if (omega.num_courses() != order.num_courses())
        throw std::invalid_argument("fit: observed set and order disagree on the number of courses");
    if (!omega.is_subset_of(order.cells())) throw std::invalid_argument("fit: order does not cover the observed set");
    if (!omega.is_subset_of(y.cells())) throw std::invalid_argument("fit: ratings do not cover the observed set");
}

} // namespace detail

/// The lambda = 0 estimator: the fitted matrix W0 = x 1^T + Pi(Y - x 1^T) at any
/// minimizer, then the minimum-norm bias among all (x, B) reproducing W0.
inline Solution fit_at_zero(const RatingMatrix& y, const PartialOrder& order, const ObservationSet& omega,
                            const FitOptions& opt = {}) {
    detail::check_omega(y, order, omega);
    detail::Problem p(y, order, omega);
    FitDiagnostics diag;
    auto x0 = detail::minimize_over_x(p, 0.0, opt, diag);
    auto r = p.residual(x0);
    auto proj = isotonic_project(r, p.order);
    std::vector<double> w(p.y.size());
    for (std::size_t e = 0; e < w.size(); ++e) w[e] = p.y[e] - r[e] + proj[e];
    Eigen::VectorXd x = detail::min_norm_shift(p, w);
    std::vector<double> b(w.size());
    for (std::size_t e = 0; e < w.size(); ++e) b[e] = w[e] - x[static_cast<Eigen::Index>(p.course[e])];
    // Recover x from the identity x_i = mean_i(y - b) so the mean identity holds to rounding.
    Eigen::VectorXd xm = Eigen::VectorXd::Zero(x.size());
    for (std::size_t e = 0; e < w.size(); ++e) xm[static_cast<Eigen::Index>(p.course[e])] += p.y[e] - b[e];
    for (Eigen::Index i = 0; i < xm.size(); ++i) xm[i] /= p.count[static_cast<std::size_t>(i)];
    diag.tie_break = true;
    return detail::assemble(p, order, xm, b, Lambda::finite(0.0), diag);
}

inline Solution fit_at_zero(const RatingMatrix& y, const PartialOrder& order, const FitOptions& opt = {}) {
    detail::check_same_cells(y, order);
    return fit_at_zero(y, order, order.cells(), opt);
}

/// argmin ||Y - x 1^T - B||^2_Omega + lambda ||B||^2_Omega over B satisfying the
/// order, ties at lambda = 0 resolved toward the smallest ||B||.
inline Solution fit(const RatingMatrix& y, const PartialOrder& order, Lambda lambda, const ObservationSet& omega,
                    const FitOptions& opt = {}) {
    detail::check_omega(y, order, omega);
    if (lambda.is_infinite()) {
        auto yo = omega == y.cells() ? y : y.restrict_to(omega);
        auto x = course_means(yo);
        Solution sol;
        sol.lambda = lambda;
        sol.x_hat = x;
        sol.b_hat = RatingMatrix(order.cells(), 0.0);
        double value = 0.0;
        for (std::size_t k = 0; k < yo.size(); ++k) {
            double res = yo[k] - x[yo.cells().course_of(k)];
            value += res * res;
        }
        sol.diagnostics.objective = value;
        return sol;
    }
    if (lambda.value() == 0.0) return fit_at_zero(y, order, omega, opt);
    detail::Problem p(y, order, omega);
    FitDiagnostics diag;
    auto x = detail::minimize_over_x(p, lambda.value(), opt, diag);
    auto b = regularized_isotonic(p.residual(x), p.order, lambda.value());
    Eigen::VectorXd xm = Eigen::VectorXd::Zero(x.size());
    for (std::size_t e = 0; e < b.size(); ++e) xm[static_cast<Eigen::Index>(p.course[e])] += p.y[e] - b[e];
    for (Eigen::Index i = 0; i < xm.size(); ++i) xm[i] /= p.count[static_cast<std::size_t>(i)];
    return detail::assemble(p, order, xm, b, lambda, diag);
}

inline Solution fit(const RatingMatrix& y, const PartialOrder& order, Lambda lambda, const FitOptions& opt = {}) {
    detail::check_same_cells(y, order);
    return fit(y, order, lambda, order.cells(), opt);
}

/// Fits along a lambda grid, warm-starting each finite lambda from the previous x.
inline std::vector<Solution> fit_path(const RatingMatrix& y, const PartialOrder& order,
                                      const std::vector<Lambda>& grid, const ObservationSet& omega) {
    std::vector<Solution> out;
    FitOptions opt;
    for (const auto& l : grid) {
        out.push_back(fit(y, order, l, omega, opt));
        if (!l.is_infinite()) opt.initial_x = out.back().x_hat;
    }
    return out;
}

/// Closed form of the lambda = 0 estimator for two courses under a two-group
/// ordering without noise. gamma = x_2 - x_1 is the course-mean difference clamped
/// by the cross-course group extremes; absent extremes drop their branch. With
/// unequal course sizes the pair is recentered so that n_1 x_1 + n_2 x_2 = sum y.
inline QualityVector closed_form_d2r2(const RatingMatrix& y, const PartialOrder& order) {
    if (order.kind() != OrderKind::group || order.num_labels() != 2 || order.num_courses() != 2)
        throw std::invalid_argument("closed_form_d2r2: needs d = 2 courses and a group ordering with r = 2");
    auto v = detail::values_on(order, y);
    const double inf = std::numeric_limits<double>::infinity();
    double max_g0[2] = {-inf, -inf}, min_g1[2] = {inf, inf}, sum[2] = {0, 0}, cnt[2] = {0, 0};
    for (std::size_t e = 0; e < order.size(); ++e) {
        auto i = order.cells().course_of(e);
        auto g = order.class_label(order.class_of(e));
        sum[i] += v[e];
        cnt[i] += 1;
        if (g == 0)
            max_g0[i] = std::max(max_g0[i], v[e]);
        else
            min_g1[i] = std::min(min_g1[i], v[e]);
    }
    const double diff = sum[1] / cnt[1] - sum[0] / cnt[0];
    double gamma = diff;
    bool has_upper = max_g0[0] > -inf && min_g1[1] < inf;
    bool has_lower = max_g0[1] > -inf && min_g1[0] < inf;
    if (has_upper && min_g1[1] - max_g0[0] < diff)
        gamma = min_g1[1] - max_g0[0];
    else if (has_lower && max_g0[1] - min_g1[0] > diff)
        gamma = max_g0[1] - min_g1[0];
    const double total = cnt[0] + cnt[1];
    double x1 = (sum[0] + sum[1] - cnt[1] * gamma) / total;
    return {x1, x1 + gamma};
}

} // namespace ratingbias
