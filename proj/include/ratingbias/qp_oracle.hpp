#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <tuple>
#include <vector>

#include "estimator.hpp"
#include "isotonic.hpp"
#include "poset.hpp"
#include "types.hpp"

namespace ratingbias {

struct QpOracleOptions {
    double stationarity_tol = 1e-10;
    std::size_t max_iterations = 100000;
    std::size_t max_tie_break_sweeps = 1000000;
};

namespace detail {

/// Hildreth's dual coordinate ascent for
///   min sum_i n_i (u_i - target_i)^2  s.t.  u_i - u_j >= c  for each (i, j, c).
inline std::vector<double> hildreth_shift(const std::vector<double>& target, const std::vector<double>& n,
                                          const std::vector<std::tuple<std::size_t, std::size_t, double>>& cons,
                                          std::size_t max_sweeps) {
    std::vector<double> u = target, mu(cons.size(), 0.0);
    double scale = 1.0;
    for (double t : target) scale = std::max(scale, std::abs(t));
    for (auto [i, j, c] : cons) scale = std::max(scale, std::abs(c));
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t k = 0; k < cons.size(); ++k) {
            auto [i, j, c] = cons[k];
            double denom = 1.0 / n[i] + 1.0 / n[j];
            double delta = std::max(-mu[k], (c - (u[i] - u[j])) / denom);
            if (delta == 0.0) continue;
            mu[k] += delta;
            u[i] += delta / n[i];
            u[j] -= delta / n[j];
            change = std::max(change, std::abs(delta) / std::min(n[i], n[j]));
        }
        if (change <= 1e-14 * scale) return u;
    }
    throw convergence_error("qp_oracle: tie-break sweep cap reached");
}

} // namespace detail

/// Slow reference solver for the estimator, meant for small instances. With x
/// eliminated (x_i = mean_i(y - B)) the problem becomes
///   G(B) = ||C(y - B)||^2 + lambda ||B||^2  over B satisfying the order,
/// C removing course means. Accelerated projected gradient with backtracking
/// (step halving from 1) and adaptive restart, stopped on the projected-gradient
/// residual. At lambda = 0 the minimum-norm representative is then found with
/// Hildreth's method over every implied pair, independent of the main solver.
inline Solution qp_oracle(const RatingMatrix& y, const PartialOrder& order, Lambda lambda, const ObservationSet& omega,
                          const QpOracleOptions& opt = {}) {
    detail::check_omega(y, order, omega);
    if (lambda.is_infinite()) {
        auto yo = y.restrict_to(omega);
        Solution s;
        s.lambda = lambda;
        s.x_hat = QualityVector(omega.num_courses(), 0.0);
        for (std::size_t i = 0; i < omega.num_courses(); ++i) {
            auto row = yo.row(i);
            double sum = 0.0;
            for (double v : row) sum += v;
            s.x_hat[i] = sum / static_cast<double>(row.size());
        }
        s.b_hat = RatingMatrix(order.cells(), 0.0);
        s.diagnostics.objective = objective(yo, s.x_hat, RatingMatrix(omega, 0.0), lambda);
        return s;
    }
    const double lam = lambda.value();
    detail::Problem p(y, order, omega);
    const std::size_t N = p.y.size(), d = p.d;

    auto demean = [&](std::vector<double> v) {
        std::vector<double> mean(d, 0.0);
        for (std::size_t e = 0; e < N; ++e) mean[p.course[e]] += v[e];
        for (std::size_t i = 0; i < d; ++i) mean[i] /= p.count[i];
        for (std::size_t e = 0; e < N; ++e) v[e] -= mean[p.course[e]];
        return v;
    };
    auto centered = [&](const std::vector<double>& b) {
        std::vector<double> r(N);
        for (std::size_t e = 0; e < N; ++e) r[e] = p.y[e] - b[e];
        return demean(std::move(r));
    };
    auto value = [&](const std::vector<double>& b) {
        auto r = centered(b);
        double f = 0.0;
        for (std::size_t e = 0; e < N; ++e) f += r[e] * r[e] + lam * b[e] * b[e];
        return f;
    };
    auto gradient = [&](const std::vector<double>& b) {
        auto r = centered(b);
        std::vector<double> g(N);
        for (std::size_t e = 0; e < N; ++e) g[e] = -2.0 * r[e] + 2.0 * lam * b[e];
        return g;
    };
    auto step_from = [&](const std::vector<double>& b, const std::vector<double>& g, double t) {
        std::vector<double> v(N);
        for (std::size_t e = 0; e < N; ++e) v[e] = b[e] - t * g[e];
        return isotonic_project(v, p.order);
    };

    std::vector<double> b(N, 0.0), z = b;
    double theta = 1.0, t = 1.0;
    std::size_t it = 0;
    double residual = std::numeric_limits<double>::infinity();
    for (; it < opt.max_iterations; ++it) {
        // stationarity at the current iterate: ||b - P(b - grad/2(1+lam))||
        auto gb = gradient(b);
        auto pb = step_from(b, gb, 0.5 / (1.0 + lam));
        residual = 0.0;
        for (std::size_t e = 0; e < N; ++e) residual = std::max(residual, std::abs(b[e] - pb[e]));
        if (residual < opt.stationarity_tol) break;

        auto gz = gradient(z);
        t = std::min(1.0, 2.0 * t);
        std::vector<double> next;
        while (true) {
            // G is quadratic, so the backtracking test compares curvature along the step directly.
            next = step_from(z, gz, t);
            std::vector<double> delta(N);
            for (std::size_t e = 0; e < N; ++e) delta[e] = next[e] - z[e];
            auto cd = demean(delta);
            double curv = 0.0, sq = 0.0;
            for (std::size_t e = 0; e < N; ++e) {
                sq += delta[e] * delta[e];
                curv += cd[e] * cd[e] + lam * delta[e] * delta[e];
            }
            if (curv <= sq / (2.0 * t) || t < 1e-12) break;
            t *= 0.5;
        }
        // gradient-based adaptive restart
        double dir = 0.0;
        for (std::size_t e = 0; e < N; ++e) dir += (z[e] - next[e]) * (next[e] - b[e]);
        if (dir > 0.0) {
            theta = 1.0;
            z = b;
            continue;
        }
        double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        double beta = (theta - 1.0) / theta_next;
        for (std::size_t e = 0; e < N; ++e) z[e] = next[e] + beta * (next[e] - b[e]);
        theta = theta_next;
        b = std::move(next);
    }
    if (it >= opt.max_iterations) throw convergence_error("qp_oracle: iteration cap reached");

    std::vector<double> x(d, 0.0);
    for (std::size_t e = 0; e < N; ++e) x[p.course[e]] += p.y[e] - b[e];
    for (std::size_t i = 0; i < d; ++i) x[i] /= p.count[i];

    if (lam == 0.0) {
        std::vector<double> w(N), target(d, 0.0);
        for (std::size_t e = 0; e < N; ++e) w[e] = x[p.course[e]] + b[e];
        for (std::size_t e = 0; e < N; ++e) target[p.course[e]] += w[e];
        for (std::size_t i = 0; i < d; ++i) target[i] /= p.count[i];
        std::vector<std::vector<double>> c(d, std::vector<double>(d, -std::numeric_limits<double>::infinity()));
        for (auto [e, e2] : p.order.implied_pairs()) {
            auto i = p.course[e], j = p.course[e2];
            if (i != j) c[i][j] = std::max(c[i][j], w[e] - w[e2]);
        }
        std::vector<std::tuple<std::size_t, std::size_t, double>> cons;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                if (std::isfinite(c[i][j])) cons.emplace_back(i, j, c[i][j]);
        x = detail::hildreth_shift(target, p.count, cons, opt.max_tie_break_sweeps);
        for (std::size_t e = 0; e < N; ++e) b[e] = w[e] - x[p.course[e]];
    }

    Solution s;
    s.lambda = lambda;
    s.x_hat = x;
    s.b_hat = RatingMatrix(order.cells(), 0.0);
    for (std::size_t e = 0; e < N; ++e) s.b_hat[order.index_of(p.order.element(e))] = b[e];
    s.diagnostics.iterations = it;
    s.diagnostics.feasibility_residual = max_violation(b, p.order);
    s.diagnostics.gradient_norm = residual;
    s.diagnostics.objective = value(b);
    s.diagnostics.tie_break = lam == 0.0;
    return s;
}

inline Solution qp_oracle(const RatingMatrix& y, const PartialOrder& order, Lambda lambda,
                          const QpOracleOptions& opt = {}) {
    return qp_oracle(y, order, lambda, order.cells(), opt);
}

} // namespace ratingbias
