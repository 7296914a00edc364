#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "types.hpp"

namespace ratingbias {

/// Inequality a^T z >= b.
struct LinearConstraint {
    Eigen::VectorXd a;
    double b = 0.0;
};

struct SmallQpResult {
    Eigen::VectorXd z;
    std::vector<std::size_t> active;
    std::size_t iterations = 0;
};

/// Euclidean projection of `target` onto {z : a_k^T z >= b_k for all k} by the
/// Goldfarb-Idnani dual active-set method (identity Hessian). Starts from the
/// unconstrained minimizer and adds the most violated constraint each round,
/// dropping active constraints whose multipliers would turn negative.
inline SmallQpResult project_onto_polyhedron(const Eigen::VectorXd& target,
                                             const std::vector<LinearConstraint>& cons, double tol = 1e-12,
                                             std::size_t max_iter = 100000) {
    const auto m = cons.size();
    SmallQpResult res;
    res.z = target;
    std::vector<std::size_t> active;
    std::vector<double> u; // multipliers of `active`
    double scale = 1.0 + target.cwiseAbs().maxCoeff();
    for (const auto& c : cons) scale = std::max(scale, std::abs(c.b));

    auto slack = [&](std::size_t k) { return cons[k].a.dot(res.z) - cons[k].b; };

    for (; res.iterations < max_iter; ++res.iterations) {
        std::size_t p = m;
        double worst = -tol * scale;
        for (std::size_t k = 0; k < m; ++k) {
            double s = slack(k) / std::max(1e-300, cons[k].a.norm());
            if (s < worst) {
                worst = s;
                p = k;
            }
        }
        if (p == m) break;
        double up = 0.0;
        while (true) {
            const auto q = active.size();
            Eigen::VectorXd step = cons[p].a, r;
            if (q > 0) {
                Eigen::MatrixXd N(target.size(), static_cast<Eigen::Index>(q));
                for (std::size_t j = 0; j < q; ++j) N.col(static_cast<Eigen::Index>(j)) = cons[active[j]].a;
                r = (N.transpose() * N).ldlt().solve(N.transpose() * cons[p].a);
                step -= N * r;
            }
            // Largest dual step keeping active multipliers non-negative.
            double t1 = std::numeric_limits<double>::infinity();
            std::size_t drop = q;
            for (std::size_t j = 0; j < q; ++j)
                if (r[static_cast<Eigen::Index>(j)] > 1e-14 && u[j] / r[static_cast<Eigen::Index>(j)] < t1) {
                    t1 = u[j] / r[static_cast<Eigen::Index>(j)];
                    drop = j;
                }
            double sp = slack(p);
            double curvature = step.dot(cons[p].a);
            bool primal = step.norm() > 1e-12 * cons[p].a.norm();
            double t2 = primal ? -sp / curvature : std::numeric_limits<double>::infinity();
            if (!primal && drop == q) throw std::runtime_error("project_onto_polyhedron: constraints are infeasible");
            double t = std::min(t1, t2);
            if (primal) res.z += t * step;
            for (std::size_t j = 0; j < q; ++j) u[j] -= t * r[static_cast<Eigen::Index>(j)];
            up += t;
            if (t == t2) {
                active.push_back(p);
                u.push_back(up);
                break;
            }
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
            u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
        }
    }
    if (res.iterations >= max_iter) throw convergence_error("project_onto_polyhedron: iteration cap reached");
    res.active = active;
    return res;
}

} // namespace ratingbias
