#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "poset.hpp"

namespace ratingbias {

struct WeightedSequence {
    std::vector<double> values;
    std::vector<double> weights; // empty means unit weights
};

/// Result of a chain projection: fitted values plus the pooled index ranges
/// [begin, end) on which the fit is constant.
struct IsotonicFit {
    std::vector<double> fitted;
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
};

/// Weighted Pool-Adjacent-Violators: Euclidean projection onto the monotone
/// (non-decreasing) cone under weights w. Linear time.
inline IsotonicFit pava(const WeightedSequence& seq) {
    const auto& y = seq.values;
    const std::size_t n = y.size();
    if (n == 0) throw std::invalid_argument("pava: empty input");
    const bool unit = seq.weights.empty();
    if (!unit && seq.weights.size() != n) throw std::invalid_argument("pava: weights length mismatch");

    struct Pool {
        double sum_wy, sum_w, value;
        std::size_t begin;
    };
    std::vector<Pool> stack;
    stack.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double w = unit ? 1.0 : seq.weights[i];
        if (!(w > 0.0)) throw std::invalid_argument("pava: weights must be positive");
        stack.push_back({w * y[i], w, y[i], i});
        while (stack.size() > 1 && stack[stack.size() - 2].value > stack.back().value) {
            Pool top = stack.back();
            stack.pop_back();
            auto& p = stack.back();
            p.sum_wy += top.sum_wy;
            p.sum_w += top.sum_w;
            p.value = p.sum_wy / p.sum_w;
        }
    }
    IsotonicFit fit;
    fit.fitted.resize(n);
    for (std::size_t k = 0; k < stack.size(); ++k) {
        std::size_t end = k + 1 < stack.size() ? stack[k + 1].begin : n;
        fit.blocks.emplace_back(stack[k].begin, end);
        std::fill(fit.fitted.begin() + static_cast<std::ptrdiff_t>(stack[k].begin),
                  fit.fitted.begin() + static_cast<std::ptrdiff_t>(end), stack[k].value);
    }
    return fit;
}

inline IsotonicFit pava(const std::vector<double>& values) { return pava(WeightedSequence{values, {}}); }

/// Projection onto the cone of a partial order, with the level-set partition
/// (element indices) produced by the algorithm.
struct PosetProjection {
    std::vector<double> fitted;
    std::vector<std::vector<std::size_t>> blocks;
};

namespace detail {

inline double weight_of(const std::vector<double>& w, std::size_t e) { return w.empty() ? 1.0 : w[e]; }

/// Class members sorted by value. Elements sharing a class have identical
/// relations, and the projection keeps their values in the same order, so the
/// chain constraints this induces never cut off the optimum.
inline std::vector<std::vector<std::size_t>> sorted_classes(const PartialOrder& order, const std::vector<double>& v) {
    std::vector<std::vector<std::size_t>> out(order.num_classes());
    for (std::size_t c = 0; c < order.num_classes(); ++c) {
        out[c] = order.members(c);
        std::stable_sort(out[c].begin(), out[c].end(), [&](auto a, auto b) { return v[a] < v[b]; });
    }
    return out;
}

inline PosetProjection project_chain(const PartialOrder& order, const std::vector<double>& v,
                                     const std::vector<double>& w) {
    auto classes = sorted_classes(order, v);
    std::vector<std::size_t> seq;
    seq.reserve(order.size());
    for (const auto& c : classes) seq.insert(seq.end(), c.begin(), c.end());
    WeightedSequence ws;
    ws.values.reserve(seq.size());
    for (auto e : seq) ws.values.push_back(v[e]);
    if (!w.empty())
        for (auto e : seq) ws.weights.push_back(w[e]);
    auto fit = pava(ws);
    PosetProjection out;
    out.fitted.resize(order.size());
    for (std::size_t t = 0; t < seq.size(); ++t) out.fitted[seq[t]] = fit.fitted[t];
    for (auto [b, e] : fit.blocks) out.blocks.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(b),
                                                           seq.begin() + static_cast<std::ptrdiff_t>(e));
    return out;
}

/// Element-level rooted forest (root lowest): class chains sorted by value, the
/// last element of a class chain is the parent of the first element of each child class.
inline std::vector<std::size_t> element_forest(const PartialOrder& order,
                                               const std::vector<std::vector<std::size_t>>& classes) {
    std::vector<std::size_t> parent(order.size(), PartialOrder::npos);
    for (std::size_t c = 0; c < order.num_classes(); ++c) {
        const auto& m = classes[c];
        for (std::size_t t = 1; t < m.size(); ++t) parent[m[t]] = m[t - 1];
        if (!order.predecessors(c).empty()) parent[m.front()] = classes[order.predecessors(c)[0]].back();
    }
    return parent;
}

/// Tree pooling for the order "parent <= child". Repeatedly takes, among the
/// blocks whose value is below that of the block holding their top element's
/// parent, the one with the smallest value and pools it into that parent block.
inline PosetProjection project_forest(const PartialOrder& order, const std::vector<double>& v,
                                      const std::vector<double>& w) {
    const std::size_t n = order.size();
    auto classes = sorted_classes(order, v);
    auto parent = element_forest(order, classes);
    std::vector<std::size_t> rep(n);
    std::iota(rep.begin(), rep.end(), 0);
    auto find = [&](std::size_t x) {
        while (rep[x] != x) x = rep[x] = rep[rep[x]];
        return x;
    };
    std::vector<double> sum_wv(n), sum_w(n), value(n);
    std::vector<char> alive(n, 1);
    for (std::size_t e = 0; e < n; ++e) {
        sum_w[e] = weight_of(w, e);
        sum_wv[e] = sum_w[e] * v[e];
        value[e] = v[e];
    }
    // The representative of a block is always its top element.
    while (true) {
        std::size_t best = PartialOrder::npos;
        for (std::size_t b = 0; b < n; ++b) {
            if (!alive[b] || parent[b] == PartialOrder::npos) continue;
            auto p = find(parent[b]);
            if (value[b] < value[p] && (best == PartialOrder::npos || value[b] < value[best])) best = b;
        }
        if (best == PartialOrder::npos) break;
        auto p = find(parent[best]);
        sum_wv[p] += sum_wv[best];
        sum_w[p] += sum_w[best];
        value[p] = sum_wv[p] / sum_w[p];
        rep[best] = p;
        alive[best] = 0;
    }
    PosetProjection out;
    out.fitted.resize(n);
    std::vector<std::size_t> block_index(n, PartialOrder::npos);
    for (std::size_t e = 0; e < n; ++e) {
        auto r = find(e);
        out.fitted[e] = value[r];
        if (block_index[r] == PartialOrder::npos) {
            block_index[r] = out.blocks.size();
            out.blocks.emplace_back();
        }
        out.blocks[block_index[r]].push_back(e);
    }
    return out;
}

/// Dinic max-flow on real capacities; only what the closure step needs.
class MaxFlow {
public:
    explicit MaxFlow(std::size_t n) : head_(n, npos), level_(n), it_(n) {}

    void add_edge(std::size_t a, std::size_t b, double cap) {
        edges_.push_back({b, head_[a], cap});
        head_[a] = edges_.size() - 1;
        edges_.push_back({a, head_[b], 0.0});
        head_[b] = edges_.size() - 1;
    }

    double run(std::size_t s, std::size_t t, double eps) {
        double flow = 0.0;
        while (bfs(s, t, eps)) {
            it_ = head_;
            while (true) {
                double f = dfs(s, t, std::numeric_limits<double>::infinity(), eps);
                if (f <= eps) break;
                flow += f;
            }
        }
        return flow;
    }

    /// Nodes reachable from s in the residual graph after run().
    std::vector<char> source_side(std::size_t s, double eps) const {
        std::vector<char> seen(head_.size(), 0);
        std::vector<std::size_t> stack{s};
        seen[s] = 1;
        while (!stack.empty()) {
            auto a = stack.back();
            stack.pop_back();
            for (auto k = head_[a]; k != npos; k = edges_[k].next)
                if (edges_[k].cap > eps && !seen[edges_[k].to]) {
                    seen[edges_[k].to] = 1;
                    stack.push_back(edges_[k].to);
                }
        }
        return seen;
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    struct Edge {
        std::size_t to, next;
        double cap;
    };

    bool bfs(std::size_t s, std::size_t t, double eps) {
        std::fill(level_.begin(), level_.end(), -1);
        std::queue<std::size_t> q;
        level_[s] = 0;
        q.push(s);
        while (!q.empty()) {
            auto a = q.front();
            q.pop();
            for (auto k = head_[a]; k != npos; k = edges_[k].next)
                if (edges_[k].cap > eps && level_[edges_[k].to] < 0) {
                    level_[edges_[k].to] = level_[a] + 1;
                    q.push(edges_[k].to);
                }
        }
        return level_[t] >= 0;
    }

    double dfs(std::size_t a, std::size_t t, double pushed, double eps) {
        if (a == t) return pushed;
        for (auto& k = it_[a]; k != npos; k = edges_[k].next) {
            auto& e = edges_[k];
            if (e.cap > eps && level_[e.to] == level_[a] + 1) {
                double f = dfs(e.to, t, std::min(pushed, e.cap), eps);
                if (f > eps) {
                    e.cap -= f;
                    edges_[k ^ 1].cap += f;
                    return f;
                }
            }
        }
        return 0.0;
    }

    std::vector<std::size_t> head_;
    std::vector<int> level_;
    std::vector<std::size_t> it_;
    std::vector<Edge> edges_;
};

/// Exact projection for an arbitrary order by recursive partitioning: split a
/// candidate level set at its weighted mean along the maximum-weight upper set
/// (a max-closure / min-cut problem) until no split improves, at which point
/// the set is a level set of the projection.
inline PosetProjection project_by_partition(const PartialOrder& order, const std::vector<double>& v,
                                            const std::vector<double>& w) {
    const std::size_t n = order.size();
    auto classes = sorted_classes(order, v);
    std::vector<std::vector<std::size_t>> succ(n);
    for (std::size_t c = 0; c < order.num_classes(); ++c) {
        const auto& m = classes[c];
        for (std::size_t t = 0; t + 1 < m.size(); ++t) succ[m[t]].push_back(m[t + 1]);
        for (auto s : order.successors(c)) succ[m.back()].push_back(classes[s].front());
    }
    double scale = 0.0;
    for (std::size_t e = 0; e < n; ++e) scale += weight_of(w, e) * std::abs(v[e]);
    const double tol = 1e-13 * (1.0 + scale);

    PosetProjection out;
    out.fitted.resize(n);
    std::vector<std::size_t> local(n, PartialOrder::npos);
    std::vector<std::vector<std::size_t>> work{[&] {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }()};
    while (!work.empty()) {
        auto set = std::move(work.back());
        work.pop_back();
        double sw = 0.0, swv = 0.0;
        for (auto e : set) {
            sw += weight_of(w, e);
            swv += weight_of(w, e) * v[e];
        }
        const double mean = swv / sw;
        if (set.size() > 1) {
            const std::size_t m = set.size(), s = m, t = m + 1;
            for (std::size_t k = 0; k < m; ++k) local[set[k]] = k;
            MaxFlow flow(m + 2);
            double positive = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                double a = weight_of(w, set[k]) * (v[set[k]] - mean);
                if (a > 0) {
                    flow.add_edge(s, k, a);
                    positive += a;
                } else if (a < 0) {
                    flow.add_edge(k, t, -a);
                }
                for (auto e2 : succ[set[k]])
                    if (local[e2] != PartialOrder::npos) flow.add_edge(k, local[e2], std::numeric_limits<double>::infinity());
            }
            double cut = flow.run(s, t, tol * 1e-3);
            auto side = flow.source_side(s, tol * 1e-3);
            for (auto e : set) local[e] = PartialOrder::npos;
            if (positive - cut > tol) {
                std::vector<std::size_t> upper, lower;
                for (std::size_t k = 0; k < m; ++k) (side[k] ? upper : lower).push_back(set[k]);
                if (!upper.empty() && !lower.empty()) {
                    work.push_back(std::move(lower));
                    work.push_back(std::move(upper));
                    continue;
                }
            }
        }
        for (auto e : set) out.fitted[e] = mean;
        out.blocks.push_back(std::move(set));
    }
    return out;
}

inline void check_inputs(const std::vector<double>& v, const PartialOrder& order, const std::vector<double>& w) {
    if (v.size() != order.size()) throw std::invalid_argument("isotonic projection: values do not match the order");
    if (!w.empty()) {
        if (w.size() != v.size()) throw std::invalid_argument("isotonic projection: weights length mismatch");
        for (double x : w)
            if (!(x > 0.0)) throw std::invalid_argument("isotonic projection: weights must be positive");
    }
}

} // namespace detail

/// Weighted Euclidean projection of per-element values onto {u : u satisfies order},
/// with its level sets. Chains go through PAVA, forests through tree pooling, and
/// everything else through recursive min-cut partitioning.
inline PosetProjection project_with_blocks(const std::vector<double>& values, const PartialOrder& order,
                                           const std::vector<double>& weights = {}) {
    detail::check_inputs(values, order, weights);
    if (order.is_chain()) return detail::project_chain(order, values, weights);
    if (order.is_forest()) return detail::project_forest(order, values, weights);
    return detail::project_by_partition(order, values, weights);
}

inline std::vector<double> isotonic_project(const std::vector<double>& values, const PartialOrder& order,
                                            const std::vector<double>& weights = {}) {
    return project_with_blocks(values, order, weights).fitted;
}

/// argmin over u satisfying the order of sum w (y - u)^2 + lambda * sum w u^2.
/// The feasible set is a convex cone, so the minimizer is the projection scaled
/// by 1 / (1 + lambda).
inline std::vector<double> regularized_isotonic(const std::vector<double>& values, const PartialOrder& order,
                                                double lambda, const std::vector<double>& weights = {}) {
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw std::invalid_argument("regularized_isotonic: lambda must be finite and >= 0");
    auto u = isotonic_project(values, order, weights);
    for (auto& x : u) x /= 1.0 + lambda;
    return u;
}

/// sum w (y - u)^2 + lambda * sum w u^2
inline double regularized_objective(const std::vector<double>& y, const std::vector<double>& u, double lambda,
                                    const std::vector<double>& weights = {}) {
    double f = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        double w = detail::weight_of(weights, k);
        f += w * ((y[k] - u[k]) * (y[k] - u[k]) + lambda * u[k] * u[k]);
    }
    return f;
}

} // namespace ratingbias
