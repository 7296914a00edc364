#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "types.hpp"

namespace ratingbias {

enum class OrderKind { group, total, tree, dag };

inline const char* to_string(OrderKind k) {
    switch (k) {
    case OrderKind::group: return "group";
    case OrderKind::total: return "total";
    case OrderKind::tree: return "tree";
    case OrderKind::dag: return "dag";
    }
    return "?";
}

/// A linear extension: element ids in ascending bias rank.
struct TotalOrder {
    std::vector<ElementId> ranked;
};

/// Pairwise constraints, each meaning b[first] <= b[second].
struct ConstraintSet {
    std::vector<std::pair<ElementId, ElementId>> pairs;
};

/// A partial ordering over rating cells, stored as a DAG of classes.
///
/// Elements of one class are mutually unconstrained and share the same relations
/// to every other element: a group of a group ordering, a node of a tree ordering,
/// or a single element of a total ordering / generic DAG. Element e lies below e'
/// iff class(e') is reachable from class(e). Only cover edges between classes are
/// stored, so group orderings never materialize their quadratic pair set.
///
/// Invariants after construction: every class is non-empty and class indices are a
/// topological order of the class DAG.
class PartialOrder {
public:
    OrderKind kind() const { return kind_; }
    const ObservationSet& cells() const { return cells_; }
    std::size_t size() const { return cells_.size(); }
    std::size_t num_courses() const { return cells_.num_courses(); }

    std::size_t num_classes() const { return members_.size(); }
    std::size_t class_of(std::size_t element) const { return class_of_[element]; }
    const std::vector<std::size_t>& members(std::size_t c) const { return members_[c]; }
    const std::vector<std::size_t>& successors(std::size_t c) const { return succ_[c]; }
    const std::vector<std::size_t>& predecessors(std::size_t c) const { return pred_[c]; }

    /// Group index (group), rank (total), node id (tree), element number (dag).
    std::size_t class_label(std::size_t c) const { return label_[c]; }
    /// Tree depth of the class's node, root = 0; zero for the other kinds.
    std::size_t class_depth(std::size_t c) const { return depth_[c]; }
    /// Declared label count: r for groups, N for total orders, node count for trees.
    std::size_t num_labels() const { return num_labels_; }
    /// Parent of each declared tree node, -1 for roots (tree kind only).
    const std::vector<long>& tree_parents() const { return tree_parents_; }

    ElementId element(std::size_t e) const { return cells_.cell(e); }
    std::size_t index_of(const ElementId& e) const { return cells_.index_of(e); }

    /// Class DAG is a single path (group and total orderings).
    bool is_chain() const {
        for (std::size_t c = 0; c < num_classes(); ++c) {
            if (succ_[c].size() > 1 || pred_[c].size() > 1) return false;
            if (c + 1 < num_classes() && (succ_[c].size() != 1 || succ_[c][0] != c + 1)) return false;
        }
        return true;
    }

    /// Every class has at most one predecessor.
    bool is_forest() const {
        return std::all_of(pred_.begin(), pred_.end(), [](const auto& p) { return p.size() <= 1; });
    }

    /// Classes reachable from c, excluding c.
    std::vector<std::size_t> descendants(std::size_t c) const {
        std::vector<char> seen(num_classes(), 0);
        std::vector<std::size_t> stack(succ_[c].begin(), succ_[c].end()), out;
        while (!stack.empty()) {
            auto k = stack.back();
            stack.pop_back();
            if (seen[k]) continue;
            seen[k] = 1;
            out.push_back(k);
            for (auto s : succ_[k]) stack.push_back(s);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Is b[e] <= b[e'] implied (e != e')?
    bool implies(std::size_t e, std::size_t e2) const {
        auto a = class_of_[e], b = class_of_[e2];
        if (a >= b) return false; // topological indexing
        auto d = descendants(a);
        return std::binary_search(d.begin(), d.end(), b);
    }

    /// Every implied pair (e, e') as element indices. Quadratic; meant for small orders and checks.
    std::vector<std::pair<std::size_t, std::size_t>> implied_pairs() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t a = 0; a < num_classes(); ++a)
            for (auto b : descendants(a))
                for (auto e : members_[a])
                    for (auto e2 : members_[b]) out.emplace_back(e, e2);
        return out;
    }

    /// The induced order on a subset of the cells; same kind, empty classes contracted.
    PartialOrder restrict_to(const ObservationSet& subset) const {
        if (!subset.is_subset_of(cells_)) throw std::invalid_argument("restrict_to: subset has cells outside the order");
        std::vector<std::size_t> raw_class(subset.size());
        for (std::size_t k = 0; k < subset.size(); ++k) raw_class[k] = class_of_[cells_.index_of(subset.cell(k))];
        PartialOrder out = build(kind_, subset, raw_class, label_, depth_, succ_);
        out.num_labels_ = num_labels_;
        out.tree_parents_ = tree_parents_;
        return out;
    }

    /// Generic normalizer shared by the builders. Raw classes may be empty and are
    /// contracted away; the raw class edge list must be acyclic.
    static PartialOrder build(OrderKind kind, ObservationSet cells, const std::vector<std::size_t>& raw_class_of,
                              const std::vector<std::size_t>& raw_label, const std::vector<std::size_t>& raw_depth,
                              const std::vector<std::vector<std::size_t>>& raw_succ) {
        const std::size_t R = raw_succ.size();
        if (raw_class_of.size() != cells.size()) throw std::invalid_argument("PartialOrder: class map size mismatch");
        std::vector<std::size_t> count(R, 0);
        for (auto c : raw_class_of) {
            if (c >= R) throw std::invalid_argument("PartialOrder: class index out of range");
            ++count[c];
        }
        // Kahn on raw classes; ties resolved by smallest raw index for a stable numbering.
        std::vector<std::size_t> indeg(R, 0);
        for (std::size_t a = 0; a < R; ++a)
            for (auto b : raw_succ[a]) {
                if (b >= R) throw std::invalid_argument("PartialOrder: edge endpoint out of range");
                ++indeg[b];
            }
        std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
        for (std::size_t a = 0; a < R; ++a)
            if (indeg[a] == 0) ready.push(a);
        std::vector<std::size_t> topo;
        while (!ready.empty()) {
            auto a = ready.top();
            ready.pop();
            topo.push_back(a);
            for (auto b : raw_succ[a])
                if (--indeg[b] == 0) ready.push(b);
        }
        if (topo.size() != R) throw std::invalid_argument("PartialOrder: ordering relation has a cycle");

        std::vector<std::size_t> new_index(R, npos);
        PartialOrder po;
        po.kind_ = kind;
        for (auto a : topo) {
            if (count[a] == 0) continue;
            new_index[a] = po.label_.size();
            po.label_.push_back(raw_label[a]);
            po.depth_.push_back(raw_depth[a]);
        }
        const std::size_t C = po.label_.size();
        po.members_.assign(C, {});
        po.succ_.assign(C, {});
        po.pred_.assign(C, {});
        po.class_of_.resize(cells.size());
        for (std::size_t e = 0; e < cells.size(); ++e) {
            po.class_of_[e] = new_index[raw_class_of[e]];
            po.members_[po.class_of_[e]].push_back(e);
        }
        // Edges between non-empty classes, walking through empty ones.
        for (std::size_t a = 0; a < R; ++a) {
            if (count[a] == 0) continue;
            std::vector<char> seen(R, 0);
            std::vector<std::size_t> stack(raw_succ[a].begin(), raw_succ[a].end());
            std::vector<std::size_t> found;
            while (!stack.empty()) {
                auto b = stack.back();
                stack.pop_back();
                if (seen[b]) continue;
                seen[b] = 1;
                if (count[b] > 0)
                    found.push_back(new_index[b]);
                else
                    for (auto s : raw_succ[b]) stack.push_back(s);
            }
            std::sort(found.begin(), found.end());
            found.erase(std::unique(found.begin(), found.end()), found.end());
            for (auto b : found) {
                po.succ_[new_index[a]].push_back(b);
                po.pred_[b].push_back(new_index[a]);
            }
        }
        for (auto& p : po.pred_) std::sort(p.begin(), p.end());
        po.cells_ = std::move(cells);
        po.num_labels_ = R;
        return po;
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    friend PartialOrder build_tree_ordering(const std::map<ElementId, std::size_t>&,
                                            const std::map<std::size_t, std::size_t>&, std::size_t);

    OrderKind kind_ = OrderKind::dag;
    ObservationSet cells_;
    std::vector<std::size_t> class_of_;
    std::vector<std::vector<std::size_t>> members_;
    std::vector<std::vector<std::size_t>> succ_;
    std::vector<std::vector<std::size_t>> pred_;
    std::vector<std::size_t> label_;
    std::vector<std::size_t> depth_;
    std::size_t num_labels_ = 0;
    std::vector<long> tree_parents_;
};

namespace detail {

inline ObservationSet cells_of(const std::vector<ElementId>& elements) {
    if (elements.empty()) throw std::invalid_argument("PartialOrder: empty element set");
    std::size_t d = 0;
    for (const auto& e : elements) d = std::max(d, e.course + 1);
    auto cells = ObservationSet::from_cells(d, elements);
    return cells;
}

} // namespace detail

/// Group ordering with r groups: e below e' exactly when group(e) < group(e').
/// A single group (r = 1) is vacuous and must be requested explicitly.
inline PartialOrder build_group_ordering(const std::map<ElementId, std::size_t>& group_of, std::size_t r,
                                         bool allow_single_group = false) {
    if (group_of.empty()) throw std::invalid_argument("build_group_ordering: empty element set");
    if (r == 0 || (r == 1 && !allow_single_group))
        throw std::invalid_argument("build_group_ordering: need r >= 2 groups");
    std::vector<ElementId> elements;
    for (const auto& [e, g] : group_of) {
        if (g >= r) throw std::invalid_argument("build_group_ordering: group index out of range");
        elements.push_back(e);
    }
    auto cells = detail::cells_of(elements);
    std::vector<std::size_t> raw(cells.size());
    for (const auto& [e, g] : group_of) raw[cells.index_of(e)] = g;
    std::vector<std::size_t> label(r), depth(r, 0);
    std::iota(label.begin(), label.end(), 0);
    std::vector<std::vector<std::size_t>> succ(r);
    for (std::size_t k = 0; k + 1 < r; ++k) succ[k].push_back(k + 1);
    return PartialOrder::build(OrderKind::group, std::move(cells), raw, label, depth, succ);
}

/// Chain following `ranked` (ascending bias).
inline PartialOrder build_total_ordering(const std::vector<ElementId>& ranked) {
    if (ranked.empty()) throw std::invalid_argument("build_total_ordering: empty element set");
    std::vector<ElementId> sorted = ranked;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("build_total_ordering: duplicate element");
    auto cells = detail::cells_of(ranked);
    const std::size_t N = ranked.size();
    std::vector<std::size_t> raw(N), label(N), depth(N, 0);
    std::vector<std::vector<std::size_t>> succ(N);
    for (std::size_t t = 0; t < N; ++t) {
        raw[cells.index_of(ranked[t])] = t;
        label[t] = t;
        if (t + 1 < N) succ[t].push_back(t + 1);
    }
    return PartialOrder::build(OrderKind::total, std::move(cells), raw, label, depth, succ);
}

/// Tree (forest) ordering over nodes: elements of a parent node lie below the
/// elements of its children; roots are lowest. `parents` maps child node -> parent node.
inline PartialOrder build_tree_ordering(const std::map<ElementId, std::size_t>& node_of,
                                        const std::map<std::size_t, std::size_t>& parents, std::size_t num_nodes = 0) {
    if (node_of.empty()) throw std::invalid_argument("build_tree_ordering: empty element set");
    std::size_t m = num_nodes;
    for (const auto& [e, v] : node_of) m = std::max(m, v + 1);
    for (const auto& [c, p] : parents) m = std::max({m, c + 1, p + 1});
    std::vector<long> parent(m, -1);
    std::vector<std::vector<std::size_t>> succ(m);
    for (const auto& [c, p] : parents) {
        if (c == p) throw std::invalid_argument("build_tree_ordering: node is its own parent");
        parent[c] = static_cast<long>(p);
        succ[p].push_back(c);
    }
    // depth, with cycle detection
    std::vector<std::size_t> depth(m, 0);
    for (std::size_t v = 0; v < m; ++v) {
        std::size_t steps = 0;
        long u = parent[v];
        while (u >= 0) {
            if (++steps > m) throw std::invalid_argument("build_tree_ordering: cycle in parent map");
            u = parent[static_cast<std::size_t>(u)];
        }
        depth[v] = steps;
    }
    std::vector<ElementId> elements;
    for (const auto& [e, v] : node_of) elements.push_back(e);
    auto cells = detail::cells_of(elements);
    std::vector<std::size_t> raw(cells.size()), label(m);
    std::iota(label.begin(), label.end(), 0);
    for (const auto& [e, v] : node_of) raw[cells.index_of(e)] = v;
    auto po = PartialOrder::build(OrderKind::tree, std::move(cells), raw, label, depth, succ);
    po.tree_parents_ = parent;
    return po;
}

/// Arbitrary acyclic relation; each edge (a, b) means b[a] <= b[b].
inline PartialOrder build_dag_ordering(const std::vector<ElementId>& elements,
                                       const std::vector<std::pair<ElementId, ElementId>>& edges) {
    auto cells = detail::cells_of(elements);
    if (cells.size() != elements.size()) throw std::invalid_argument("build_dag_ordering: duplicate element");
    const std::size_t N = cells.size();
    std::vector<std::size_t> raw(N), label(N), depth(N, 0);
    std::iota(raw.begin(), raw.end(), 0);
    std::iota(label.begin(), label.end(), 0);
    std::vector<std::vector<std::size_t>> succ(N);
    for (const auto& [a, b] : edges) {
        auto ia = cells.index_of(a), ib = cells.index_of(b);
        if (ia == ObservationSet::npos || ib == ObservationSet::npos)
            throw std::invalid_argument("build_dag_ordering: edge endpoint is not an element");
        if (ia == ib) throw std::invalid_argument("build_dag_ordering: self loop");
        succ[ia].push_back(ib);
    }
    return PartialOrder::build(OrderKind::dag, std::move(cells), raw, label, depth, succ);
}

/// DAG order whose relation is generated by a constraint set.
inline PartialOrder build_dag_ordering(const std::vector<ElementId>& elements, const ConstraintSet& constraints) {
    return build_dag_ordering(elements, constraints.pairs);
}

namespace detail {

/// Maps the matrix values onto the order's elements (flat order of the order's cells).
inline std::vector<double> values_on(const PartialOrder& order, const RatingMatrix& m) {
    if (m.cells() == order.cells()) return m.values();
    std::vector<double> v(order.size());
    for (std::size_t e = 0; e < order.size(); ++e) {
        auto k = m.cells().index_of(order.element(e));
        if (k == ObservationSet::npos) throw std::invalid_argument("matrix does not cover every element of the order");
        v[e] = m[k];
    }
    return v;
}

} // namespace detail

/// True iff v[e] <= v[e'] + tol for every implied pair. Linear time in
/// elements plus cover edges: each class is checked against the running
/// maximum over all of its ancestors.
inline bool satisfies(const std::vector<double>& v, const PartialOrder& order, double tol = 1e-9) {
    if (v.size() != order.size()) throw std::invalid_argument("satisfies: shape mismatch");
    const std::size_t C = order.num_classes();
    std::vector<double> up(C, -std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < C; ++c) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, above = -lo;
        for (auto e : order.members(c)) {
            lo = std::min(lo, v[e]);
            hi = std::max(hi, v[e]);
        }
        for (auto p : order.predecessors(c)) above = std::max(above, up[p]);
        if (above > lo + tol) return false;
        up[c] = std::max(hi, above);
    }
    return true;
}

inline bool satisfies(const RatingMatrix& b, const PartialOrder& order, double tol = 1e-9) {
    return satisfies(detail::values_on(order, b), order, tol);
}

/// Largest violation max(0, v[e] - v[e']) over implied pairs.
inline double max_violation(const std::vector<double>& v, const PartialOrder& order) {
    const std::size_t C = order.num_classes();
    std::vector<double> up(C, -std::numeric_limits<double>::infinity());
    double worst = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, above = -lo;
        for (auto e : order.members(c)) {
            lo = std::min(lo, v[e]);
            hi = std::max(hi, v[e]);
        }
        for (auto p : order.predecessors(c)) above = std::max(above, up[p]);
        worst = std::max(worst, above - lo);
        up[c] = std::max(hi, above);
    }
    return worst;
}

namespace detail {

inline void extension_of_subtree(const PartialOrder& order, std::size_t c, Rng& rng,
                                 const std::vector<std::size_t>& subtree_size, std::vector<std::size_t>& out) {
    std::vector<std::size_t> own = order.members(c);
    rng.shuffle(own);
    out.insert(out.end(), own.begin(), own.end());
    const auto& kids = order.successors(c);
    if (kids.empty()) return;
    std::vector<std::vector<std::size_t>> parts(kids.size());
    std::vector<std::size_t> slots;
    for (std::size_t k = 0; k < kids.size(); ++k) {
        extension_of_subtree(order, kids[k], rng, subtree_size, parts[k]);
        slots.insert(slots.end(), subtree_size[kids[k]], k);
    }
    rng.shuffle(slots);
    std::vector<std::size_t> cursor(kids.size(), 0);
    for (auto k : slots) out.push_back(parts[k][cursor[k]++]);
}

} // namespace detail

/// A linear extension as element indices in ascending rank.
///
/// Chains (group/total): classes in order, members uniformly shuffled; exact.
/// Forests (tree): members of a node first in random order, remaining positions
/// dealt to the child subtrees uniformly at random, recursively; exact.
/// Generic DAGs: random topological sort choosing uniformly among currently
/// minimal elements. This is only approximately uniform.
inline std::vector<std::size_t> sample_extension_indices(const PartialOrder& order, Rng& rng) {
    std::vector<std::size_t> out;
    out.reserve(order.size());
    const std::size_t C = order.num_classes();
    if (order.is_chain()) {
        for (std::size_t c = 0; c < C; ++c) {
            std::vector<std::size_t> m = order.members(c);
            if (m.size() > 1) rng.shuffle(m);
            out.insert(out.end(), m.begin(), m.end());
        }
        return out;
    }
    if (order.is_forest()) {
        std::vector<std::size_t> subtree(C, 0);
        for (std::size_t c = C; c-- > 0;) {
            subtree[c] += order.members(c).size();
            if (!order.predecessors(c).empty()) subtree[order.predecessors(c)[0]] += subtree[c];
        }
        std::vector<std::size_t> roots;
        for (std::size_t c = 0; c < C; ++c)
            if (order.predecessors(c).empty()) roots.push_back(c);
        std::vector<std::vector<std::size_t>> parts(roots.size());
        std::vector<std::size_t> slots;
        for (std::size_t k = 0; k < roots.size(); ++k) {
            detail::extension_of_subtree(order, roots[k], rng, subtree, parts[k]);
            slots.insert(slots.end(), subtree[roots[k]], k);
        }
        rng.shuffle(slots);
        std::vector<std::size_t> cursor(roots.size(), 0);
        for (auto k : slots) out.push_back(parts[k][cursor[k]++]);
        return out;
    }
    std::vector<std::size_t> pending_preds(C), remaining(C), available;
    for (std::size_t c = 0; c < C; ++c) {
        pending_preds[c] = order.predecessors(c).size();
        remaining[c] = order.members(c).size();
        if (pending_preds[c] == 0) available.insert(available.end(), order.members(c).begin(), order.members(c).end());
    }
    while (!available.empty()) {
        auto k = rng.index(available.size());
        auto e = available[k];
        available[k] = available.back();
        available.pop_back();
        out.push_back(e);
        auto c = order.class_of(e);
        if (--remaining[c] == 0)
            for (auto s : order.successors(c))
                if (--pending_preds[s] == 0)
                    available.insert(available.end(), order.members(s).begin(), order.members(s).end());
    }
    return out;
}

inline TotalOrder sample_linear_extension(const PartialOrder& order, Rng& rng) {
    TotalOrder t;
    for (auto e : sample_extension_indices(order, rng)) t.ranked.push_back(order.element(e));
    return t;
}

/// Does `ranked` (element indices) list every element once and respect every constraint?
inline bool is_linear_extension(const PartialOrder& order, const std::vector<std::size_t>& ranked) {
    if (ranked.size() != order.size()) return false;
    std::vector<std::size_t> pos(order.size(), PartialOrder::npos);
    for (std::size_t t = 0; t < ranked.size(); ++t) {
        if (ranked[t] >= order.size() || pos[ranked[t]] != PartialOrder::npos) return false;
        pos[ranked[t]] = t;
    }
    for (std::size_t c = 0; c < order.num_classes(); ++c) {
        std::size_t hi = 0;
        for (auto e : order.members(c)) hi = std::max(hi, pos[e]);
        for (auto s : order.successors(c))
            for (auto e : order.members(s))
                if (pos[e] < hi) return false;
    }
    return true;
}

inline bool is_linear_extension(const PartialOrder& order, const TotalOrder& t) {
    std::vector<std::size_t> idx;
    for (const auto& e : t.ranked) {
        auto k = order.index_of(e);
        if (k == ObservationSet::npos) return false;
        idx.push_back(k);
    }
    return is_linear_extension(order, idx);
}

/// Reduced constraints as element-index pairs. Cells are (course, class) pairs.
/// Each cell becomes a chain sorted by `values` (ties by slot), and each class
/// cover edge a -> b only links the maximum of every (i, a) cell to the minimum of
/// every (i', b) cell.
inline std::vector<std::pair<std::size_t, std::size_t>> reduced_constraint_indices(const PartialOrder& order,
                                                                                    const std::vector<double>& values) {
    if (values.size() != order.size()) throw std::invalid_argument("reduce_constraints: shape mismatch");
    const std::size_t C = order.num_classes(), d = order.num_courses();
    // cell_members[c][i]: members of class c in course i, sorted by value
    std::vector<std::vector<std::vector<std::size_t>>> cell(C, std::vector<std::vector<std::size_t>>(d));
    for (std::size_t c = 0; c < C; ++c)
        for (auto e : order.members(c)) cell[c][order.cells().course_of(e)].push_back(e);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t c = 0; c < C; ++c)
        for (auto& m : cell[c]) {
            std::stable_sort(m.begin(), m.end(), [&](auto a, auto b) { return values[a] < values[b]; });
            for (std::size_t t = 0; t + 1 < m.size(); ++t) out.emplace_back(m[t], m[t + 1]);
        }
    for (std::size_t a = 0; a < C; ++a)
        for (auto b : order.successors(a))
            for (std::size_t i = 0; i < d; ++i) {
                if (cell[a][i].empty()) continue;
                for (std::size_t i2 = 0; i2 < d; ++i2)
                    if (!cell[b][i2].empty()) out.emplace_back(cell[a][i].back(), cell[b][i2].front());
            }
    return out;
}

inline ConstraintSet reduce_constraints(const PartialOrder& order, const RatingMatrix& y) {
    ConstraintSet cs;
    for (auto [a, b] : reduced_constraint_indices(order, detail::values_on(order, y)))
        cs.pairs.emplace_back(order.element(a), order.element(b));
    return cs;
}

struct OrderClassification {
    bool all_c_fraction = false;
    bool single_c_fraction = false;
    std::optional<std::size_t> interleaving_points;
};

/// Group-size regularity (all / single c-fraction) and, for total orders, the
/// number of ranks t whose neighbours t, t+1 belong to different courses.
/// A total order counts as a group ordering with one singleton group per rank.
inline OrderClassification classify(const PartialOrder& order, double c) {
    if (order.kind() != OrderKind::group && order.kind() != OrderKind::total)
        throw std::invalid_argument("classify: fraction conditions need a group or total ordering");
    const std::size_t d = order.num_courses(), r = order.num_labels();
    std::vector<std::vector<std::size_t>> ell(d, std::vector<std::size_t>(r, 0));
    for (std::size_t e = 0; e < order.size(); ++e)
        ++ell[order.cells().course_of(e)][order.class_label(order.class_of(e))];
    constexpr double slack = 1e-9;
    OrderClassification out;
    out.all_c_fraction = true;
    for (std::size_t i = 0; i < d; ++i) {
        double cn = c * static_cast<double>(order.cells().course_size(i));
        for (std::size_t k = 0; k < r; ++k)
            if (static_cast<double>(ell[i][k]) < cn - slack) out.all_c_fraction = false;
    }
    for (std::size_t k = 0; k < r && !out.single_c_fraction; ++k) {
        bool all = true;
        for (std::size_t i = 0; i < d; ++i)
            if (!(static_cast<double>(ell[i][k]) > c * static_cast<double>(order.cells().course_size(i)) + slack))
                all = false;
        out.single_c_fraction = all;
    }
    if (order.kind() == OrderKind::total) {
        std::size_t count = 0;
        for (std::size_t t = 0; t + 1 < order.num_classes(); ++t) {
            auto a = order.members(t)[0], b = order.members(t + 1)[0];
            if (order.cells().course_of(a) != order.cells().course_of(b)) ++count;
        }
        out.interleaving_points = count;
    }
    return out;
}

} // namespace ratingbias
