#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "poset.hpp"

namespace ratingbias {

/// Text format, one record per line, `#` starts a comment:
///
///   <kind> <d> <r>          header; kind is group | total | tree | dag
///   <course> <slot> <label> one line per element
///   <a> <b>                 tree: node a has parent b (-1 for a root)
///                           dag: element a lies below element b (0-based element line numbers)
///
/// label is the group index (group), rank (total), node id (tree); dag ignores it.
/// r is the number of groups (group) or nodes (tree); total and dag ignore it.
inline PartialOrder read_poset(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    OrderKind kind = OrderKind::group;
    long long d = 0, r = 0;
    std::vector<ElementId> elems;
    std::vector<long long> labels;
    std::vector<std::pair<long long, long long>> pairs;
    auto fail = [&](const std::string& msg) {
        throw std::invalid_argument("poset line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ss(line);
        std::vector<std::string> tok;
        for (std::string t; ss >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (!have_header) {
            if (tok.size() != 3) fail("expected header `kind d r`");
            if (tok[0] == "group") kind = OrderKind::group;
            else if (tok[0] == "total") kind = OrderKind::total;
            else if (tok[0] == "tree") kind = OrderKind::tree;
            else if (tok[0] == "dag") kind = OrderKind::dag;
            else fail("unknown kind '" + tok[0] + "'");
            try {
                d = std::stoll(tok[1]);
                r = std::stoll(tok[2]);
            } catch (const std::exception&) {
                fail("bad header numbers");
            }
            if (d <= 0) fail("d must be positive");
            have_header = true;
            continue;
        }
        std::vector<long long> v;
        for (const auto& t : tok) {
            std::size_t used = 0;
            long long x = 0;
            try {
                x = std::stoll(t, &used);
            } catch (const std::exception&) {
                fail("expected integers");
            }
            if (used != t.size()) fail("expected integers");
            v.push_back(x);
        }
        if (v.size() == 3) {
            if (v[0] < 0 || v[0] >= d || v[1] < 0 || v[2] < 0) fail("element out of range");
            elems.push_back({static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1])});
            labels.push_back(v[2]);
        } else if (v.size() == 2) {
            if (kind != OrderKind::tree && kind != OrderKind::dag) fail("relation lines only allowed for tree and dag");
            pairs.emplace_back(v[0], v[1]);
        } else {
            fail("expected 2 or 3 integers");
        }
    }
    if (!have_header) throw std::invalid_argument("poset: missing header");
    if (elems.empty()) throw std::invalid_argument("poset: no elements");
    std::vector<std::size_t> present(static_cast<std::size_t>(d), 0);
    for (const auto& e : elems) ++present[e.course];
    for (long long i = 0; i < d; ++i)
        if (!present[static_cast<std::size_t>(i)])
            throw std::invalid_argument("poset: course " + std::to_string(i) + " has no elements");

    switch (kind) {
    case OrderKind::group: {
        std::map<ElementId, std::size_t> g;
        for (std::size_t k = 0; k < elems.size(); ++k) g[elems[k]] = static_cast<std::size_t>(labels[k]);
        if (g.size() != elems.size()) throw std::invalid_argument("poset: duplicate element");
        return build_group_ordering(g, static_cast<std::size_t>(r), r == 1);
    }
    case OrderKind::total: {
        std::vector<std::size_t> idx(elems.size());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return labels[a] < labels[b]; });
        for (std::size_t k = 1; k < idx.size(); ++k)
            if (labels[idx[k]] == labels[idx[k - 1]]) throw std::invalid_argument("poset: duplicate rank");
        std::vector<ElementId> ranked;
        for (auto k : idx) ranked.push_back(elems[k]);
        return build_total_ordering(ranked);
    }
    case OrderKind::tree: {
        std::map<ElementId, std::size_t> node;
        for (std::size_t k = 0; k < elems.size(); ++k) node[elems[k]] = static_cast<std::size_t>(labels[k]);
        if (node.size() != elems.size()) throw std::invalid_argument("poset: duplicate element");
        std::map<std::size_t, std::size_t> parents;
        for (auto [a, b] : pairs) {
            if (a < 0) throw std::invalid_argument("poset: negative node id");
            if (b < 0) continue;
            if (!parents.emplace(static_cast<std::size_t>(a), static_cast<std::size_t>(b)).second)
                throw std::invalid_argument("poset: node with two parents");
        }
        return build_tree_ordering(node, parents, r > 0 ? static_cast<std::size_t>(r) : 0);
    }
    case OrderKind::dag: {
        std::vector<std::pair<ElementId, ElementId>> edges;
        for (auto [a, b] : pairs) {
            if (a < 0 || b < 0 || a >= static_cast<long long>(elems.size()) || b >= static_cast<long long>(elems.size()))
                throw std::invalid_argument("poset: edge refers to an unknown element");
            edges.emplace_back(elems[static_cast<std::size_t>(a)], elems[static_cast<std::size_t>(b)]);
        }
        return build_dag_ordering(elems, edges);
    }
    }
    throw std::invalid_argument("poset: unknown kind");
}

inline PartialOrder read_poset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_poset(in);
}

inline void write_poset(std::ostream& out, const PartialOrder& order) {
    out << to_string(order.kind()) << ' ' << order.num_courses() << ' ';
    switch (order.kind()) {
    case OrderKind::group: out << order.num_labels(); break;
    case OrderKind::tree: out << order.tree_parents().size(); break;
    default: out << 0; break;
    }
    out << '\n';
    for (std::size_t e = 0; e < order.size(); ++e) {
        auto cell = order.element(e);
        std::size_t label = order.kind() == OrderKind::dag ? e : order.class_label(order.class_of(e));
        out << cell.course << ' ' << cell.slot << ' ' << label << '\n';
    }
    if (order.kind() == OrderKind::tree) {
        const auto& parents = order.tree_parents();
        for (std::size_t v = 0; v < parents.size(); ++v) out << v << ' ' << parents[v] << '\n';
    } else if (order.kind() == OrderKind::dag) {
        for (std::size_t c = 0; c < order.num_classes(); ++c)
            for (auto s : order.successors(c))
                for (auto a : order.members(c))
                    for (auto b : order.members(s)) out << a << ' ' << b << '\n';
    }
}

} // namespace ratingbias
