#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "poset.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace ratingbias {

struct GenParams {
    double sigma = 1.0;
    double eta = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline PartialOrder order_on(const PartialOrder& order, const ObservationSet& omega) {
    if (omega == order.cells()) return order;
    return order.restrict_to(omega);
}

/// Assigns sorted `draws` to the cells of omega along a sampled linear extension.
inline RatingMatrix assign_by_extension(const PartialOrder& order, const ObservationSet& omega,
                                        std::vector<double> draws, Rng& rng) {
    auto sub = order_on(order, omega);
    std::sort(draws.begin(), draws.end());
    auto ranked = sample_extension_indices(sub, rng);
    RatingMatrix b(omega, 0.0);
    for (std::size_t t = 0; t < ranked.size(); ++t) b[ranked[t]] = draws[t];
    return b;
}

} // namespace detail

/// Bias under the ordering: |omega| i.i.d. N(0, sigma^2) draws, sorted, then
/// placed on the cells in the rank order of a uniformly sampled linear extension.
inline RatingMatrix generate_bias(const PartialOrder& order, const ObservationSet& omega, double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("generate_bias: sigma must be >= 0");
    std::vector<double> draws(omega.size());
    for (auto& v : draws) v = sigma * rng.normal();
    return detail::assign_by_extension(order, omega, std::move(draws), rng);
}

/// Group-ordering bias with uniform marginals: group 0 from U[-1, 0], group 1
/// from U[0, 1], generally group k from U[k - 1, k] shifted so that the groups
/// tile [-1, r - 1]. Within a group the values are shuffled over its cells.
inline RatingMatrix generate_uniform_bias(const PartialOrder& order, const ObservationSet& omega, Rng& rng) {
    if (order.kind() != OrderKind::group) throw std::invalid_argument("generate_uniform_bias: needs a group ordering");
    auto sub = detail::order_on(order, omega);
    RatingMatrix b(omega, 0.0);
    for (std::size_t e = 0; e < sub.size(); ++e) {
        double k = static_cast<double>(sub.class_label(sub.class_of(e)));
        b[e] = rng.uniform(k - 1.0, k);
    }
    return b;
}

inline RatingMatrix generate_noise(const ObservationSet& omega, double eta, Rng& rng) {
    if (!(eta >= 0.0)) throw std::invalid_argument("generate_noise: eta must be >= 0");
    RatingMatrix z(omega, 0.0);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = eta * rng.normal();
    return z;
}

/// y_ij = x*_i + b_ij + z_ij
inline RatingMatrix synthesize(const QualityVector& x_star, const RatingMatrix& b, const RatingMatrix& z) {
    if (!(b.cells() == z.cells())) throw std::invalid_argument("synthesize: bias and noise cover different cells");
    if (x_star.size() != b.num_courses()) throw std::invalid_argument("synthesize: quality vector length mismatch");
    RatingMatrix y(b.cells(), 0.0);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = x_star[b.cells().course_of(k)] + b[k] + z[k];
    return y;
}

/// (1/d) sum_i (x_hat_i - x*_i)^2
inline double sq_error(const QualityVector& x_hat, const QualityVector& x_star) {
    if (x_hat.size() != x_star.size()) throw std::invalid_argument("sq_error: length mismatch");
    if (x_hat.empty()) throw std::invalid_argument("sq_error: empty vectors");
    double s = 0.0;
    for (std::size_t i = 0; i < x_hat.size(); ++i) s += (x_hat[i] - x_star[i]) * (x_hat[i] - x_star[i]);
    return s / static_cast<double>(x_hat.size());
}

/// Reads `course,slot,value` rows (header optional, `#` comments allowed).
inline RatingMatrix read_ratings_csv(std::istream& in) {
    std::vector<ElementId> cells;
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0, d = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        long long course = 0, slot = 0;
        std::string value;
        if (!(ss >> course >> slot >> value)) {
            if (cells.empty() && line.find("course") != std::string::npos) continue;
            throw std::invalid_argument("ratings csv line " + std::to_string(lineno) + ": expected course,slot,value");
        }
        if (course < 0 || slot < 0) throw std::invalid_argument("ratings csv line " + std::to_string(lineno) + ": negative index");
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw std::invalid_argument("ratings csv line " + std::to_string(lineno) + ": bad value '" + value + "'");
        }
        cells.push_back({static_cast<std::size_t>(course), static_cast<std::size_t>(slot)});
        values.push_back(v);
        d = std::max(d, static_cast<std::size_t>(course) + 1);
    }
    if (cells.empty()) throw std::invalid_argument("ratings csv: no rows");
    auto omega = ObservationSet::from_cells(d, cells);
    if (omega.size() != cells.size()) throw std::invalid_argument("ratings csv: duplicate cell");
    std::vector<double> ordered(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) ordered[omega.index_of(cells[k])] = values[k];
    return RatingMatrix(omega, std::move(ordered));
}

inline RatingMatrix read_ratings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_ratings_csv(in);
}

inline void write_ratings_csv(std::ostream& out, const RatingMatrix& m) {
    out << "course,slot,value\n";
    for (std::size_t k = 0; k < m.size(); ++k) {
        auto e = m.cells().cell(k);
        out << e.course << ',' << e.slot << ',' << format_double(m[k]) << '\n';
    }
}

} // namespace ratingbias
