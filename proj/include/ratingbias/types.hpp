#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ratingbias {

/// A rating cell: the `slot`-th rating of course `course`. Slots are positional;
/// the same slot in two courses refers to two unrelated raters.
struct ElementId {
    std::size_t course = 0;
    std::size_t slot = 0;

    friend auto operator<=>(const ElementId&, const ElementId&) = default;
    friend bool operator==(const ElementId&, const ElementId&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const ElementId& e) {
    return os << '(' << e.course << ',' << e.slot << ')';
}

/// Raised when an estimator's preconditions on the data layout do not hold
/// (for instance a reweighted mean with no group shared by all courses).
class not_applicable_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by iterative solvers that hit their iteration cap.
class convergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using QualityVector = std::vector<double>;

/// The observed cells Ω, stored ragged: one sorted slot list per course.
/// Cells are enumerated course-major, slot-ascending; that enumeration is the
/// "flat index" used by RatingMatrix and by PartialOrder element indices.
class ObservationSet {
public:
    ObservationSet() = default;

    explicit ObservationSet(std::vector<std::vector<std::size_t>> slots) : slots_(std::move(slots)) {
        if (slots_.empty()) throw std::invalid_argument("ObservationSet: no courses");
        offsets_.assign(slots_.size() + 1, 0);
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            auto& s = slots_[i];
            if (s.empty()) throw std::invalid_argument("ObservationSet: course " + std::to_string(i) + " has no cells");
            std::sort(s.begin(), s.end());
            if (std::adjacent_find(s.begin(), s.end()) != s.end())
                throw std::invalid_argument("ObservationSet: duplicate slot in course " + std::to_string(i));
            offsets_[i + 1] = offsets_[i] + s.size();
        }
    }

    /// All cells of a d x n grid.
    static ObservationSet full(std::size_t d, std::size_t n) {
        return ragged(std::vector<std::size_t>(d, n));
    }

    /// Course i holds slots 0..sizes[i]-1.
    static ObservationSet ragged(const std::vector<std::size_t>& sizes) {
        std::vector<std::vector<std::size_t>> s(sizes.size());
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            s[i].resize(sizes[i]);
            for (std::size_t j = 0; j < sizes[i]; ++j) s[i][j] = j;
        }
        return ObservationSet(std::move(s));
    }

    static ObservationSet from_cells(std::size_t d, const std::vector<ElementId>& cells) {
        std::vector<std::vector<std::size_t>> s(d);
        for (const auto& e : cells) {
            if (e.course >= d) throw std::invalid_argument("ObservationSet: course index out of range");
            s[e.course].push_back(e.slot);
        }
        return ObservationSet(std::move(s));
    }

    std::size_t num_courses() const { return slots_.size(); }
    std::size_t course_size(std::size_t i) const { return slots_.at(i).size(); }
    std::size_t size() const { return offsets_.empty() ? 0 : offsets_.back(); }
    std::size_t offset(std::size_t i) const { return offsets_.at(i); }
    const std::vector<std::size_t>& slots(std::size_t i) const { return slots_.at(i); }

    ElementId cell(std::size_t flat) const {
        auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat);
        std::size_t i = static_cast<std::size_t>(it - offsets_.begin()) - 1;
        return {i, slots_[i][flat - offsets_[i]]};
    }

    std::size_t course_of(std::size_t flat) const {
        auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat);
        return static_cast<std::size_t>(it - offsets_.begin()) - 1;
    }

    /// Flat index of a cell, or npos when absent.
    std::size_t index_of(const ElementId& e) const {
        if (e.course >= slots_.size()) return npos;
        const auto& s = slots_[e.course];
        auto it = std::lower_bound(s.begin(), s.end(), e.slot);
        if (it == s.end() || *it != e.slot) return npos;
        return offsets_[e.course] + static_cast<std::size_t>(it - s.begin());
    }

    bool contains(const ElementId& e) const { return index_of(e) != npos; }

    std::vector<ElementId> cells() const {
        std::vector<ElementId> out;
        out.reserve(size());
        for (std::size_t i = 0; i < slots_.size(); ++i)
            for (auto j : slots_[i]) out.push_back({i, j});
        return out;
    }

    bool is_subset_of(const ObservationSet& other) const {
        if (other.num_courses() != num_courses()) return false;
        for (std::size_t i = 0; i < slots_.size(); ++i)
            if (!std::includes(other.slots_[i].begin(), other.slots_[i].end(), slots_[i].begin(), slots_[i].end()))
                return false;
        return true;
    }

    friend bool operator==(const ObservationSet& a, const ObservationSet& b) { return a.slots_ == b.slots_; }

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

private:
    std::vector<std::vector<std::size_t>> slots_;
    std::vector<std::size_t> offsets_;
};

/// One finite value per observed cell, in flat order.
class RatingMatrix {
public:
    RatingMatrix() = default;

    explicit RatingMatrix(ObservationSet cells, double fill = 0.0)
        : cells_(std::move(cells)), values_(cells_.size(), fill) {}

    RatingMatrix(ObservationSet cells, std::vector<double> values)
        : cells_(std::move(cells)), values_(std::move(values)) {
        if (values_.size() != cells_.size()) throw std::invalid_argument("RatingMatrix: value count does not match cells");
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("RatingMatrix: non-finite entry");
    }

    /// Dense d x n construction from row vectors.
    static RatingMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        std::vector<std::size_t> sizes;
        std::vector<double> v;
        for (const auto& r : rows) {
            sizes.push_back(r.size());
            v.insert(v.end(), r.begin(), r.end());
        }
        return RatingMatrix(ObservationSet::ragged(sizes), std::move(v));
    }

    const ObservationSet& cells() const { return cells_; }
    std::size_t size() const { return values_.size(); }
    std::size_t num_courses() const { return cells_.num_courses(); }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double operator[](std::size_t flat) const { return values_[flat]; }
    double& operator[](std::size_t flat) { return values_[flat]; }

    double at(const ElementId& e) const {
        auto k = cells_.index_of(e);
        if (k == ObservationSet::npos) throw std::out_of_range("RatingMatrix: cell not present");
        return values_[k];
    }

    /// Values of course i, in slot order.
    std::vector<double> row(std::size_t i) const {
        auto b = values_.begin() + static_cast<std::ptrdiff_t>(cells_.offset(i));
        return {b, b + static_cast<std::ptrdiff_t>(cells_.course_size(i))};
    }

    /// Restriction to a subset of cells.
    RatingMatrix restrict_to(const ObservationSet& subset) const {
        std::vector<double> v;
        v.reserve(subset.size());
        for (const auto& e : subset.cells()) v.push_back(at(e));
        return RatingMatrix(subset, std::move(v));
    }

private:
    ObservationSet cells_;
    std::vector<double> values_;
};

/// The regularization weight: a finite non-negative value or the symbolic limit +inf.
class Lambda {
public:
    constexpr Lambda() = default;

    static Lambda infinity() {
        Lambda l;
        l.infinite_ = true;
        return l;
    }

    static Lambda finite(double v) {
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("Lambda: finite value must be >= 0");
        Lambda l;
        l.value_ = v;
        return l;
    }

    /// Accepts "inf", "infinity", or a decimal number.
    static Lambda parse(std::string_view text) {
        std::string s(text);
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
        std::string lower;
        for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (lower == "inf" || lower == "infinity" || lower == "+inf") return infinity();
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("Lambda: cannot parse '" + s + "'");
        }
        if (used != s.size()) throw std::invalid_argument("Lambda: cannot parse '" + s + "'");
        return finite(v);
    }

    bool is_infinite() const { return infinite_; }
    double value() const { return infinite_ ? std::numeric_limits<double>::infinity() : value_; }

    std::string to_string() const {
        if (infinite_) return "inf";
        std::ostringstream os;
        os.precision(17);
        os << value_;
        return os.str();
    }

    friend bool operator==(const Lambda& a, const Lambda& b) {
        return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
    }
    friend bool operator<(const Lambda& a, const Lambda& b) { return a.value() < b.value(); }

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

inline std::ostream& operator<<(std::ostream& os, const Lambda& l) { return os << l.to_string(); }

/// {2^i : -9 <= i <= 5} ∪ {0, inf}, ascending.
inline std::vector<Lambda> default_lambda_grid() {
    std::vector<Lambda> grid{Lambda::finite(0.0)};
    for (int i = -9; i <= 5; ++i) grid.push_back(Lambda::finite(std::ldexp(1.0, i)));
    grid.push_back(Lambda::infinity());
    return grid;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace ratingbias
