#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "baselines.hpp"
#include "crossval.hpp"
#include "datamodel.hpp"
#include "estimator.hpp"
#include "poset.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace ratingbias {

enum class Scenario { non_interleaving, interleaving, binary, tree_total, tree_3level, unequal_groups, uniform_d2 };

inline const std::vector<std::pair<Scenario, std::string>>& scenario_names() {
    static const std::vector<std::pair<Scenario, std::string>> names{
        {Scenario::non_interleaving, "non_interleaving"}, {Scenario::interleaving, "interleaving"},
        {Scenario::binary, "binary"},                     {Scenario::tree_total, "tree_total"},
        {Scenario::tree_3level, "tree_3level"},           {Scenario::unequal_groups, "unequal_groups"},
        {Scenario::uniform_d2, "uniform_d2"}};
    return names;
}

inline std::string to_string(Scenario s) {
    for (const auto& [k, v] : scenario_names())
        if (k == s) return v;
    return "?";
}

inline Scenario parse_scenario(const std::string& text) {
    for (const auto& [k, v] : scenario_names())
        if (v == text) return k;
    throw std::invalid_argument("unknown scenario '" + text + "'");
}

inline const std::vector<std::string>& estimator_names() {
    static const std::vector<std::string> names{"cv",         "best_fixed",      "mean",           "median",
                                                "reweighted", "reweighted_node", "reweighted_level"};
    return names;
}

struct ScenarioConfig {
    Scenario scenario = Scenario::binary;
    std::size_t d = 0; // 0 picks the scenario default
    std::size_t n = 50;
    double sigma = 1.0;
    double eta = 0.0;
    std::size_t runs = 1;
    std::uint64_t seed = 0;
    std::vector<Lambda> lambda_grid = default_lambda_grid();
    std::vector<std::string> estimators{"cv", "best_fixed", "mean", "median"};
    std::size_t extensions = 100;
    std::size_t threads = 0; // 0 uses the hardware concurrency
    /// Share of course 0 in group 0 for uniform_d2; courses 1.. mirror it.
    double fraction = 0.5;
    /// binary layout: the majority share of the first half of the courses
    double binary_share = 0.9;
    std::size_t groups = 5; // unequal_groups
};

inline std::size_t default_courses(Scenario s) {
    switch (s) {
    case Scenario::non_interleaving:
    case Scenario::interleaving:
    case Scenario::tree_3level: return 3;
    case Scenario::binary: return 4;
    case Scenario::tree_total:
    case Scenario::uniform_d2: return 2;
    case Scenario::unequal_groups: return 10;
    }
    return 2;
}

/// Fills defaults and checks scenario sizing.
inline ScenarioConfig normalized(ScenarioConfig c) {
    if (c.d == 0) c.d = default_courses(c.scenario);
    if (c.runs < 1) throw std::invalid_argument("config: runs must be >= 1");
    if (c.n < 1) throw std::invalid_argument("config: n must be >= 1");
    if (!(c.sigma >= 0.0) || !(c.eta >= 0.0)) throw std::invalid_argument("config: sigma and eta must be >= 0");
    if (c.lambda_grid.empty()) throw std::invalid_argument("config: empty lambda grid");
    if (c.extensions < 1) throw std::invalid_argument("config: extensions must be >= 1");
    for (const auto& e : c.estimators)
        if (std::find(estimator_names().begin(), estimator_names().end(), e) == estimator_names().end())
            throw std::invalid_argument("config: unknown estimator '" + e + "'");
    switch (c.scenario) {
    case Scenario::tree_total:
        if (c.d != 2) throw std::invalid_argument("tree_total: needs d = 2");
        if (c.n < 1 || ((c.n + 1) & c.n) != 0) throw std::invalid_argument("tree_total: n + 1 must be a power of two");
        break;
    case Scenario::tree_3level:
        if (c.d != 3) throw std::invalid_argument("tree_3level: needs d = 3");
        if (c.n % 7 != 0) throw std::invalid_argument("tree_3level: n must be 7k/3 with k a multiple of 3");
        break;
    case Scenario::uniform_d2:
        if (c.d != 2) throw std::invalid_argument("uniform_d2: needs d = 2");
        if (!(c.fraction > 0.0 && c.fraction < 1.0)) throw std::invalid_argument("uniform_d2: fraction must be in (0, 1)");
        break;
    case Scenario::unequal_groups:
        if (c.n < 2) throw std::invalid_argument("unequal_groups: n must be >= 2");
        if (c.groups < 2) throw std::invalid_argument("unequal_groups: need at least 2 groups");
        break;
    case Scenario::binary:
        if (!(c.binary_share >= 0.0 && c.binary_share <= 1.0))
            throw std::invalid_argument("binary: share must be in [0, 1]");
        break;
    default: break;
    }
    return c;
}

struct Instance {
    PartialOrder order;
    ObservationSet omega;
    QualityVector x_star;
    RatingMatrix bias;
    RatingMatrix noise;
    RatingMatrix y;
};

namespace detail {

inline PartialOrder two_group_layout(std::size_t d, std::size_t n, double share_first_half) {
    std::map<ElementId, std::size_t> g;
    const auto big = static_cast<std::size_t>(std::llround(share_first_half * static_cast<double>(n)));
    for (std::size_t i = 0; i < d; ++i) {
        std::size_t low = i < d / 2 ? big : n - big; // group-0 count
        for (std::size_t j = 0; j < n; ++j) g[{i, j}] = j < low ? 0 : 1;
    }
    return build_group_ordering(g, 2);
}

inline PartialOrder scenario_order(const ScenarioConfig& c, Rng& rng) {
    const std::size_t d = c.d, n = c.n;
    switch (c.scenario) {
    case Scenario::non_interleaving: {
        std::vector<ElementId> ranked;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < n; ++j) ranked.push_back({i, j});
        return build_total_ordering(ranked);
    }
    case Scenario::interleaving: {
        std::vector<ElementId> ranked;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < d; ++i) ranked.push_back({i, j});
        return build_total_ordering(ranked);
    }
    case Scenario::binary: return two_group_layout(d, n, c.binary_share);
    case Scenario::uniform_d2: return two_group_layout(d, n, c.fraction);
    case Scenario::tree_total: {
        // Complete binary tree in breadth-first numbering with its last leaf removed:
        // the n inner nodes go to course 0, the n remaining leaves to course 1.
        const std::size_t nodes = 2 * n + 1;
        std::map<std::size_t, std::size_t> parents;
        for (std::size_t v = 1; v < nodes - 1; ++v) parents[v] = (v - 1) / 2;
        std::map<ElementId, std::size_t> node;
        for (std::size_t v = 0; v < n; ++v) node[{0, v}] = v;
        for (std::size_t v = n; v < 2 * n; ++v) node[{1, v - n}] = v;
        return build_tree_ordering(node, parents, nodes - 1);
    }
    case Scenario::tree_3level: {
        const std::size_t k = 3 * n / 7;
        std::map<std::size_t, std::size_t> parents{{1, 0}, {2, 0}, {3, 1}, {4, 1}, {5, 2}, {6, 2}};
        std::vector<std::size_t> level2, level3;
        for (std::size_t v = 1; v <= 2; ++v) level2.insert(level2.end(), k, v);
        for (std::size_t v = 3; v <= 6; ++v) level3.insert(level3.end(), k, v);
        rng.shuffle(level2);
        rng.shuffle(level3);
        std::vector<std::vector<std::size_t>> course(3);
        course[0].insert(course[0].end(), k, 0);
        course[0].insert(course[0].end(), level2.begin(), level2.begin() + static_cast<std::ptrdiff_t>(k));
        course[1].insert(course[1].end(), level2.begin() + static_cast<std::ptrdiff_t>(k), level2.end());
        auto it = level3.begin();
        auto take = [&](std::size_t i, std::size_t count) {
            course[i].insert(course[i].end(), it, it + static_cast<std::ptrdiff_t>(count));
            it += static_cast<std::ptrdiff_t>(count);
        };
        take(0, k / 3);
        take(1, 4 * k / 3);
        take(2, 7 * k / 3);
        std::map<ElementId, std::size_t> node;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < course[i].size(); ++j) node[{i, j}] = course[i][j];
        return build_tree_ordering(node, parents, 7);
    }
    case Scenario::unequal_groups: {
        // Course sizes uniform on [n/2, 3n/2]; group shares Dirichlet(1, ..., 1) with multinomial counts.
        std::map<ElementId, std::size_t> g;
        const std::size_t lo = std::max<std::size_t>(2, n / 2), hi = std::max(lo, 3 * n / 2);
        for (std::size_t i = 0; i < d; ++i) {
            std::size_t size = lo + rng.index(hi - lo + 1);
            std::vector<double> share(c.groups);
            double total = 0.0;
            for (auto& s : share) total += (s = -std::log(1.0 - rng.uniform()));
            std::vector<double> cdf(c.groups);
            double acc = 0.0;
            for (std::size_t k = 0; k < c.groups; ++k) cdf[k] = (acc += share[k] / total);
            std::vector<std::size_t> counts(c.groups, 0);
            for (std::size_t j = 0; j < size; ++j) {
                double u = rng.uniform();
                std::size_t k = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
                ++counts[std::min(k, c.groups - 1)];
            }
            std::size_t j = 0;
            for (std::size_t k = 0; k < c.groups; ++k)
                for (std::size_t t = 0; t < counts[k]; ++t) g[{i, j++}] = k;
        }
        return build_group_ordering(g, c.groups);
    }
    }
    throw std::invalid_argument("unknown scenario");
}

} // namespace detail

/// The data of one run: independent streams for layout, bias, noise (and CV,
/// drawn later from stream 4), all derived from derive_seed(seed, run).
inline Instance generate_instance(const ScenarioConfig& config, std::size_t run) {
    auto c = normalized(config);
    Rng base(derive_seed(c.seed, run));
    Rng layout = base.split(1), bias_rng = base.split(2), noise_rng = base.split(3);
    auto order = detail::scenario_order(c, layout);
    auto omega = order.cells();
    RatingMatrix b = c.scenario == Scenario::uniform_d2 ? generate_uniform_bias(order, omega, bias_rng)
                                                       : generate_bias(order, omega, c.sigma, bias_rng);
    auto z = generate_noise(omega, c.eta, noise_rng);
    QualityVector x_star(omega.num_courses(), 0.0);
    auto y = synthesize(x_star, b, z);
    return Instance{std::move(order), std::move(omega), std::move(x_star), std::move(b), std::move(z), std::move(y)};
}

struct ResultRow {
    std::string scenario;
    std::string estimator;
    std::size_t d = 0;
    std::size_t n = 0;
    double sigma = 0.0;
    double eta = 0.0;
    std::size_t run = 0;
    std::optional<double> sq_error;   // empty when the estimator does not apply
    std::optional<Lambda> lambda;     // cv: selected; best_fixed: the best grid value
};

/// Evaluates every requested estimator on one run.
inline std::vector<ResultRow> run_once(const ScenarioConfig& config, std::size_t run) {
    auto c = normalized(config);
    auto inst = generate_instance(c, run);
    Rng cv_rng = Rng(derive_seed(c.seed, run)).split(4);
    auto row = [&](const std::string& name) {
        ResultRow r;
        r.scenario = to_string(c.scenario);
        r.estimator = name;
        r.d = c.d;
        r.n = c.n;
        r.sigma = c.sigma;
        r.eta = c.eta;
        r.run = run;
        return r;
    };
    auto wants = [&](const char* name) {
        return std::find(c.estimators.begin(), c.estimators.end(), name) != c.estimators.end();
    };
    std::vector<Solution> path;
    if (wants("best_fixed")) path = fit_path(inst.y, inst.order, c.lambda_grid, inst.omega);

    std::vector<ResultRow> out;
    for (const auto& name : c.estimators) {
        auto r = row(name);
        try {
            if (name == "mean") {
                r.sq_error = sq_error(mean_estimator(inst.y, inst.omega), inst.x_star);
            } else if (name == "median") {
                r.sq_error = sq_error(median_estimator(inst.y, inst.omega), inst.x_star);
            } else if (name == "reweighted") {
                r.sq_error = sq_error(reweighted_mean(inst.y, inst.order, inst.omega), inst.x_star);
            } else if (name == "reweighted_node") {
                r.sq_error = sq_error(reweighted_mean_tree(inst.y, inst.order, TreeMode::node, inst.omega), inst.x_star);
            } else if (name == "reweighted_level") {
                r.sq_error = sq_error(reweighted_mean_tree(inst.y, inst.order, TreeMode::level, inst.omega), inst.x_star);
            } else if (name == "best_fixed") {
                std::vector<double> errs;
                for (const auto& s : path) errs.push_back(sq_error(s.x_hat, inst.x_star));
                auto k = argmin_first(errs);
                r.sq_error = errs[k];
                r.lambda = c.lambda_grid[k];
            } else if (name == "cv") {
                auto rep = select_lambda(inst.y, inst.order, inst.omega, c.lambda_grid, c.extensions, cv_rng);
                auto x = path.empty() ? fit(inst.y, inst.order, rep.selected, inst.omega).x_hat
                                      : path[rep.selected_index].x_hat;
                r.sq_error = sq_error(x, inst.x_star);
                r.lambda = rep.selected;
            }
        } catch (const not_applicable_error&) {
            r.sq_error.reset();
        }
        out.push_back(std::move(r));
    }
    return out;
}

/// All runs, parallel over runs, merged in run order. Output does not depend on
/// the thread count. Rethrows the first failure.
inline std::vector<ResultRow> run_scenario(const ScenarioConfig& config) {
    auto c = normalized(config);
    std::size_t threads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, c.runs);
    std::vector<std::vector<ResultRow>> per_run(c.runs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            std::size_t run = next.fetch_add(1);
            if (run >= c.runs) return;
            try {
                per_run[run] = run_once(c, run);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = c.runs;
                return;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    std::vector<ResultRow> rows;
    for (auto& r : per_run) rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

/// How often each grid value was selected by cv, in grid order.
inline std::vector<std::pair<Lambda, std::size_t>> lambda_histogram(const std::vector<ResultRow>& rows,
                                                                    const std::vector<Lambda>& grid) {
    std::vector<std::pair<Lambda, std::size_t>> h;
    for (const auto& l : grid) h.emplace_back(l, 0);
    for (const auto& r : rows) {
        if (r.estimator != "cv" || !r.lambda) continue;
        for (auto& [l, count] : h)
            if (l == *r.lambda) ++count;
    }
    return h;
}

inline std::vector<std::pair<Lambda, std::size_t>> lambda_histogram(const ScenarioConfig& config) {
    auto c = config;
    if (std::find(c.estimators.begin(), c.estimators.end(), "cv") == c.estimators.end())
        throw std::invalid_argument("lambda_histogram: cv is not among the estimators");
    c.estimators = {"cv"};
    return lambda_histogram(run_scenario(c), c.lambda_grid);
}

/// Index of the most frequent entry (first on ties).
inline std::size_t histogram_mode(const std::vector<std::pair<Lambda, std::size_t>>& h) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < h.size(); ++k)
        if (h[k].second > h[best].second) best = k;
    return best;
}

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "scenario,estimator,d,n,sigma,eta,run,sq_error,lambda\n";
    for (const auto& r : rows) {
        out << r.scenario << ',' << r.estimator << ',' << r.d << ',' << r.n << ',' << format_double(r.sigma) << ','
            << format_double(r.eta) << ',' << r.run << ',' << (r.sq_error ? format_double(*r.sq_error) : "NA") << ','
            << (r.lambda ? r.lambda->to_string() : "") << '\n';
    }
}

inline std::vector<Lambda> parse_lambda_grid(const std::string& text) {
    std::vector<Lambda> grid;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        grid.push_back(Lambda::parse(item));
    }
    if (grid.empty()) throw std::invalid_argument("empty lambda grid");
    return grid;
}

/// Applies one `key=value` setting. Unknown keys are errors.
inline void apply_setting(ScenarioConfig& c, const std::string& key, const std::string& value) {
    auto to_size = [&](const std::string& v) {
        std::size_t used = 0;
        long long x = std::stoll(v, &used);
        if (used != v.size() || x < 0) throw std::invalid_argument("config: bad integer for " + key);
        return static_cast<std::size_t>(x);
    };
    auto to_double = [&](const std::string& v) {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("config: bad number for " + key);
        return x;
    };
    if (key == "scenario") c.scenario = parse_scenario(value);
    else if (key == "d") c.d = to_size(value);
    else if (key == "n") c.n = to_size(value);
    else if (key == "k") c.n = 7 * to_size(value) / 3;
    else if (key == "levels") c.n = (std::size_t{1} << (to_size(value) - 1)) - 1;
    else if (key == "sigma") c.sigma = to_double(value);
    else if (key == "eta") c.eta = to_double(value);
    else if (key == "runs") c.runs = to_size(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "lambda_grid") c.lambda_grid = parse_lambda_grid(value);
    else if (key == "extensions") c.extensions = to_size(value);
    else if (key == "threads") c.threads = to_size(value);
    else if (key == "fraction") c.fraction = to_double(value);
    else if (key == "binary_share") c.binary_share = to_double(value);
    else if (key == "groups") c.groups = to_size(value);
    else if (key == "estimators") {
        c.estimators.clear();
        std::stringstream ss(value);
        for (std::string item; std::getline(ss, item, ',');)
            if (!item.empty()) c.estimators.push_back(item);
    } else throw std::invalid_argument("config: unknown key '" + key + "'");
}

/// Flat `key = value` lines; `#` comments and blank lines are skipped.
inline void read_config(std::istream& in, ScenarioConfig& c) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
        apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

inline ScenarioConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    ScenarioConfig c;
    read_config(in, c);
    return c;
}

} // namespace ratingbias
