#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "ratingbias/ratingbias.hpp"

using namespace ratingbias;
using nlohmann::json;

namespace {

/// stdout when path is empty or "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_) throw std::runtime_error("cannot write " + path);
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void write_solution_csv(std::ostream& out, const Solution& s) {
    out << "kind,course,slot,value\n";
    for (std::size_t i = 0; i < s.x_hat.size(); ++i) out << "x," << i << ",," << format_double(s.x_hat[i]) << '\n';
    for (std::size_t k = 0; k < s.b_hat.size(); ++k) {
        auto e = s.b_hat.cells().cell(k);
        out << "b," << e.course << ',' << e.slot << ',' << format_double(s.b_hat[k]) << '\n';
    }
}

json diagnostics_json(const Solution& s) {
    return json{{"lambda", s.lambda.to_string()},
                {"iterations", s.diagnostics.iterations},
                {"objective", s.diagnostics.objective},
                {"feasibility_residual", s.diagnostics.feasibility_residual},
                {"gradient_norm", s.diagnostics.gradient_norm},
                {"tie_break", s.diagnostics.tie_break}};
}

void emit_diagnostics(const json& j, const std::string& path) {
    if (path.empty()) {
        std::cerr << j.dump(2) << '\n';
        return;
    }
    Output out(path);
    out.stream() << j.dump(2) << '\n';
}

struct DataArgs {
    std::string ratings;
    std::string poset;
    std::string out;
    std::string diagnostics;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
    cmd->add_option("--ratings", a.ratings, "ratings CSV with columns course,slot,value")->required()->check(CLI::ExistingFile);
    cmd->add_option("--poset", a.poset, "partial order file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", a.out, "solution CSV (default stdout)");
    cmd->add_option("--diagnostics", a.diagnostics, "diagnostics JSON file (default stderr)");
}

std::vector<Lambda> parse_grid_or_default(const std::string& text) {
    return text.empty() ? default_lambda_grid() : parse_lambda_grid(text);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bias-corrected course quality estimation under ordering constraints"};
    app.require_subcommand(1);

    DataArgs fit_args;
    std::string lambda_text = "0";
    auto* fit_cmd = app.add_subcommand("fit", "fit the estimator at one regularization weight");
    add_data_options(fit_cmd, fit_args);
    fit_cmd->add_option("--lambda", lambda_text, "non-negative number or inf")->capture_default_str();

    DataArgs cv_args;
    std::string grid_text, report_path, refit = "full";
    std::size_t extensions = 100;
    std::uint64_t cv_seed = 0;
    auto* cv_cmd = app.add_subcommand("cv", "select the regularization weight by cross-validation and refit");
    add_data_options(cv_cmd, cv_args);
    cv_cmd->add_option("--lambda-grid", grid_text, "comma list, inf allowed (default 0, 2^-9..2^5, inf)");
    cv_cmd->add_option("--extensions", extensions, "sampled linear extensions for interpolation")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cv_cmd->add_option("--seed", cv_seed, "random seed")->capture_default_str();
    cv_cmd->add_option("--report", report_path, "CSV of lambda,cv_error (default stderr)");
    cv_cmd->add_option("--refit-on", refit, "data used for the final fit")
        ->capture_default_str()
        ->check(CLI::IsMember({"full", "train"}));

    std::string config_path, sim_out, histogram_path;
    std::optional<std::string> scenario, sim_grid, estimators;
    std::optional<std::size_t> d, n, k, levels, runs, sim_extensions, threads, groups;
    std::optional<double> sigma, eta, fraction;
    std::optional<std::uint64_t> sim_seed;
    auto* sim_cmd = app.add_subcommand("simulate", "run a seeded Monte-Carlo scenario");
    sim_cmd->add_option("--config", config_path, "key=value config file; flags override it")->check(CLI::ExistingFile);
    sim_cmd->add_option("--scenario", scenario,
                        "non_interleaving | interleaving | binary | tree_total | tree_3level | unequal_groups | uniform_d2");
    sim_cmd->add_option("--d", d, "number of courses (0: scenario default)");
    sim_cmd->add_option("--n", n, "ratings per course");
    sim_cmd->add_option("--k", k, "tree_3level: elements per node (sets n = 7k/3)");
    sim_cmd->add_option("--levels", levels, "tree_total: tree depth (sets n = 2^(levels-1) - 1)");
    sim_cmd->add_option("--sigma", sigma, "bias standard deviation");
    sim_cmd->add_option("--eta", eta, "noise standard deviation");
    sim_cmd->add_option("--runs", runs, "Monte-Carlo runs");
    sim_cmd->add_option("--seed", sim_seed, "base seed");
    sim_cmd->add_option("--lambda-grid", sim_grid, "comma list, inf allowed");
    sim_cmd->add_option("--estimators", estimators,
                        "comma list of cv, best_fixed, mean, median, reweighted, reweighted_node, reweighted_level");
    sim_cmd->add_option("--extensions", sim_extensions, "sampled linear extensions for cv");
    sim_cmd->add_option("--threads", threads, "worker threads (0: all cores)");
    sim_cmd->add_option("--fraction", fraction, "uniform_d2: group-0 share of course 0");
    sim_cmd->add_option("--groups", groups, "unequal_groups: number of groups");
    sim_cmd->add_option("--out", sim_out, "results CSV (default stdout)");
    sim_cmd->add_option("--histogram", histogram_path, "CSV of lambda,count for the cv selections");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit_cmd) {
            auto y = read_ratings_csv(fit_args.ratings);
            auto order = read_poset(fit_args.poset);
            auto sol = fit(y, order, Lambda::parse(lambda_text), y.cells());
            Output out(fit_args.out);
            write_solution_csv(out.stream(), sol);
            emit_diagnostics(diagnostics_json(sol), fit_args.diagnostics);
        } else if (*cv_cmd) {
            auto y = read_ratings_csv(cv_args.ratings);
            auto order = read_poset(cv_args.poset);
            Rng rng(cv_seed);
            auto res = fit_cv(y, order, y.cells(), parse_grid_or_default(grid_text), extensions, rng,
                              refit == "train" ? RefitOn::train : RefitOn::full);
            Output out(cv_args.out);
            write_solution_csv(out.stream(), res.solution);
            std::ostringstream report;
            report << "lambda,cv_error\n";
            for (std::size_t i = 0; i < res.report.lambdas.size(); ++i)
                report << res.report.lambdas[i].to_string() << ',' << format_double(res.report.errors[i]) << '\n';
            if (report_path.empty()) {
                std::cerr << report.str();
            } else {
                Output r(report_path);
                r.stream() << report.str();
            }
            auto diag = diagnostics_json(res.solution);
            diag["selected_lambda"] = res.report.selected.to_string();
            diag["extensions_used"] = res.report.extensions_used;
            diag["seed"] = cv_seed;
            diag["refit_on"] = refit;
            emit_diagnostics(diag, cv_args.diagnostics);
        } else if (*sim_cmd) {
            ScenarioConfig c;
            if (!config_path.empty()) c = read_config_file(config_path);
            if (scenario) c.scenario = parse_scenario(*scenario);
            if (d) c.d = *d;
            if (n) c.n = *n;
            if (k) apply_setting(c, "k", std::to_string(*k));
            if (levels) apply_setting(c, "levels", std::to_string(*levels));
            if (sigma) c.sigma = *sigma;
            if (eta) c.eta = *eta;
            if (runs) c.runs = *runs;
            if (sim_seed) c.seed = *sim_seed;
            if (sim_grid) c.lambda_grid = parse_lambda_grid(*sim_grid);
            if (estimators) apply_setting(c, "estimators", *estimators);
            if (sim_extensions) c.extensions = *sim_extensions;
            if (threads) c.threads = *threads;
            if (fraction) c.fraction = *fraction;
            if (groups) c.groups = *groups;
            auto rows = run_scenario(c);
            Output out(sim_out);
            write_results_csv(out.stream(), rows);
            if (!histogram_path.empty()) {
                Output h(histogram_path);
                h.stream() << "lambda,count\n";
                for (const auto& [l, count] : lambda_histogram(rows, c.lambda_grid)) h.stream() << l.to_string() << ',' << count << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
