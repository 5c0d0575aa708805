// potpda: command-line front end for the solvers, weights, bound checks,
// training and the synthetic benchmark.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "potpda/bounds.hpp"
#include "potpda/config.hpp"
#include "potpda/dataset_io.hpp"
#include "potpda/pot.hpp"
#include "potpda/synthbench.hpp"
#include "potpda/warmpot.hpp"
#include "potpda/weights.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace potpda;

namespace {

struct Globals {
    std::string out = ".";
    std::string config_file;
    std::vector<std::string> sets;
    std::int64_t seed = -1;
};

/// Raised for CLI-level misuse that CLI11 cannot detect (exit 2).
struct UsageError : Error {
    using Error::Error;
};

fs::path out_dir(const Globals& g)
{
    fs::path p(g.out);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& s)
{
    std::ofstream o(p, std::ios::binary);
    if (!o) throw Error("cannot write '" + p.string() + "'");
    o << s;
}

RunConfig load_config(const Globals& g)
{
    auto flags = g.sets;
    if (g.seed >= 0) flags.push_back("seed=" + std::to_string(g.seed));
    return parse_config(g.config_file, flags);
}

void echo(const Globals& g, const RunConfig& c) { write_text(out_dir(g) / "config.txt", echo_config(c)); }

PdaDataset load_or_generate(const std::string& path, const RunConfig& c)
{
    if (!path.empty()) return read_dataset_csv(path);
    TaskSpec ts = c.task;
    ts.seed = c.task.seed + c.train.seed;
    return generate_pda_task(ts);
}

std::string hist_csv(const std::vector<std::pair<std::string, std::vector<std::size_t>>>& rows)
{
    std::string s = "scheme,bin_lo,bin_hi,count\n";
    char buf[128];
    for (const auto& [name, h] : rows) {
        for (std::size_t k = 0; k < h.size(); ++k) {
            const double lo = static_cast<double>(k) / static_cast<double>(h.size());
            const double hi = static_cast<double>(k + 1) / static_cast<double>(h.size());
            std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%zu\n", name.c_str(), lo, hi, h[k]);
            s += buf;
        }
    }
    return s;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// --- solve -----------------------------------------------------------------

int run_solve(const Globals& g, const std::string& a_path, const std::string& b_path, const std::string& c_path,
              double alpha, const std::string& method, double eps, int max_iter)
{
    const auto a = read_vector_csv(a_path);
    const auto b = read_vector_csv(b_path);
    const Matrix C = read_matrix_csv(c_path);
    SolverConfig cfg;
    if (eps > 0.0) cfg.epsilon = eps;
    if (max_iter > 0) cfg.max_iter = max_iter;
    const OtMethod m = method == "entropic" ? OtMethod::entropic : OtMethod::exact;
    const auto r = solve_partial_ot(a, b, C, alpha, m, cfg);
    const fs::path plan = out_dir(g) / "plan.csv";
    std::ofstream o(plan);
    write_matrix_csv(o, r.plan.matrix);
    json j{{"cost", r.cost},
           {"converged", r.converged},
           {"plan_path", plan.string()},
           {"method", method},
           {"alpha", alpha},
           {"iterations", r.iterations}};
    if (m == OtMethod::entropic) j["epsilon"] = cfg.epsilon;
    std::cout << j.dump(2) << '\n';
    return 0;
}

// --- weights ---------------------------------------------------------------

/// Source weights from the raw inputs (identity feature map). BA3US uses 1-NN
/// predictions against the source as its stand-in classifier.
int run_weights(const Globals& g, const std::string& data_path, const std::string& scheme_name, double alpha)
{
    const RunConfig c = load_config(g);
    echo(g, c);
    const PdaDataset data = load_or_generate(data_path, c);
    const Scheme scheme = scheme_from_string(scheme_name.empty() ? to_string(c.train.scheme) : scheme_name);
    const double beta = c.train.beta;
    if (alpha <= 0.0) alpha = c.train.alpha_max;
    const auto xs = data.source_inputs();

    WeightVector w;
    WeightVector shown;  // in [0, 1] for the histogram
    switch (scheme) {
    case Scheme::warmpot: {
        const Matrix C = feature_cost_matrix(xs, data.target_inputs, 1.0).entries;
        const auto a = uniform_masses(data.n_source(), 1.0 / beta);
        const auto b = uniform_masses(data.n_target(), 1.0);
        const auto r = exact_partial_ot(a, b, C, alpha);
        w = marginal_weights(r.plan).p;
        shown = normalized_source_weights(w, beta, data.n_source());
        break;
    }
    case Scheme::uniform:
        w = scheme_uniform(data.n_source());
        break;
    case Scheme::ba3us: {
        std::vector<int> pred, labels;
        for (const auto& x : data.target_inputs) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < xs.size(); ++i)
                if ((xs[i] - x).squaredNorm() < (xs[best] - x).squaredNorm()) best = i;
            pred.push_back(static_cast<int>(std::lround(data.source[best].y)));
        }
        for (const auto& s : data.source) labels.push_back(static_cast<int>(std::lround(s.y)));
        w = scheme_ba3us(pred, labels, data.n_target());
        break;
    }
    case Scheme::arpm:
        w = scheme_arpm(xs, data.target_inputs, c.train.arpm);
        break;
    }
    if (shown.values.empty()) {
        shown = w;
        double mx = 0.0;
        for (double v : w.values) mx = std::max(mx, v);
        if (mx > 0.0)
            for (double& v : shown.values) v /= mx;
    }

    const fs::path dir = out_dir(g);
    std::string csv = "index,label,weight,normalized\n";
    for (std::size_t i = 0; i < w.size(); ++i)
        csv += std::to_string(i) + "," + detail::g17(data.source[i].y) + "," + detail::g17(w.values[i]) + "," +
               detail::g17(shown.values[i]) + "\n";
    write_text(dir / "weights.csv", csv);
    write_text(dir / "weights_hist.csv", hist_csv({{to_string(scheme), weight_histogram(shown.values)}}));

    json j{{"scheme", to_string(scheme)},
           {"n_source", data.n_source()},
           {"weight_sum", w.sum()},
           {"weights_path", (dir / "weights.csv").string()},
           {"hist_path", (dir / "weights_hist.csv").string()}};
    if (scheme == Scheme::warmpot) j["alpha"] = alpha, j["beta"] = beta;
    if (data.has_hidden_labels()) {
        const auto outliers = outlier_classes(data);
        double out = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (outliers.contains(static_cast<int>(std::lround(data.source[i].y)))) out += w.values[i];
        j["outlier_share"] = w.sum() > 0.0 ? out / w.sum() : 0.0;
    }
    std::cout << j.dump(2) << '\n';
    return 0;
}

// --- bound-check -----------------------------------------------------------

int run_bound_check_cmd(const Globals& g, int theorem, int trials)
{
    const std::uint64_t seed = g.seed >= 0 ? static_cast<std::uint64_t>(g.seed) : 0;
    const auto s = run_bound_check(theorem, trials, seed);
    const fs::path reports = out_dir(g) / "bound_reports.csv";
    std::string csv =
        "trial,theorem,alpha,beta,gamma,zeta,weighted_source_loss,pw_term,tv_term,lf_term,xi,rhs_total,"
        "lhs_empirical_target_loss,slack,oracle_only\n";
    for (std::size_t t = 0; t < s.reports.size(); ++t) {
        const auto& r = s.reports[t];
        csv += std::to_string(t) + "," + std::to_string(r.theorem);
        for (double v : {r.alpha, r.beta, r.gamma, r.zeta, r.weighted_source_loss, r.pw_term, r.tv_term, r.lf_term,
                         r.xi, r.rhs_total, r.lhs_empirical_target_loss, r.slack()})
            csv += "," + detail::g17(v);
        csv += r.oracle_only ? ",1\n" : ",0\n";
    }
    write_text(reports, csv);
    json j{{"theorem", theorem},
           {"trials", trials},
           {"violations", s.violations},
           {"max_slack", s.max_slack},
           {"min_slack", s.min_slack},
           {"reports_path", reports.string()}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

// --- train -----------------------------------------------------------------

json matrix_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

int run_train(const Globals& g, const std::string& data_path)
{
    const RunConfig c = load_config(g);
    echo(g, c);
    const PdaDataset data = load_or_generate(data_path, c);
    const TrainResult r = train(data, c.train);
    const fs::path dir = out_dir(g);
    write_text(dir / "trace.csv", trace_csv(r.trace));

    json params{{"feature", matrix_json(r.params.feature)},
                {"classifier", matrix_json(r.params.classifier)},
                {"bias", std::vector<double>(r.params.bias.data(), r.params.bias.data() + r.params.bias.size())}};
    write_text(dir / "params.json", params.dump(2) + "\n");

    const WeightVector w =
        normalized_source_weights(final_source_weights(r.params, data, c.train), c.train.beta, data.n_source());
    write_text(dir / "weights_hist.csv", hist_csv({{to_string(Scheme::warmpot), weight_histogram(w.values)}}));

    json j{{"iterations", r.trace.size()},
           {"scheme", to_string(c.train.scheme)},
           {"nonconverged_steps", r.nonconverged_steps},
           {"clamped_steps", r.clamped_steps},
           {"epsilon", c.train.epsilon},
           {"trace_path", (dir / "trace.csv").string()},
           {"params_path", (dir / "params.json").string()},
           {"hist_path", (dir / "weights_hist.csv").string()}};
    if (data.has_hidden_labels()) j["target_accuracy"] = target_accuracy(r.params, data);
    if (r.nonconverged_steps > 0)
        std::cerr << "warning: entropic solver hit max_iter on " << r.nonconverged_steps << " steps\n";
    std::cout << j.dump(2) << '\n';
    return 0;
}

// --- bench / sweep -----------------------------------------------------------

std::vector<std::uint64_t> seed_list(const RunConfig& c)
{
    std::vector<std::uint64_t> s;
    for (int i = 0; i < c.seeds; ++i) s.push_back(c.train.seed + static_cast<std::uint64_t>(i));
    return s;
}

std::vector<double> parse_grid(const std::string& s)
{
    std::vector<double> out;
    for (const auto& cell : detail::split_csv_line(s))
        if (!cell.empty()) out.push_back(detail::csv_number(cell, "--grid"));
    return out;
}

SweepParam sweep_param(const std::string& s)
{
    if (s == "alpha_max") return SweepParam::alpha_max;
    if (s == "beta") return SweepParam::beta;
    throw UsageError("--param must be alpha_max or beta");
}

std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows)
{
    std::string s = "param,value,mean_accuracy,std_accuracy\n";
    for (const auto& r : rows)
        s += param + "," + detail::g17(r.value) + "," + detail::g17(r.mean_accuracy) + "," +
             detail::g17(r.std_accuracy) + "\n";
    return s;
}

int run_sweep(const Globals& g, const std::string& param, const std::string& grid_text)
{
    const RunConfig c = load_config(g);
    echo(g, c);
    const auto grid = parse_grid(grid_text);
    if (grid.empty()) throw UsageError("--grid needs at least one value");
    const auto seeds = seed_list(c);
    const auto rows = sensitivity_sweep(c.task, c.train, sweep_param(param), grid, seeds);
    const fs::path p = out_dir(g) / "sweep.csv";
    write_text(p, sweep_csv(param, rows));
    json j{{"param", param}, {"points", rows.size()}, {"sweep_path", p.string()}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

int run_bench(const Globals& g, const std::string& spec_path, const std::string& sweep_name,
              const std::string& sweep_grid)
{
    Globals gg = g;
    if (!spec_path.empty()) {
        if (!g.config_file.empty()) throw UsageError("give either --spec or --config, not both");
        gg.config_file = spec_path;
    }
    const RunConfig c = load_config(gg);
    echo(g, c);
    const auto seeds = seed_list(c);
    const BenchResult r = compare_schemes(c.task, c.train, c.schemes, seeds);
    const fs::path dir = out_dir(g);

    std::string csv = "scheme,seed,accuracy,outlier_weight_share,outlier_sample_share\n";
    std::vector<std::pair<std::string, std::vector<std::size_t>>> hists;
    json summary = json::array();
    bool failed = false;
    for (const auto& row : r.rows) {
        for (std::size_t k = 0; k < row.seeds.size(); ++k)
            csv += to_string(row.scheme) + "," + std::to_string(row.seeds[k]) + "," +
                   (std::isnan(row.accuracies[k]) ? std::string("FAILED") : detail::g17(row.accuracies[k])) + "," +
                   (std::isnan(row.outlier_shares[k]) ? std::string("") : detail::g17(row.outlier_shares[k])) +
                   "," + detail::g17(r.outlier_sample_share) + "\n";
        if (!row.histogram.empty()) hists.emplace_back(to_string(row.scheme), row.histogram);
        for (const auto& f : row.failures) std::cerr << to_string(row.scheme) << ": " << f << '\n';
        failed = failed || !row.failures.empty();
        summary.push_back({{"scheme", to_string(row.scheme)},
                           {"mean_accuracy", num(row.mean_accuracy)},
                           {"std_accuracy", num(row.std_accuracy)},
                           {"failures", row.failures.size()}});
    }
    write_text(dir / "results.csv", csv);
    write_text(dir / "weights_hist.csv", hist_csv(hists));

    std::vector<SweepRow> sweep;
    if (!sweep_grid.empty()) sweep = sensitivity_sweep(c.task, c.train, sweep_param(sweep_name), parse_grid(sweep_grid), seeds);
    write_text(dir / "sweep.csv", sweep_csv(sweep_name, sweep));

    json j{{"schemes", summary},
           {"seeds", seeds.size()},
           {"outlier_sample_share", r.outlier_sample_share},
           {"results_path", (dir / "results.csv").string()},
           {"hist_path", (dir / "weights_hist.csv").string()},
           {"sweep_path", (dir / "sweep.csv").string()}};
    std::cout << j.dump(2) << '\n';
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Partial-OT weighting for partial domain adaptation"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--config", g.config_file, "key = value configuration file");
    app.add_option("--set", g.sets, "Override a configuration key (key=value), repeatable");
    app.add_option("--seed", g.seed, "Random seed")->check(CLI::NonNegativeNumber);

    std::string a_path, b_path, c_path, method = "exact";
    double alpha = 0.0, eps = 0.0;
    int max_iter = 0;
    auto* solve = app.add_subcommand("solve", "Solve one partial OT instance");
    solve->add_option("--a", a_path, "Source masses (CSV)")->required()->check(CLI::ExistingFile);
    solve->add_option("--b", b_path, "Target masses (CSV)")->required()->check(CLI::ExistingFile);
    solve->add_option("--cost", c_path, "Cost matrix (CSV)")->required()->check(CLI::ExistingFile);
    solve->add_option("--alpha", alpha, "Transported mass")->required();
    solve->add_option("--method", method)->check(CLI::IsMember({"exact", "entropic"}))->capture_default_str();
    solve->add_option("--eps", eps, "Entropic regularisation (default 7.0)");
    solve->add_option("--max-iter", max_iter, "Entropic iteration cap (default 5000)");

    std::string data_path, scheme_name;
    double w_alpha = 0.0;
    auto* weights = app.add_subcommand("weights", "Source weights for a dataset");
    weights->add_option("--data", data_path, "Dataset CSV (default: generated task)");
    weights->add_option("--scheme", scheme_name)->check(CLI::IsMember({"warmpot", "uniform", "ba3us", "arpm"}));
    weights->add_option("--alpha", w_alpha, "Transported mass (default alpha_max)");

    int theorem = 1, trials = 100;
    auto* bound = app.add_subcommand("bound-check", "Randomised check of the target-loss bounds");
    bound->add_option("--theorem", theorem)->check(CLI::IsMember({1, 2}))->capture_default_str();
    bound->add_option("--trials", trials)->check(CLI::PositiveNumber)->capture_default_str();

    std::string train_data;
    auto* trainc = app.add_subcommand("train", "Train on a dataset");
    trainc->add_option("--data", train_data, "Dataset CSV (default: generated task)");

    std::string spec_path, sweep_name = "beta", sweep_grid, bench_schemes;
    int bench_seeds = 0;
    auto* bench = app.add_subcommand("bench", "Compare weighting schemes on the synthetic task");
    bench->add_option("--spec", spec_path, "key = value task/training spec");
    bench->add_option("--schemes", bench_schemes, "Comma-separated schemes");
    bench->add_option("--seeds", bench_seeds, "Number of seeds")->check(CLI::PositiveNumber);
    bench->add_option("--sweep-param", sweep_name)->check(CLI::IsMember({"alpha_max", "beta"}));
    bench->add_option("--sweep-grid", sweep_grid, "Comma-separated values in (0, 1]");

    std::string param = "beta", grid;
    int sweep_seeds = 0;
    auto* sweep = app.add_subcommand("sweep", "Sensitivity sweep over alpha_max or beta");
    sweep->add_option("--param", param)->check(CLI::IsMember({"alpha_max", "beta"}))->capture_default_str();
    sweep->add_option("--grid", grid, "Comma-separated values in (0, 1]")->required();
    sweep->add_option("--seeds", sweep_seeds, "Number of seeds")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*solve) return run_solve(g, a_path, b_path, c_path, alpha, method, eps, max_iter);
        if (*weights) return run_weights(g, data_path, scheme_name, w_alpha);
        if (*bound) return run_bound_check_cmd(g, theorem, trials);
        if (*trainc) return run_train(g, train_data);
        if (*bench) {
            if (!bench_schemes.empty()) g.sets.push_back("schemes=" + bench_schemes);
            if (bench_seeds > 0) g.sets.push_back("seeds=" + std::to_string(bench_seeds));
            return run_bench(g, spec_path, sweep_name, sweep_grid);
        }
        if (*sweep) {
            if (sweep_seeds > 0) g.sets.push_back("seeds=" + std::to_string(sweep_seeds));
            return run_sweep(g, param, grid);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
