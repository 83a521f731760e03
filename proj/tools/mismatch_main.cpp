// Command-line front end: worst-case rate and exponent sweeps over
// uncertainty balls, Gaussian closed forms, and worst-case noise densities,
// emitted as CSV with a human summary when writing to a file.
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure (partial
// CSV still written, failed rows carry an error column).

#include <atomic>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "mismatch/mismatch.hpp"

namespace {

using namespace mismatch;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// "a,b,c" | "lin:lo:hi:n" | "log:lo:hi:n"; values must be nonnegative and
// strictly increasing.
Vec parse_grid(const std::string& spec) {
    Vec out;
    if (spec.rfind("lin:", 0) == 0 || spec.rfind("log:", 0) == 0) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ':')) parts.push_back(tok);
        if (parts.size() != 4) throw ConfigError("grid spec needs lo:hi:n after '" + parts[0] + ":'");
        double lo = parse_number(parts[1]), hi = parse_number(parts[2]);
        int n = int(parse_number(parts[3]));
        if (n < 2) throw ConfigError("grid needs at least 2 points");
        for (int i = 0; i < n; ++i) {
            double t = double(i) / (n - 1);
            if (parts[0] == "lin")
                out.push_back(lo + t * (hi - lo));
            else
                out.push_back(lo * std::pow(hi / lo, t));
        }
    } else {
        std::stringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(parse_number(tok));
    }
    if (out.empty()) throw ConfigError("empty grid");
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] >= 0.0)) throw ConfigError("grid values must be nonnegative");
        if (i && !(out[i] > out[i - 1])) throw ConfigError("grid values must be strictly increasing");
    }
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

struct DmcInstance {
    InputDistribution q;
    DiscreteChannel metric;
};

DmcInstance ternary_rate_instance() {
    return {InputDistribution({0.3, 0.3, 0.4}),
            DiscreteChannel(Matrix::from_rows({{0.85, 0.05, 0.10},
                                               {0.15, 0.825, 0.025},
                                               {0.025, 0.10, 0.875}}))};
}

DmcInstance ternary_exponent_instance() {
    return {InputDistribution({0.3, 0.3, 0.4}),
            DiscreteChannel(Matrix::from_rows({{0.85, 0.05, 0.10},
                                               {0.025, 0.945, 0.03},
                                               {0.025, 0.10, 0.875}}))};
}

DmcInstance load_instance(const std::string& name, const std::string& q_file,
                          const std::string& metric_file) {
    if (name == "ternary-rate") return ternary_rate_instance();
    if (name == "ternary-exponent") return ternary_exponent_instance();
    if (name == "files") {
        if (q_file.empty() || metric_file.empty())
            throw ConfigError("--instance files needs --q-file and --metric-file");
        return {InputDistribution(load_vector_csv(q_file)),
                DiscreteChannel(load_matrix_csv(metric_file))};
    }
    throw ConfigError("unknown instance '" + name + "' (ternary-rate, ternary-exponent, files)");
}

// Fills `rows[i]` for each task index drawn from a shared counter.
template <typename Work>
void run_pool(std::size_t n_tasks, unsigned jobs, Work&& work) {
    if (jobs == 0) jobs = 1;
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n_tasks) return;
            work(i);
        }
    };
    if (jobs == 1 || n_tasks <= 1) {
        drain();
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(jobs, n_tasks); ++t) pool.emplace_back(drain);
    for (std::thread& t : pool) t.join();
}

struct CsvDoc {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Failed rows are recognized by a nonempty trailing error field.
int emit(const CsvDoc& doc, const std::string& out_path, const std::string& what) {
    std::size_t errors = 0;
    if (!doc.header.empty() && doc.header.back() == "error")
        for (const auto& r : doc.rows)
            if (!r.empty() && !r.back().empty()) ++errors;
    std::ostringstream csv;
    csv << csv_join(doc.header) << '\n';
    for (const auto& r : doc.rows) csv << csv_join(r) << '\n';
    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream f(out_path);
        if (!f) throw ConfigError("cannot write '" + out_path + "'");
        f << csv.str();
        std::cout << what << ": " << doc.rows.size() << " rows -> " << out_path;
        if (errors) std::cout << " (" << errors << " failed rows)";
        std::cout << '\n';
    }
    return errors ? kExitSolver : kExitOk;
}

std::string fmt(double v) { return csv_number(v); }

// ------------------------------------------------------------------ rates

struct RatesConfig {
    std::string instance = "ternary-rate";
    std::string q_file, metric_file;
    std::string r_grid = "0.001,0.002,0.005,0.01,0.02,0.05";
    std::string solvers = "chi2,exact-kl";
    std::string ensembles = "iid,cc";
    bool worst_mi = false;
    std::string out;
    unsigned jobs = std::thread::hardware_concurrency();
};

int cmd_rates(const RatesConfig& cfg) {
    DmcInstance inst = load_instance(cfg.instance, cfg.q_file, cfg.metric_file);
    Vec grid = parse_grid(cfg.r_grid);
    const double i_mi = matched_mi(inst.q, inst.metric);

    struct Task {
        double r;
        std::string method;
        Ensemble ens;
    };
    std::vector<Task> tasks;
    for (double r : grid) {
        for (const std::string& m : split_list(cfg.solvers)) {
            if (m == "bounds") {
                tasks.push_back({r, "lower-bound", Ensemble::iid});
                continue;
            }
            if (m != "chi2" && m != "exact-kl")
                throw ConfigError("unknown solver '" + m + "' (chi2, exact-kl, bounds)");
            for (const std::string& e : split_list(cfg.ensembles)) {
                if (e == "iid")
                    tasks.push_back({r, m, Ensemble::iid});
                else if (e == "cc" || e == "cost")
                    tasks.push_back({r, m, Ensemble::constant_composition});
                else
                    throw ConfigError("unknown ensemble '" + e + "' (iid, cc)");
            }
        }
    }

    CsvDoc doc;
    doc.header = {"r", "method", "ensemble", "value", "s_star", "feasible",
                  "feasibility_radius", "attained_distance", "I_MI"};
    if (cfg.worst_mi) doc.header.push_back("worst_MI");
    doc.header.push_back("error");
    doc.rows.resize(tasks.size());

    run_pool(tasks.size(), cfg.jobs, [&](std::size_t i) {
        const Task& t = tasks[i];
        std::vector<std::string> row = {fmt(t.r), t.method, to_string(t.ens)};
        try {
            if (t.method == "lower-bound") {
                row[2] = "iid";
                row.push_back(fmt(lower_bound_rate(inst.q, inst.metric, t.r)));
                row.push_back(fmt(1.0));
                row.insert(row.end(), {"", "", "", fmt(i_mi)});
                if (cfg.worst_mi) row.push_back("");
                row.push_back("");
            } else {
                BallKind kind = t.method == "chi2" ? BallKind::chi_squared
                                                   : BallKind::relative_entropy;
                BallSpec ball(inst.metric, t.r, kind);
                WorstCaseResult res = t.method == "chi2"
                                          ? worst_rate_chi2(inst.q, ball, t.ens)
                                          : worst_rate_exact_kl(inst.q, ball, t.ens);
                row.push_back(fmt(res.value));
                row.push_back(fmt(res.params.s));
                row.push_back(res.feasible ? "1" : "0");
                row.push_back(fmt(res.feasibility_radius));
                row.push_back(fmt(res.attained_distance));
                row.push_back(fmt(i_mi));
                if (cfg.worst_mi)
                    row.push_back(res.feasible
                                      ? fmt(matched_mi(inst.q, DiscreteChannel(res.worst_channel)))
                                      : "");
                row.push_back("");
            }
        } catch (const std::exception& ex) {
            row.resize(3);
            row.insert(row.end(), doc.header.size() - 4, "");
            row.push_back(ex.what());
        }
        doc.rows[i] = std::move(row);
    });
    return emit(doc, cfg.out, "rates sweep");
}

// -------------------------------------------------------------- exponents

struct ExponentsConfig {
    std::string instance = "ternary-exponent";
    std::string q_file, metric_file;
    std::string r_grid = "0.0,0.002,0.005,0.01,0.02";
    std::string solvers = "chi2,exact-kl";
    std::string ensembles = "iid,cost";
    double rho = 0.7;
    std::optional<double> rate;
    std::string out;
    unsigned jobs = std::thread::hardware_concurrency();
};

int cmd_exponents(const ExponentsConfig& cfg) {
    DmcInstance inst = load_instance(cfg.instance, cfg.q_file, cfg.metric_file);
    Vec grid = parse_grid(cfg.r_grid);
    if (!(cfg.rho >= 0.0 && cfg.rho <= 1.0)) throw ConfigError("--rho must lie in [0,1]");

    struct Task {
        double r;
        std::string method;
        Ensemble ens;
    };
    std::vector<Task> tasks;
    for (double r : grid)
        for (const std::string& m : split_list(cfg.solvers)) {
            if (m != "chi2" && m != "exact-kl")
                throw ConfigError("unknown solver '" + m + "' (chi2, exact-kl)");
            for (const std::string& e : split_list(cfg.ensembles)) {
                if (e == "iid")
                    tasks.push_back({r, m, Ensemble::iid});
                else if (e == "cost" || e == "cc")
                    tasks.push_back({r, m, Ensemble::cost_constrained});
                else
                    throw ConfigError("unknown ensemble '" + e + "' (iid, cost)");
            }
        }

    CsvDoc doc;
    doc.header = {"r", "method", "ensemble", "rho", "E0"};
    if (cfg.rate) doc.header.insert(doc.header.end(), {"R", "exponent", "rho_star"});
    doc.header.push_back("error");
    doc.rows.resize(tasks.size());

    run_pool(tasks.size(), cfg.jobs, [&](std::size_t i) {
        const Task& t = tasks[i];
        std::vector<std::string> row = {fmt(t.r), t.method, to_string(t.ens), fmt(cfg.rho)};
        try {
            WorstCaseSolver solver = t.method == "chi2" ? WorstCaseSolver::chi2
                                                        : WorstCaseSolver::exact_kl;
            BallKind kind = t.method == "chi2" ? BallKind::chi_squared
                                               : BallKind::relative_entropy;
            BallSpec ball(inst.metric, t.r, kind);
            WorstCaseResult res = solver == WorstCaseSolver::chi2
                                      ? worst_e0_chi2(inst.q, ball, cfg.rho, t.ens)
                                      : worst_e0_exact_kl(inst.q, ball, cfg.rho, t.ens);
            row.push_back(fmt(res.value));
            if (cfg.rate) {
                ExponentAssembly ea = worst_exponent(inst.q, ball, *cfg.rate, t.ens, solver);
                row.push_back(fmt(*cfg.rate));
                row.push_back(fmt(ea.value));
                row.push_back(fmt(ea.rho_star));
            }
            row.push_back("");
        } catch (const std::exception& ex) {
            row.resize(4);
            row.insert(row.end(), doc.header.size() - 5, "");
            row.push_back(ex.what());
        }
        doc.rows[i] = std::move(row);
    });
    return emit(doc, cfg.out, "exponent sweep");
}

// --------------------------------------------------------------- gaussian

struct GaussianConfig {
    double gamma = 1.0;
    double sigma2 = 1.0;
    std::string r_grid = "0.0,0.001,0.002,0.005,0.01,0.02,0.05";
    bool exact_additive = false;
    std::string out;
    unsigned jobs = std::thread::hardware_concurrency();
};

int cmd_gaussian(const GaussianConfig& cfg) {
    GaussianSetup gs(cfg.gamma * cfg.sigma2, cfg.sigma2);
    Vec grid = parse_grid(cfg.r_grid);

    CsvDoc doc;
    doc.header = {"r", "I_GMI_worst", "I_GMI_approx", "I_cost", "I_Gauss_additive"};
    if (cfg.exact_additive) doc.header.push_back("I_additive_exact");
    doc.header.push_back("error");
    doc.rows.resize(grid.size());

    run_pool(grid.size(), cfg.jobs, [&](std::size_t i) {
        const double r = grid[i];
        std::vector<std::string> row = {fmt(r)};
        try {
            row.push_back(fmt(gmi_worst_gaussian(gs, r).value));
            row.push_back(fmt(gmi_worst_gaussian_approx(gs, r)));
            row.push_back(fmt(cost_worst_gaussian(gs, r).value));
            row.push_back(fmt(gauss_additive_worst(gs, r)));
            if (cfg.exact_additive) {
                NoiseDensity nd = worst_noise_kl(gs, r);
                row.push_back(fmt(0.5 * std::log1p(gs.power / nd.second_moment)));
            }
            row.push_back("");
        } catch (const std::exception& ex) {
            row.resize(1);
            row.insert(row.end(), doc.header.size() - 2, "");
            row.push_back(ex.what());
        }
        doc.rows[i] = std::move(row);
    });
    return emit(doc, cfg.out, "gaussian sweep");
}

// ------------------------------------------------------------ worst-noise

struct WorstNoiseConfig {
    double sigma2 = 1.0;
    double power = 1.0;
    double r = 0.05;
    std::string z_grid = "lin:-5:5:201";
    std::string out;
};

Vec parse_z_grid(const std::string& spec) {
    // same syntax as the r grid but allows negative values
    Vec out;
    if (spec.rfind("lin:", 0) == 0 || spec.rfind("log:", 0) == 0) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ':')) parts.push_back(tok);
        if (parts.size() != 4) throw ConfigError("grid spec needs lo:hi:n");
        double lo = parse_number(parts[1]), hi = parse_number(parts[2]);
        int n = int(parse_number(parts[3]));
        if (n < 2) throw ConfigError("grid needs at least 2 points");
        for (int i = 0; i < n; ++i) {
            double t = double(i) / (n - 1);
            out.push_back(parts[0] == "lin" ? lo + t * (hi - lo)
                                            : lo * std::pow(hi / lo, t));
        }
    } else {
        for (const std::string& tok : split_list(spec)) out.push_back(parse_number(tok));
    }
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i] > out[i - 1])) throw ConfigError("z grid must be strictly increasing");
    if (out.empty()) throw ConfigError("empty z grid");
    return out;
}

int cmd_worst_noise(const WorstNoiseConfig& cfg) {
    GaussianSetup gs(cfg.power, cfg.sigma2);
    Vec zs = parse_z_grid(cfg.z_grid);

    CsvDoc doc;
    doc.header = {"row_type", "z", "kl_density", "chi2_density", "z0", "lambda",
                  "rho", "kl_second_moment", "chi2_second_moment"};
    try {
        NoiseDensity kd = worst_noise_kl(gs, cfg.r);
        NoiseDensity cd = worst_noise_chi2(gs, cfg.r);
        doc.rows.push_back({"summary", "", "", "", fmt(kd.z0), fmt(kd.lambda), fmt(kd.rho),
                            fmt(kd.second_moment), fmt(cd.second_moment)});
        for (double z : zs)
            doc.rows.push_back({"sample", fmt(z), fmt(kd.pdf(z)), fmt(cd.pdf(z)),
                                "", "", "", "", ""});
    } catch (const std::exception& ex) {
        doc.header.push_back("error");
        doc.rows.push_back({"summary", "", "", "", "", "", "", "", "", ex.what()});
    }
    return emit(doc, cfg.out, "worst-noise densities");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Worst-case mismatched-decoding rates and error exponents over "
                 "relative-entropy and chi-squared uncertainty balls"};
    app.require_subcommand(1);

    RatesConfig rc;
    CLI::App* rates = app.add_subcommand("rates", "Worst-case GMI/LM rate sweep over ball radii");
    rates->set_config("--config");
    rates->add_option("--instance", rc.instance, "Built-in instance name or 'files'");
    rates->add_option("--q-file", rc.q_file, "Input distribution CSV (with --instance files)");
    rates->add_option("--metric-file", rc.metric_file, "Metric matrix CSV (with --instance files)");
    rates->add_option("--r-grid", rc.r_grid, "Radii: 'a,b,c' | lin:lo:hi:n | log:lo:hi:n");
    rates->add_option("--solver", rc.solvers, "Comma list of chi2, exact-kl, bounds");
    rates->add_option("--ensemble", rc.ensembles, "Comma list of iid, cc");
    rates->add_flag("--worst-mi", rc.worst_mi, "Add the mutual information of each worst channel");
    rates->add_option("--out", rc.out, "CSV output path (default stdout)");
    rates->add_option("--jobs", rc.jobs, "Worker threads");

    ExponentsConfig ec;
    CLI::App* exps = app.add_subcommand("exponents", "Worst-case E0 sweep at fixed rho");
    exps->set_config("--config");
    exps->add_option("--instance", ec.instance, "Built-in instance name or 'files'");
    exps->add_option("--q-file", ec.q_file, "Input distribution CSV (with --instance files)");
    exps->add_option("--metric-file", ec.metric_file, "Metric matrix CSV (with --instance files)");
    exps->add_option("--r-grid", ec.r_grid, "Radii: 'a,b,c' | lin:lo:hi:n | log:lo:hi:n");
    exps->add_option("--solver", ec.solvers, "Comma list of chi2, exact-kl");
    exps->add_option("--ensemble", ec.ensembles, "Comma list of iid, cost");
    exps->add_option("--rho", ec.rho, "Gallager parameter in [0,1]");
    double rate_opt = 0.0;
    CLI::Option* has_rate = exps->add_option("--rate", rate_opt, "Also emit the exponent at this rate");
    exps->add_option("--out", ec.out, "CSV output path (default stdout)");
    exps->add_option("--jobs", ec.jobs, "Worker threads");

    GaussianConfig gc;
    CLI::App* gauss = app.add_subcommand("gaussian", "Gaussian nearest-neighbor closed-form sweep");
    gauss->set_config("--config");
    gauss->add_option("--gamma", gc.gamma, "Estimated SNR P/sigma^2");
    gauss->add_option("--sigma2", gc.sigma2, "Metric noise variance");
    gauss->add_option("--r-grid", gc.r_grid, "Radii: 'a,b,c' | lin:lo:hi:n | log:lo:hi:n");
    gauss->add_flag("--exact-additive", gc.exact_additive,
                    "Add the exact additive optimum from the piecewise extremal");
    gauss->add_option("--out", gc.out, "CSV output path (default stdout)");
    gauss->add_option("--jobs", gc.jobs, "Worker threads");

    WorstNoiseConfig wc;
    CLI::App* noise = app.add_subcommand("worst-noise", "Sample worst-case noise densities");
    noise->set_config("--config");
    noise->add_option("--sigma2", wc.sigma2, "Metric noise variance");
    noise->add_option("--power", wc.power, "Input power (sets the truncation window)");
    noise->add_option("--r", wc.r, "Ball radius");
    noise->add_option("--z-grid", wc.z_grid, "Sample points: 'a,b,c' | lin:lo:hi:n");
    noise->add_option("--out", wc.out, "CSV output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (rates->parsed()) return cmd_rates(rc);
        if (exps->parsed()) {
            if (has_rate->count()) ec.rate = rate_opt;
            return cmd_exponents(ec);
        }
        if (gauss->parsed()) return cmd_gaussian(gc);
        if (noise->parsed()) return cmd_worst_noise(wc);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
    return kExitConfig;
}
