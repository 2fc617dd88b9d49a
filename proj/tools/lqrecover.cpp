// Command-line surface for the sparse-recovery toolkit: single solves,
// regularity certification, closed-form bound reports, Monte-Carlo sweeps,
// and the worked 2x3 coverage study.

#include <CLI11.hpp>

#include "lqrecover/bounds.hpp"
#include "lqrecover/experiments.hpp"
#include "lqrecover/io.hpp"
#include "lqrecover/regularity.hpp"
#include "lqrecover/solvers.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>

namespace {

using namespace lqrec;

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&tt, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

PenaltyKind parse_penalty_kind(const std::string& name) {
    if (name == "l0") return PenaltyKind::L0;
    if (name == "lq") return PenaltyKind::LQ;
    if (name == "l1") return PenaltyKind::L1;
    if (name == "scad") return PenaltyKind::SCAD;
    if (name == "mcp") return PenaltyKind::MCP;
    throw CLI::ValidationError("--penalty", "unknown penalty: " + name);
}

MethodSpec parse_method(const std::string& name) {
    for (const MethodSpec& m : paper_methods())
        if (m.name == name) return m;
    if (name == "l0") return {"q=0", PenaltyKind::L0, 0.5, false, 1.0};
    if (name == "l1") return {"q=1", PenaltyKind::L1, 0.5, false, 1.0};
    throw CLI::ValidationError("--methods", "unknown method: " + name);
}

json vec_to_json(const Vec& v) {
    std::vector<double> data(v.data(), v.data() + v.size());
    return json(data);
}

int cmd_solve(const std::string& design, const std::string& observation,
              const std::string& penalty, double q, const std::string& lambda_str,
              double epsilon, int max_iters, double tol, std::uint64_t seed, double sigma,
              double a, double theta, double b, double r, const std::string& output) {
    const Mat X = read_matrix_file(design);
    const Vec y = read_vector_file(observation);
    if (X.rows() != y.size()) {
        std::cerr << "error: design has " << X.rows() << " rows but observation has "
                  << y.size() << " entries\n";
        return 1;
    }

    SolverOptions opts;
    opts.max_iters = max_iters;
    opts.tol = tol;
    opts.seed = seed;

    json out;
    SolveResult sr;
    if (epsilon > 0.0) {
        sr = irl1_constrained_solve(X, y, epsilon, q > 0.0 ? q : 1.0, opts);
        out["mode"] = "constrained";
        out["epsilon"] = epsilon;
    } else {
        PenaltySpec pen;
        pen.kind = parse_penalty_kind(penalty);
        pen.q = q;
        if (lambda_str == "auto") {
            TuningParams tp;
            tp.sigma = sigma;
            tp.m = X.rows();
            tp.n = X.cols();
            tp.a = a;
            tp.theta = theta;
            tp.b = b;
            tp.r = r;
            tp.q = pen.kind == PenaltyKind::LQ ? q : 1.0;
            pen.lambda = lambda_default(tp);
        } else {
            pen.lambda = std::stod(lambda_str);
        }
        opts.accelerate = pen.kind == PenaltyKind::L1;
        sr = prox_gradient_solve(X, y, pen, opts);
        out["mode"] = "regularized";
        out["lambda"] = pen.lambda;
    }

    out["beta_hat"] = vec_to_json(sr.beta_hat);
    const std::size_t tail = std::min<std::size_t>(sr.objective_trace.size(), 20);
    out["objective_trace_tail"] = std::vector<double>(
        sr.objective_trace.end() - static_cast<std::ptrdiff_t>(tail), sr.objective_trace.end());
    out["iterations"] = sr.iterations;
    out["converged"] = sr.converged;
    out["stationarity_residual"] = sr.stationarity_residual;

    if (!output.empty()) {
        std::ofstream f(output);
        f << out.dump(2) << "\n";
    } else {
        std::cout << out.dump(2) << "\n";
    }
    return sr.converged ? 0 : 2;
}

int cmd_certify(const std::string& design, double q, Index s, Index t, double a, int starts,
                std::uint64_t seed, const std::string& output) {
    const Mat X = read_matrix_file(design);
    RecParams rec{q, s, t, a};
    SearchConfig sc;
    sc.num_starts = starts;
    sc.seed = seed;
    const RecEstimate est = rec_modulus_estimate(X, rec, sc);

    json out;
    out["q"] = q;
    out["s"] = s;
    out["t"] = t;
    out["a"] = a;
    out["modulus_upper"] = est.modulus_upper;
    out["certified"] = to_string(est.certified);
    if (est.analytic_available) {
        out["analytic_lower"] = est.analytic_lower;
        out["analytic_upper"] = est.analytic_upper;
    } else {
        out["analytic_bounds"] = "unavailable (combinatorial budget exceeded)";
    }
    if (est.witness) out["witness"] = vec_to_json(*est.witness);
    out["subset_budget"] = sc.subset_budget;

    try {
        const ConditionReport rep = check_sufficient_conditions(X, rec, sc.subset_budget);
        json conds = json::array();
        for (const auto& e : rep.entries) {
            json c;
            c["name"] = e.name;
            c["applicable"] = e.applicable;
            c["holds"] = e.holds;
            c["lhs"] = e.lhs;
            c["rhs"] = e.rhs;
            conds.push_back(c);
        }
        out["sufficient_conditions"] = conds;
        out["any_condition_holds"] = rep.any_holds;
    } catch (const BudgetError& ex) {
        out["sufficient_conditions"] = std::string("unavailable: ") + ex.what();
    }

    if (!output.empty()) {
        std::ofstream f(output);
        f << out.dump(2) << "\n";
    } else {
        std::cout << out.dump(2) << "\n";
    }
    return 0;
}

int cmd_bounds(double q, double a, double sigma, Index m, Index n, double theta, double b,
               double r, Index s, Index t, double phi, double phi_cov, double zeta,
               const UniversalConstants& uc, const std::string& output) {
    TuningParams tp{sigma, m, n, a, theta, b, r, q};
    const double lambda = lambda_default(tp);
    json out;
    out["epsilon_default"] = epsilon_default(sigma, m);
    out["epsilon_experiment"] = epsilon_experiment(sigma, m);
    out["lambda"] = lambda;
    out["rho"] = rho_default(tp, lambda);
    out["note"] = "bounds below hold up to the configured universal constants";
    if (phi > 0.0) {
        out["theorem_cp_l2"] = theorem1_bound(phi, q, s, t, epsilon_default(sigma, m));
        const RpBounds rp = theorem2_bounds(phi, m, q, s, t, a, lambda);
        out["theorem_rp_prediction"] = rp.prediction;
        out["theorem_rp_oracle"] = rp.oracle;
        out["theorem_rp_l2"] = rp.l2;
    }
    if (phi_cov > 0.0) {
        const RandomDesignBounds rd =
            theorem34_bounds(phi_cov, m, q, s, t, a, lambda, epsilon_default(sigma, m));
        out["random_cp_l2"] = rd.cp_l2;
        out["random_rp_prediction"] = rd.rp.prediction;
        out["random_rp_oracle"] = rd.rp.oracle;
        out["random_rp_l2"] = rd.rp.l2;
        out["sample_size_thresholds"] =
            sample_size_thresholds(q, s, t, a, phi_cov, zeta, n, theta, uc);
    }
    out["probability_floors"] = probability_floors(m, n, b, uc, theta);

    if (!output.empty()) {
        std::ofstream f(output);
        f << out.dump(2) << "\n";
    } else {
        std::cout << out.dump(2) << "\n";
    }
    return 0;
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["n"] = cfg.n;
    j["s"] = cfg.s;
    j["sample_sizes"] = cfg.sample_sizes;
    j["sigma"] = cfg.sigma;
    j["num_trials"] = cfg.num_trials;
    std::vector<std::string> names;
    for (const auto& m : cfg.methods) names.push_back(m.name);
    j["methods"] = names;
    j["cv_folds"] = cfg.cv_folds;
    j["lambda_grid"] = cfg.lambda_grid;
    j["support_tol"] = cfg.support_tol;
    j["master_seed"] = cfg.master_seed;
    return j;
}

int run_sweep_command(ExperimentConfig cfg, const std::string& out_dir, bool tables_layout) {
    std::filesystem::create_directories(out_dir);
    RunManifest manifest;
    manifest.config = config_to_json(cfg);
    manifest.master_seed = cfg.master_seed;
    manifest.started_at = timestamp_now();

    const SweepResult result = run_sweep(cfg);

    const std::string trials_path = out_dir + "/trials.csv";
    const std::string agg_path = out_dir + "/aggregate.csv";
    {
        std::ofstream f(trials_path);
        f << trial_csv(result.trials);
    }
    {
        std::ofstream f(agg_path);
        f << aggregate_csv(result.aggregate);
    }
    manifest.output_files = {trials_path, agg_path};

    if (tables_layout) {
        // one table per metric: methods as rows, sample sizes as columns
        for (const char* metric : {"sensitivity", "specificity"}) {
            const std::string path = out_dir + "/" + metric + ".csv";
            std::ofstream f(path);
            f << "method";
            for (Index m : cfg.sample_sizes) f << "," << m;
            f << "\n";
            for (const auto& method : cfg.methods) {
                f << method.name;
                for (Index m : cfg.sample_sizes) {
                    for (const auto& row : result.aggregate) {
                        if (row.method == method.name && row.m == m) {
                            f << ","
                              << format_g17(std::string(metric) == "sensitivity" ? row.sens_mean
                                                                                 : row.spec_mean);
                            break;
                        }
                    }
                }
                f << "\n";
            }
            manifest.output_files.push_back(path);
        }
    }

    manifest.finished_at = timestamp_now();
    write_manifest(out_dir + "/manifest.json", manifest);

    std::cout << "wrote " << agg_path << " (" << result.aggregate.size() << " rows), max trace increase "
              << format_g17(result.max_trace_increase) << "\n";
    int failures = 0;
    for (const auto& t : result.trials)
        if (!t.error.empty()) ++failures;
    if (failures > 0) std::cerr << "warning: " << failures << " trial(s) failed\n";
    return 0;
}

int cmd_example1(int draws, int lambdas, std::uint64_t seed, bool noise_as_variance, int jobs,
                 const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    RunManifest manifest;
    manifest.master_seed = seed;
    manifest.config = {{"draws", draws},
                       {"lambdas", lambdas},
                       {"noise_as_variance", noise_as_variance}};
    manifest.started_at = timestamp_now();

    const Example1Report rep = verify_example1(lambdas, draws, seed, noise_as_variance, jobs);
    const std::string path = out_dir + "/coverage.csv";
    {
        std::ofstream f(path);
        f << example1_csv(rep);
    }
    manifest.output_files = {path};
    manifest.finished_at = timestamp_now();
    write_manifest(out_dir + "/manifest.json", manifest);

    std::cout << "phi_{1/2}(1,1,1) = " << format_g17(rep.phi_half) << " ["
              << to_string(rep.phi_half_cert) << "], q=1 certification: "
              << to_string(rep.phi_one_cert) << " (l1 bound NOT-APPLICABLE)\n"
              << "noise sigma = " << format_g17(rep.sigma) << ", wrote " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse linear-regression recovery toolkit"};
    app.require_subcommand(1);

    // ---- solve ----
    auto* solve = app.add_subcommand("solve", "solve a single penalized or constrained problem");
    std::string design, observation, penalty = "l1", lambda_str = "0.1", output;
    double q = 0.5, epsilon = 0.0, tol = 1e-8;
    double sigma = 0.01, a = 3.0, theta = 0.0, b = 0.0, r = 1.0;
    int max_iters = 5000;
    std::uint64_t seed = 0;
    solve->add_option("--design", design, "design matrix file")->required();
    solve->add_option("--observation", observation, "observation vector file")->required();
    solve->add_option("--penalty", penalty, "l0|lq|l1|scad|mcp");
    solve->add_option("--q", q, "exponent for lq");
    solve->add_option("--lambda", lambda_str, "penalty weight, or 'auto'");
    solve->add_option("--epsilon", epsilon, "constrained mode: residual ball radius");
    solve->add_option("--max-iters", max_iters);
    solve->add_option("--tol", tol);
    solve->add_option("--seed", seed);
    solve->add_option("--sigma", sigma, "noise level for --lambda auto");
    solve->add_option("--a", a);
    solve->add_option("--theta", theta);
    solve->add_option("--b", b);
    solve->add_option("--r", r);
    solve->add_option("--output", output, "write the result JSON here instead of stdout");

    // ---- certify ----
    auto* certify = app.add_subcommand("certify", "estimate and certify the restricted-eigenvalue modulus");
    std::string c_design, c_output;
    double c_q = 0.5, c_a = 1.0;
    Index c_s = 1, c_t = 1;
    int c_starts = 200;
    std::uint64_t c_seed = 0;
    certify->add_option("--design", c_design)->required();
    certify->add_option("--q", c_q);
    certify->add_option("--s", c_s);
    certify->add_option("--t", c_t);
    certify->add_option("--a", c_a);
    certify->add_option("--starts", c_starts);
    certify->add_option("--seed", c_seed);
    certify->add_option("--output", c_output);

    // ---- bounds ----
    auto* bounds = app.add_subcommand("bounds", "print the closed-form tuning and bound report");
    double b_q = 1.0, b_a = 3.0, b_sigma = 0.01, b_theta = 0.0, b_b = 0.0, b_r = 1.0;
    double b_phi = 0.0, b_phi_cov = 0.0, b_zeta = 1.0;
    Index b_m = 100, b_n = 1024, b_s = 1, b_t = 1;
    UniversalConstants uc;
    std::string b_output;
    bounds->add_option("--q", b_q);
    bounds->add_option("--a", b_a);
    bounds->add_option("--sigma", b_sigma);
    bounds->add_option("--m", b_m);
    bounds->add_option("--n", b_n);
    bounds->add_option("--theta", b_theta);
    bounds->add_option("--b", b_b);
    bounds->add_option("--r", b_r);
    bounds->add_option("--s", b_s);
    bounds->add_option("--t", b_t);
    bounds->add_option("--phi", b_phi, "modulus of the design (enables the deterministic bounds)");
    bounds->add_option("--phi-cov", b_phi_cov, "modulus of the covariance square root");
    bounds->add_option("--zeta", b_zeta, "max diagonal of the covariance");
    bounds->add_option("--c1", uc.c1);
    bounds->add_option("--c2", uc.c2);
    bounds->add_option("--c3", uc.c3);
    bounds->add_option("--c4", uc.c4);
    bounds->add_option("--tau", uc.tau);
    bounds->add_option("--output", b_output);

    // ---- sweep / tables ----
    auto add_sweep_flags = [](CLI::App* cmd, std::string& preset, ExperimentConfig& cfg,
                              std::string& methods, std::string& out_dir, int& jobs) {
        cmd->add_option("--preset", preset, "'paper' selects the published-table setup");
        cmd->add_option("--trials", cfg.num_trials);
        cmd->add_option("--n", cfg.n);
        cmd->add_option("--s", cfg.s);
        cmd->add_option("--sigma", cfg.sigma);
        cmd->add_option("--m-list", cfg.sample_sizes, "sample sizes")->delimiter(',');
        cmd->add_option("--methods", methods, "comma-separated method names");
        cmd->add_option("--folds", cfg.cv_folds);
        cmd->add_option("--support-tol", cfg.support_tol);
        cmd->add_option("--seed", cfg.master_seed);
        cmd->add_option("--jobs", jobs, "worker threads (default: LQRECOVER_JOBS or cores)");
        cmd->add_option("--out-dir", out_dir)->required();
    };

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over methods and sample sizes");
    std::string s_preset, s_methods, s_out;
    int s_jobs = 0;
    ExperimentConfig s_cfg;
    add_sweep_flags(sweep, s_preset, s_cfg, s_methods, s_out, s_jobs);

    auto* tables = app.add_subcommand("tables", "sweep plus sensitivity/specificity table layout");
    std::string t_preset, t_methods, t_out;
    int t_jobs = 0;
    ExperimentConfig t_cfg;
    add_sweep_flags(tables, t_preset, t_cfg, t_methods, t_out, t_jobs);

    // ---- example1 ----
    auto* example1 = app.add_subcommand("example1", "coverage study on the worked 2x3 design");
    int e_draws = 500, e_lambdas = 25, e_jobs = 0;
    std::uint64_t e_seed = 0;
    bool e_variance = false;
    std::string e_out;
    example1->add_option("--draws", e_draws);
    example1->add_option("--lambdas", e_lambdas);
    example1->add_option("--seed", e_seed);
    example1->add_flag("--noise-as-variance", e_variance,
                       "treat the worked example's 0.01 as a variance (sigma = 0.1)");
    example1->add_option("--jobs", e_jobs);
    example1->add_option("--out-dir", e_out)->required();

    CLI11_PARSE(app, argc, argv);

    auto finish_sweep_cfg = [](ExperimentConfig& cfg, const std::string& preset,
                               const std::string& methods, int jobs, CLI::App* cmd) {
        ExperimentConfig base = preset == "paper" ? paper_preset() : ExperimentConfig{};
        // apply preset first, then explicit overrides
        if (preset == "paper") {
            ExperimentConfig merged = base;
            if (cmd->count("--trials")) merged.num_trials = cfg.num_trials;
            if (cmd->count("--n")) merged.n = cfg.n;
            if (cmd->count("--s")) merged.s = cfg.s;
            if (cmd->count("--sigma")) merged.sigma = cfg.sigma;
            if (cmd->count("--m-list")) merged.sample_sizes = cfg.sample_sizes;
            if (cmd->count("--folds")) merged.cv_folds = cfg.cv_folds;
            if (cmd->count("--support-tol")) merged.support_tol = cfg.support_tol;
            if (cmd->count("--seed")) merged.master_seed = cfg.master_seed;
            cfg = merged;
        }
        if (!methods.empty()) {
            cfg.methods.clear();
            std::stringstream ss(methods);
            std::string name;
            while (std::getline(ss, name, ',')) cfg.methods.push_back(parse_method(name));
        }
        if (cfg.methods.empty()) cfg.methods = paper_methods();
        if (cfg.sample_sizes.empty()) cfg.sample_sizes = {sample_size_rule(4.0, cfg.s, cfg.n)};
        if (cfg.lambda_grid.empty()) cfg.lambda_grid = default_lambda_grid();
        cfg.jobs = jobs;
    };

    try {
        if (*solve)
            return cmd_solve(design, observation, penalty, q, lambda_str, epsilon, max_iters, tol,
                             seed, sigma, a, theta, b, r, output);
        if (*certify) return cmd_certify(c_design, c_q, c_s, c_t, c_a, c_starts, c_seed, c_output);
        if (*bounds)
            return cmd_bounds(b_q, b_a, b_sigma, b_m, b_n, b_theta, b_b, b_r, b_s, b_t, b_phi,
                              b_phi_cov, b_zeta, uc, b_output);
        if (*sweep) {
            finish_sweep_cfg(s_cfg, s_preset, s_methods, s_jobs, sweep);
            return run_sweep_command(s_cfg, s_out, false);
        }
        if (*tables) {
            finish_sweep_cfg(t_cfg, t_preset, t_methods, t_jobs, tables);
            return run_sweep_command(t_cfg, t_out, true);
        }
        if (*example1) return cmd_example1(e_draws, e_lambdas, e_seed, e_variance, e_jobs, e_out);
    } catch (const SolverError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
