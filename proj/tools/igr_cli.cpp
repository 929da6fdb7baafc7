// igr: fit relaxations to target pmfs, sweep temperatures, print targets and
// run the gradient checks.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include "igr/experiments.hpp"
#include "igr/gradcheck.hpp"
#include "igr/serialization.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

struct Flags {
    std::string config_path;
    std::optional<std::string> model;
    std::optional<std::string> target;
    std::optional<long> k;
    std::optional<double> rho;
    std::optional<double> tau;
    std::optional<std::vector<double>> tau_grid;
    std::optional<long> steps;
    std::optional<long> batch;
    std::optional<std::uint64_t> seed;
    std::optional<double> lr;
    std::optional<long> recovery_samples;
    std::optional<std::string> recovery;
    std::optional<std::string> out;
    bool timing = false;
    unsigned threads = 0;
};

void add_run_flags(CLI::App* cmd, Flags& f)
{
    cmd->add_option("--config", f.config_path, "JSON configuration file; flags override its values");
    cmd->add_option("--model", f.model, "igr-i, igr-sb, igr-planar or gs");
    cmd->add_option("--target", f.target, "e.g. poisson:50, binomial:12,0.3, negbinomial:50,0.6, custom:0.2,0.8");
    cmd->add_option("--k", f.k, "number of categories for finite models");
    cmd->add_option("--rho", f.rho, "stick-breaking truncation precision (igr-sb)");
    cmd->add_option("--tau", f.tau, "temperature");
    cmd->add_option("--tau-grid", f.tau_grid, "temperature grid for sweep")->delimiter(',');
    cmd->add_option("--steps", f.steps, "optimizer steps");
    cmd->add_option("--batch", f.batch, "samples per step");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--lr", f.lr, "Adam learning rate");
    cmd->add_option("--recovery-samples", f.recovery_samples, "MC draws for discrete recovery");
    cmd->add_option("--recovery", f.recovery, "discrete (argmax of draws) or mean (average draw)");
    cmd->add_option("--out", f.out, "output directory for results.json and pmf.csv");
    cmd->add_flag("--timing", f.timing, "record wall time in results.json (breaks byte-identical output)");
}

igr::RunConfig resolve(const Flags& f)
{
    igr::RunConfig c;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in)
            throw igr::ConfigError("cannot read config file " + f.config_path);
        igr::Json j;
        try {
            in >> j;
        } catch (const igr::Json::exception& e) {
            throw igr::ConfigError("config file " + f.config_path + ": " + e.what());
        }
        igr::merge_config(j, c);
    }
    if (f.model)
        c.model = igr::model_kind_from_string(*f.model);
    if (f.target)
        c.target = igr::TargetSpec::parse(*f.target);
    if (f.k)
        c.k = *f.k;
    if (f.rho)
        c.rho = *f.rho;
    if (f.tau)
        c.tau = *f.tau;
    if (f.tau_grid)
        c.tau_grid = *f.tau_grid;
    if (f.steps)
        c.steps = *f.steps;
    if (f.batch)
        c.batch = *f.batch;
    if (f.seed)
        c.seed = *f.seed;
    if (f.lr)
        c.lr = *f.lr;
    if (f.recovery_samples)
        c.recovery_samples = *f.recovery_samples;
    if (f.recovery)
        c.recovery = igr::recovery_mode_from_string(*f.recovery);
    if (f.out)
        c.out = *f.out;
    if (f.timing)
        c.record_wall_time = true;
    c.validate();
    return c;
}

void summarize(const igr::FitReport& r)
{
    if (r.aborted) {
        std::fprintf(stderr, "run aborted: %s\n", r.diagnostic.c_str());
        return;
    }
    std::printf("model=%s target=%s tau=%g tv=%.6f kl=%.6f l2=%.6f final_loss=%.6g\n",
                std::string(igr::to_string(r.config.model)).c_str(), r.config.target.to_string().c_str(), r.config.tau,
                r.metrics.tv, r.metrics.kl, r.metrics.l2, r.final_loss);
}

int run_fit(const Flags& f)
{
    const igr::RunConfig c = resolve(f);
    const igr::FitReport r = igr::fit(c);
    summarize(r);
    if (!c.out.empty())
        igr::emit(r, c.out);
    return r.aborted ? 2 : 0;
}

int run_sweep(const Flags& f)
{
    const igr::RunConfig c = resolve(f);
    const igr::SweepResult s = igr::sweep(c, f.threads);
    for (const auto& e : s.entries) {
        if (e.report && !e.report->aborted)
            std::printf("tau=%-6g tv=%.6f kl=%.6f final_loss=%.6g\n", e.tau, e.report->metrics.tv,
                        e.report->metrics.kl, e.report->final_loss);
        else
            std::printf("tau=%-6g failed: %s\n", e.tau, e.report ? e.report->diagnostic.c_str() : e.error.c_str());
    }
    if (!c.out.empty())
        igr::emit(s, c.out);
    if (!s.best) {
        std::fprintf(stderr, "sweep: no run completed\n");
        return 2;
    }
    std::printf("best tau=%g\n", s.entries[*s.best].tau);
    return 0;
}

int run_target(const std::string& spec, const std::string& out)
{
    const igr::DiscretePmf pmf = igr::build_target(igr::TargetSpec::parse(spec));
    std::string csv = "category,prob\n";
    for (Eigen::Index i = 0; i < pmf.size(); ++i) {
        char line[64];
        std::snprintf(line, sizeof line, "%ld,%.17g\n", static_cast<long>(i), pmf.probs[i]);
        csv += line;
    }
    if (out.empty()) {
        std::fputs(csv.c_str(), stdout);
        return 0;
    }
    std::ofstream f(out, std::ios::binary);
    f << csv;
    f.close();
    if (!f)
        throw igr::Error("cannot write " + out);
    return 0;
}

int run_check_grad(int points, std::uint64_t seed, double tol)
{
    bool ok = true;
    for (const auto& r : igr::run_registered_checks(points, seed)) {
        const bool pass = r.max_error <= tol;
        ok = ok && pass;
        std::printf("%-4s %-36s max_rel_err=%.3e points=%d\n", pass ? "ok" : "FAIL", r.name.c_str(), r.max_error,
                    r.points);
    }
    return ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Invertible Gaussian reparameterization experiments"};
    app.require_subcommand(1);

    Flags fit_flags;
    Flags sweep_flags;
    auto* fit_cmd = app.add_subcommand("fit", "fit one relaxation at a single temperature");
    add_run_flags(fit_cmd, fit_flags);
    auto* sweep_cmd = app.add_subcommand("sweep", "fit across a temperature grid and keep the best tv");
    add_run_flags(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--threads", sweep_flags.threads, "worker threads (0: all cores)");

    std::string target_spec;
    std::string target_out;
    auto* target_cmd = app.add_subcommand("target", "print a target pmf as CSV");
    target_cmd->add_option("spec", target_spec, "target, e.g. poisson:50")->required();
    target_cmd->add_option("--out", target_out, "write to a file instead of standard output");

    int points = 20;
    std::uint64_t grad_seed = 1;
    double grad_tol = 1e-5;
    auto* grad_cmd = app.add_subcommand("check-grad", "finite-difference check of every registered pullback");
    grad_cmd->add_option("--points", points, "random points per pullback");
    grad_cmd->add_option("--seed", grad_seed, "random seed");
    grad_cmd->add_option("--tol", grad_tol, "maximum relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*fit_cmd)
            return run_fit(fit_flags);
        if (*sweep_cmd)
            return run_sweep(sweep_flags);
        if (*target_cmd)
            return run_target(target_spec, target_out);
        if (*grad_cmd)
            return run_check_grad(points, grad_seed, grad_tol);
    } catch (const igr::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
