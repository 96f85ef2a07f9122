#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "rfm/study.hpp"

namespace {

void error_json(const char* kind, const std::string& detail) {
    nlohmann::json j = {{"error", kind}, {"detail", detail}};
    std::fprintf(stderr, "%s\n", j.dump().c_str());
}

std::vector<double> parse_dt_csv(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = std::min(csv.find(',', pos), csv.size());
        const std::string tok = csv.substr(pos, comma - pos);
        if (tok.empty()) throw rfm::ConfigError("bad_value: dt-list (empty entry)");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw rfm::ConfigError("bad_value: dt-list (not a number: " + tok + ")");
        }
        if (used != tok.size() || !(v > 0.0))
            throw rfm::ConfigError("bad_value: dt-list (entries must be positive numbers)");
        out.push_back(v);
        pos = comma + 1;
        if (comma == csv.size()) break;
    }
    return out;
}

int run_check_tableau(const std::string& name) {
    const rfm::Tableau tab = rfm::tableau_by_name(name);
    double worst = 0.0;
    for (const auto& r : rfm::order_condition_residuals(tab)) {
        std::printf("%s %-28s residual=%.3e\n", name.c_str(), r.name.c_str(), r.residual);
        worst = std::max(worst, r.residual);
    }
    std::printf("%s worst residual %.3e (%s 1e-14)\n", name.c_str(), worst,
                worst <= 1e-14 ? "<=" : ">");
    return worst <= 1e-14 ? 0 : 3;
}

int run_fit_ic(const std::string& problem, int m, int j, int q, std::uint64_t seed, double tau) {
    rfm::ProblemSpec p = rfm::make_problem(problem);
    const int mm = m > 0 ? m : p.defaults.m_per_dim;
    const int jj = j > 0 ? j : p.defaults.j_n;
    const int qq = q > 0 ? q : p.defaults.q_per_dim;
    auto bank = std::make_shared<rfm::FeatureBank>(
        rfm::sample_bank(rfm::decompose(p.domain, std::vector<int>(p.dim, mm)), jj, p.defaults.r_m,
                         rfm::Activation::Tanh, rfm::Pou::PsiA, seed));
    const rfm::FitResult fit = rfm::fit_function(bank, qq, p.initial, tau);
    nlohmann::json out = {{"problem", problem},        {"subdivisions_per_dim", mm},
                          {"features_per_subdomain", jj}, {"collocation_per_dim", qq},
                          {"seed", seed},              {"residual", fit.residual},
                          {"rank", fit.rank},          {"coefficients", fit.fn.coeffs.size()}};
    std::printf("%s\n", out.dump().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"random feature PDE solver (IMEX time stepping)"};
    app.require_subcommand(1);

    std::string config_path, out_dir, dt_csv, problem, tableau_name = "ars443";
    double dt = 0.0, tau = 1e-16;
    long long seed = -1;
    int m = 0, j = 0, q = 0;
    bool allow_partial = false;

    CLI::App* solve = app.add_subcommand("solve", "march one config; write CSVs and a manifest");
    solve->add_option("--config", config_path, "JSON config file (or a previous manifest)")
        ->required();
    solve->add_option("--dt", dt, "override the time step");
    solve->add_option("--seed", seed, "override the feature seed");
    solve->add_option("--out", out_dir, "override the output directory");
    solve->add_flag("--allow-partial-final", allow_partial,
                    "accept a dt that does not divide T; stop at the last whole step");

    CLI::App* conv = app.add_subcommand("converge", "dt sweep against a shared reference");
    conv->add_option("--config", config_path, "JSON config file (or a previous manifest)")
        ->required();
    conv->add_option("--dt-list", dt_csv,
                     "comma-separated dt values (default: the problem's catalog list)");
    conv->add_option("--seed", seed, "override the feature seed");
    conv->add_option("--out", out_dir, "override the output directory");

    CLI::App* chk = app.add_subcommand("check-tableau", "print order-condition residuals");
    chk->add_option("--tableau", tableau_name, "ars443 (default) or imex1");

    CLI::App* fit = app.add_subcommand("fit-ic", "fit an initial condition; report the residual");
    fit->add_option("--problem", problem, "problem name")->required();
    fit->add_option("--subdivisions", m, "cells per dimension (default: catalog)");
    fit->add_option("--features-per-subdomain", j, "features per cell (default: catalog)");
    fit->add_option("--collocation-per-dim", q, "collocation points per dim (default: catalog)");
    fit->add_option("--seed", seed, "feature seed (default 1)");
    fit->add_option("--tau", tau, "singular value cutoff");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion")
            return app.exit(e);
        error_json("validation", e.what());
        return 2;
    }

    try {
        if (*chk) return run_check_tableau(tableau_name);
        if (*fit)
            return run_fit_ic(problem, m, j, q, seed >= 0 ? std::uint64_t(seed) : 1ull, tau);

        rfm::RunConfig cfg = rfm::load_config(config_path);
        if (dt > 0.0) {
            cfg.dt = dt;
            cfg.num_steps = 0;
        }
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (!dt_csv.empty()) cfg.dt_list = parse_dt_csv(dt_csv);

        if (*solve) {
            const rfm::ResolvedRun r = rfm::resolve(cfg);
            const rfm::SolveOutput out = rfm::run_solve(r, allow_partial);
            for (const std::string& f : out.files) std::printf("wrote %s\n", f.c_str());
            const auto& res = out.manifest.at("results");
            std::printf("steps=%d t_final=%.17g rank=%d ic_residual=%.3e\n", out.run.num_steps,
                        out.run.t_final_actual, out.run.operator_rank, out.run.ic_residual);
            if (!res.at("oracle_comparison").is_null())
                std::printf("worst relative l2 vs oracle: %.6e\n",
                            res.at("oracle_comparison").at("worst_relative_l2").get<double>());
            return 0;
        }
        if (*conv) {
            const rfm::ResolvedRun r = rfm::resolve(cfg);
            const rfm::ConvergenceOutput out = rfm::run_convergence(r, r.dt_list);
            std::printf("%-12s %-14s %-10s\n", "dt", "relative_l2", "wall_ms");
            for (const rfm::ErrorEntry& e : out.report.entries)
                std::printf("%-12.6g %-14.6e %-10.1f\n", e.dt, e.relative_l2, e.wall_ms);
            std::printf("fitted slope: %.3f\n", out.report.slope);
            for (const std::string& f : out.files) std::printf("wrote %s\n", f.c_str());
            return 0;
        }
    } catch (const rfm::ConfigError& e) {
        error_json("validation", e.what());
        return 2;
    } catch (const rfm::NumericalError& e) {
        error_json("numerical", e.what());
        return 3;
    } catch (const nlohmann::json::exception& e) {
        error_json("validation", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        error_json("validation", e.what());
        return 2;
    } catch (const std::exception& e) {
        error_json("io", e.what());
        return 4;
    }
    return 0;
}
