#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "rfm/config.hpp"
#include "rfm/metrics.hpp"

namespace rfm {

namespace detail {

/// Doubles in CSV output are printed with %.17g so reading them back yields
/// the identical bit pattern; this is also what makes repeat runs of the same
/// seed byte-identical files.
inline std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void require_stream(const std::ofstream& out, const std::string& path) {
    if (!out) throw std::runtime_error("io: cannot write " + path);
}

} // namespace detail

/// Uniform evaluation grid used for CSV output and convergence errors. In 1D
/// it matches the spectral oracle convention x_j = lo + (hi-lo) j/n (left
/// endpoint included, right excluded, consistent with periodicity); higher
/// dimensions take the tensor product.
inline Eigen::MatrixXd plot_grid(const Domain& dom, int per_dim) {
    const int d = dom.dim();
    Eigen::Index total = 1;
    for (int i = 0; i < d; ++i) total *= per_dim;
    Eigen::MatrixXd pts(total, d);
    for (Eigen::Index r = 0; r < total; ++r) {
        Eigen::Index rem = r;
        for (int i = d - 1; i >= 0; --i) {
            const Eigen::Index j = rem % per_dim;
            rem /= per_dim;
            pts(r, i) = dom.lo[i] + (dom.hi[i] - dom.lo[i]) * static_cast<double>(j) / per_dim;
        }
    }
    return pts;
}

struct ErrorEntry {
    double dt = 0.0;
    double relative_l2 = 0.0;
    double wall_ms = 0.0;
    int num_steps = 0;
    double t_final_actual = 0.0;
};

/// Convergence table, largest dt first, plus the least-squares slope of
/// log(error) against log(dt) over all entries.
struct ErrorReport {
    std::vector<ErrorEntry> entries;
    double slope = 0.0;
};

struct SolveOutput {
    RunResult run;
    nlohmann::json manifest;
    std::vector<std::string> files;
};

struct ConvergenceOutput {
    ErrorReport report;
    nlohmann::json manifest;
    std::vector<std::string> files;
};

namespace detail {

inline nlohmann::json timings_json(const PhaseTimings& t, double io_seconds) {
    return {{"factorize_count", t.factorize_count},
            {"factorize_seconds", t.factorize_seconds},
            {"assemble_seconds", t.assemble_seconds},
            {"ic_fit_seconds", t.ic_fit_seconds},
            {"rhs_seconds", t.rhs_seconds},
            {"solve_seconds", t.solve_seconds},
            {"explicit_seconds", t.explicit_seconds},
            {"update_seconds", t.update_seconds},
            {"total_seconds", t.total_seconds},
            {"io_seconds", io_seconds}};
}

inline nlohmann::json run_summary_json(const RunResult& run) {
    return {{"num_steps", run.num_steps},
            {"t_final_actual", run.t_final_actual},
            {"ic_residual", run.ic_residual},
            {"operator_rank", run.operator_rank},
            {"operator_rows", run.operator_rows},
            {"operator_cols", run.operator_cols}};
}

inline void write_point_rows(std::ofstream& out, double time, const Eigen::MatrixXd& grid,
                             const Eigen::VectorXd& values) {
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        out << g17(time);
        for (Eigen::Index c = 0; c < grid.cols(); ++c) out << ',' << g17(grid(i, c));
        out << ',' << g17(values[i]) << '\n';
    }
}

inline std::string coord_header(int dim) {
    return dim == 1 ? "time,x,value" : "time,x,y,value";
}

} // namespace detail

/// Solve per the resolved config and write snapshots.csv, the reference/
/// predicted/error space-time grids (1D problems, where the spectral oracle
/// applies), and manifest.json into the output directory. `allow_partial`
/// admits a dt that does not divide T; the run then stops at the last whole
/// step (recorded as t_final_actual).
inline SolveOutput run_solve(const ResolvedRun& r, bool allow_partial = false) {
    if (!(r.settings.dt > 0.0))
        throw ConfigError("missing_key: dt (solve needs dt or num_steps)");
    if (!allow_partial && !divides_t_final(r.settings.t_final, r.settings.dt))
        throw ConfigError("bad_value: dt (K*dt != t_final within 1e-12; pass "
                          "--allow-partial-final to march to the last whole step)");

    namespace fs = std::filesystem;
    const fs::path dir(r.effective.output_dir);
    fs::create_directories(dir);

    SolveOutput out;
    auto bank = make_bank(r);
    out.run = run_simulation(r.problem, bank, r.settings);

    const auto t_io = detail::Clock::now();
    const bool oned = r.problem.dim == 1;
    const Eigen::MatrixXd grid =
        oned ? plot_grid(r.problem.domain, r.effective.oracle.modes)
             : plot_grid(r.problem.domain, 64);

    // Snapshot rows: every recorded snapshot state plus the final state.
    std::vector<const State*> states;
    for (const State& s : out.run.snapshots) states.push_back(&s);
    if (states.empty() || states.back()->step != out.run.final_state.step)
        states.push_back(&out.run.final_state);

    const fs::path snap_path = dir / "snapshots.csv";
    {
        std::ofstream fs_out(snap_path);
        detail::require_stream(fs_out, snap_path.string());
        fs_out << detail::coord_header(r.problem.dim) << '\n';
        for (const State* s : states) {
            TrialFunction fn{bank, s->coeffs};
            detail::write_point_rows(fs_out, s->time, grid, fn.evaluate(grid));
        }
    }
    out.files.push_back(snap_path.string());

    nlohmann::json compare = nullptr;
    if (oned) {
        std::vector<double> times;
        for (const State* s : states) times.push_back(s->time);
        const SpectralReference ref = spectral_reference_cached(
            r.problem, times, r.effective.oracle, (dir / "cache").string());
        std::ofstream ref_out(dir / "reference.csv"), pred_out(dir / "predicted.csv"),
            err_out(dir / "error.csv");
        detail::require_stream(ref_out, (dir / "reference.csv").string());
        detail::require_stream(pred_out, (dir / "predicted.csv").string());
        detail::require_stream(err_out, (dir / "error.csv").string());
        ref_out << "time,x,value\n";
        pred_out << "time,x,value\n";
        err_out << "time,x,abs_error\n";
        Eigen::MatrixXd ref_grid(ref.grid.size(), 1);
        ref_grid.col(0) = ref.grid;
        double worst = 0.0;
        for (std::size_t k = 0; k < states.size(); ++k) {
            TrialFunction fn{bank, states[k]->coeffs};
            const Eigen::VectorXd pred = fn.evaluate(ref_grid);
            const Eigen::VectorXd refv = ref.values.row(static_cast<Eigen::Index>(k)).transpose();
            detail::write_point_rows(ref_out, ref.times[k], ref_grid, refv);
            detail::write_point_rows(pred_out, states[k]->time, ref_grid, pred);
            detail::write_point_rows(err_out, states[k]->time, ref_grid,
                                     (pred - refv).cwiseAbs());
            worst = std::max(worst, relative_l2(pred, refv));
        }
        for (const char* f : {"reference.csv", "predicted.csv", "error.csv"})
            out.files.push_back((dir / f).string());
        compare = {{"worst_relative_l2", worst}, {"times", ref.times}};
    }
    const double io_seconds = detail::seconds_since(t_io);

    out.manifest = {{"schema_version", 1},
                    {"kind", "solve"},
                    {"config", config_json(r.effective)},
                    {"results",
                     {{"run", detail::run_summary_json(out.run)},
                      {"oracle_comparison", compare},
                      {"timings", detail::timings_json(out.run.timings, io_seconds)},
                      {"files", out.files}}}};
    const fs::path man_path = dir / "manifest.json";
    {
        std::ofstream man(man_path);
        detail::require_stream(man, man_path.string());
        man << out.manifest.dump(2) << '\n';
    }
    out.files.push_back(man_path.string());
    return out;
}

/// One solve per dt against a shared reference, reusing the same feature
/// bank throughout. 1D problems compare to the (disk-cached) spectral
/// oracle at each run's own realized final time; the 2D problem compares to
/// a self-reference run at dt_ref = min(dt)/8 on the plot grid. Writes
/// convergence.csv and manifest.json.
inline ConvergenceOutput run_convergence(const ResolvedRun& r, std::vector<double> dts) {
    std::sort(dts.begin(), dts.end(), std::greater<>());
    dts.erase(std::unique(dts.begin(), dts.end()), dts.end());
    if (dts.size() < 2)
        throw ConfigError("bad_value: dt_list (need at least 2 distinct positive values)");

    namespace fs = std::filesystem;
    const fs::path dir(r.effective.output_dir);
    fs::create_directories(dir);

    auto bank = make_bank(r);
    const double T = r.settings.t_final;
    const bool oned = r.problem.dim == 1;

    std::vector<double> finals;
    for (double dt : dts) finals.push_back(num_whole_steps(T, dt) * dt);

    SpectralReference ref;
    RunResult self_ref;
    Eigen::MatrixXd grid;
    if (oned) {
        ref = spectral_reference_cached(r.problem, finals, r.effective.oracle,
                                        (dir / "cache").string());
        grid.resize(ref.grid.size(), 1);
        grid.col(0) = ref.grid;
    } else {
        grid = plot_grid(r.problem.domain, 64);
        SolveSettings st = r.settings;
        st.dt = dts.back() / 8.0;
        st.snapshot_times = finals;
        self_ref = run_simulation(r.problem, bank, st);
    }

    ConvergenceOutput out;
    out.report.slope = 0.0;
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < dts.size(); ++i) {
        SolveSettings st = r.settings;
        st.dt = dts[i];
        st.snapshot_times.clear();
        const RunResult run = run_simulation(r.problem, bank, st);
        TrialFunction fn{bank, run.final_state.coeffs};
        const Eigen::VectorXd pred = fn.evaluate(grid);

        Eigen::VectorXd refv;
        if (oned) {
            // Match this run's realized final time among the requested ones.
            std::size_t k = 0;
            for (std::size_t j = 0; j < ref.times.size(); ++j)
                if (std::abs(ref.times[j] - run.t_final_actual) <
                    std::abs(ref.times[k] - run.t_final_actual))
                    k = j;
            refv = ref.values.row(static_cast<Eigen::Index>(k)).transpose();
        } else {
            std::size_t k = 0;
            for (std::size_t j = 0; j < self_ref.snapshots.size(); ++j)
                if (std::abs(self_ref.snapshots[j].time - run.t_final_actual) <
                    std::abs(self_ref.snapshots[k].time - run.t_final_actual))
                    k = j;
            TrialFunction rfn{bank, self_ref.snapshots[k].coeffs};
            refv = rfn.evaluate(grid);
        }

        ErrorEntry e;
        e.dt = dts[i];
        e.relative_l2 = relative_l2(pred, refv);
        e.wall_ms = run.timings.total_seconds * 1e3;
        e.num_steps = run.num_steps;
        e.t_final_actual = run.t_final_actual;
        out.report.entries.push_back(e);
        runs.push_back({{"dt", e.dt},
                        {"relative_l2", e.relative_l2},
                        {"wall_ms", e.wall_ms},
                        {"run", detail::run_summary_json(run)},
                        {"timings", detail::timings_json(run.timings, 0.0)}});
    }

    {
        std::vector<double> xs, ys;
        for (const ErrorEntry& e : out.report.entries) {
            xs.push_back(e.dt);
            ys.push_back(e.relative_l2);
        }
        out.report.slope = estimate_order(xs, ys);
    }

    const fs::path csv_path = dir / "convergence.csv";
    {
        std::ofstream csv(csv_path);
        detail::require_stream(csv, csv_path.string());
        csv << "dt,relative_l2,wall_ms,num_steps,t_final_actual,pair_slope\n";
        for (std::size_t i = 0; i < out.report.entries.size(); ++i) {
            const ErrorEntry& e = out.report.entries[i];
            csv << detail::g17(e.dt) << ',' << detail::g17(e.relative_l2) << ','
                << detail::g17(e.wall_ms) << ',' << e.num_steps << ','
                << detail::g17(e.t_final_actual) << ',';
            if (i > 0) {
                const ErrorEntry& p = out.report.entries[i - 1];
                csv << detail::g17(std::log(p.relative_l2 / e.relative_l2) /
                                   std::log(p.dt / e.dt));
            }
            csv << '\n';
        }
    }
    out.files.push_back(csv_path.string());

    out.manifest = {{"schema_version", 1},
                    {"kind", "converge"},
                    {"config", config_json(r.effective)},
                    {"results", {{"slope", out.report.slope}, {"runs", runs}}}};
    const fs::path man_path = dir / "manifest.json";
    {
        std::ofstream man(man_path);
        detail::require_stream(man, man_path.string());
        man << out.manifest.dump(2) << '\n';
    }
    out.files.push_back(man_path.string());
    return out;
}

} // namespace rfm
