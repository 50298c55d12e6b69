#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "deterministic.hpp"
#include "evaluation.hpp"
#include "fixtures.hpp"
#include "io.hpp"
#include "riccati.hpp"
#include "synthesis.hpp"

namespace lqgame::cli {

using io::json;

enum ExitCode : int {
    kExitPass = 0,
    kExitUsage = 1,
    kExitNotCertified = 2,
    kExitRiccatiFailure = 3,
    kExitVerificationFailed = 4,
};

struct RunOptions {
    SolverConfig config;
    std::size_t n_paths = 10000;
    std::size_t n_perturbations = 10;
    std::uint64_t seed = 0;
    std::optional<Vector> x;          // defaults to the all-ones state
    std::vector<double> lambdas;      // falsifier scalars / regularization sequence, command dependent
    std::filesystem::path out_dir;    // empty: write nothing
    std::string command;
};

inline Vector initial_state(const RunOptions& opt, Eigen::Index n) {
    if (!opt.x)
        return Vector::Ones(n);
    if (opt.x->size() != n)
        throw ContractViolation("--x has " + std::to_string(opt.x->size()) + " entries, the state has " +
                                std::to_string(n));
    return *opt.x;
}

// Embedded in every output so a run can be repeated exactly.
inline json reproducibility_header(const RunOptions& opt) {
    json h = {{"tool", "lqgame"},
              {"version", io::version()},
              {"command", opt.command},
              {"seed", opt.seed},
              {"config", io::to_json(opt.config)},
              {"n_paths", opt.n_paths},
              {"n_perturbations", opt.n_perturbations}};
    if (opt.x)
        h["x"] = io::to_json(*opt.x);
    if (!opt.lambdas.empty())
        h["lambdas"] = opt.lambdas;
    return h;
}

inline std::string header_line(const RunOptions& opt) {
    std::ostringstream s;
    s << "lqgame " << io::version() << " command=" << opt.command << " seed=" << opt.seed
      << " steps=" << opt.config.n_steps << " eps_reg=" << opt.config.eps_reg << " paths=" << opt.n_paths;
    return s.str();
}

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline std::string fmt(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

// ============================================================================
// Pipeline
// ============================================================================

struct PipelineResult {
    int exit_code = kExitPass;
    json report;
    std::string text;
    std::optional<io::SolutionFile> solution;
};

inline void write_outputs(const RunOptions& opt, const std::string& stem, const json& report, const std::string& text,
                          const io::SolutionFile* solution) {
    if (opt.out_dir.empty())
        return;
    io::write_text(opt.out_dir / (stem + ".json"), io::pretty(report));
    io::write_text(opt.out_dir / (stem + ".txt"), text);
    if (solution) {
        io::save_solution(opt.out_dir / "solution.json", *solution);
        io::write_text(opt.out_dir / "riccati.csv", io::solution_csv(solution->solution, header_line(opt)));
    }
}

// certify -> game Riccati -> feedback gain -> saddle verification, plus the representation
// cross-check for noise-free problems. Exit code: 3 when the game Riccati sweep fails, else 2
// when the certificate is not issued (the solution is still written), else 0 or 4 from the
// saddle verdict.
inline PipelineResult run_pipeline(const GameProblem& problem, const RunOptions& opt) {
    opt.config.validate();
    PipelineResult res;
    Stopwatch clock;
    json timings = json::object();
    std::ostringstream text;
    text << "# " << header_line(opt) << "\n";
    res.report["meta"] = reproducibility_header(opt);
    res.report["problem"] = {{"n", problem.n()}, {"m1", problem.m1()}, {"m2", problem.m2()},
                             {"horizon", problem.horizon()}, {"deterministic", problem.is_deterministic()}};

    const CertificateReport cert = certify_A3(problem, opt.config);
    timings["certify_s"] = clock.lap();
    res.report["certificate"] = io::to_json(cert);
    text << "certificate: " << (cert.certified() ? "CERTIFIED" : "NOT_CERTIFIED");
    if (!cert.certified())
        text << " (player " << cert.failing_side << ", "
             << to_string(cert.failing_side == 1 ? cert.player1.cause : cert.player2.cause) << " at t="
             << fmt(cert.failure_time) << ")";
    text << "\n";

    const SweepOutcome game = try_solve_riccati(problem, opt.config, SolutionKind::game);
    timings["solve_s"] = clock.lap();
    res.report["game_riccati"] = io::to_json(game);
    if (!game.solved()) {
        text << "game Riccati: FAILED, " << to_string(game.cause) << " at t=" << fmt(game.failure_time);
        if (std::isfinite(game.failure_margin))
            text << " (margin " << fmt(game.failure_margin) << ")";
        text << "\n";
        res.exit_code = kExitRiccatiFailure;
    } else {
        const RiccatiSolution& sol = *game.solution;
        text << "game Riccati: solved, P(0) =\n" << sol.P0() << "\n";
        const FeedbackLaw law = feedback_gain(problem, sol);
        const auto resid = stationarity_residual(problem, sol, law);
        res.report["stationarity_residual_max"] = *std::max_element(resid.begin(), resid.end());
        res.report["theta0"] = io::to_json(law.theta_nodes.front());
        io::SolutionFile file;
        file.solution = sol;
        file.law = law;
        file.meta = reproducibility_header(opt);
        timings["synthesize_s"] = clock.lap();

        if (problem.is_deterministic()) {
            const EquivalenceReport eq = equivalence_report(problem, opt.config);
            res.report["equivalence"] = io::to_json(eq);
            text << "representation: " << (eq.representation_ok() ? "ok" : "FAILED");
            if (std::isfinite(eq.cross_error))
                text << ", cross error " << fmt(eq.cross_error);
            text << "\n";
            if (eq.a3_not_necessary)
                text << "note: the game Riccati equation is solvable although the certificate fails; the certificate "
                        "is sufficient, not necessary\n";
            timings["equivalence_s"] = clock.lap();
        }

        if (!cert.certified()) {
            res.exit_code = kExitNotCertified;
            text << "verification: skipped (not certified)\n";
        } else {
            const Vector x = initial_state(opt, problem.n());
            const SaddleReport sr = verify_saddle(problem, sol, law, x, opt.n_perturbations, opt.n_paths, opt.seed);
            timings["verify_s"] = clock.lap();
            res.report["saddle"] = io::to_json(sr);
            text << "value <P(0)x,x> = " << fmt(sr.value_analytic) << ", Monte Carlo " << fmt(sr.value_mc.mean)
                 << " +- " << fmt(sr.value_mc.std_error) << "\n";
            text << "saddle verification: " << (sr.pass ? "PASS" : "FAIL") << " (" << sr.failing_gaps1 << " + "
                 << sr.failing_gaps2 << " failing gaps of " << 2 * opt.n_perturbations << ")\n";
            res.exit_code = sr.pass ? kExitPass : kExitVerificationFailed;
        }
        file.meta["timings"] = timings;
        res.solution = std::move(file);
    }
    res.report["timings"] = timings;
    res.report["exit_code"] = res.exit_code;
    text << "exit code: " << res.exit_code << "\n";
    res.text = text.str();
    write_outputs(opt, "report", res.report, res.text, res.solution ? &*res.solution : nullptr);
    return res;
}

// ============================================================================
// Paper examples
// ============================================================================

struct ExampleResult {
    bool ok = false;  // the demonstration behaved as the closed forms predict
    json report;
    std::string text;
};

namespace detail {

inline CostEstimate cost_of(const GameProblem& p, const ControlLaw& u1, const ControlLaw& u2, const Vector& x,
                            const TimeGrid& grid, const RunOptions& opt) {
    return estimate_cost(p, simulate(p, u1, u2, x, grid, opt.n_paths, opt.seed));
}

inline json cost_row(const char* control, double level, const CostEstimate& e, double reference, bool ok) {
    return {{"control", control}, {"level", level}, {"cost", io::to_json(e)}, {"reference", reference}, {"ok", ok}};
}

// Lower-value side: J(x; c, 0) >= -3 SE. Upper-value side: J(x; 0, c) <= x'Gx-type bound + 3 SE.
inline bool one_sided_bounds(const GameProblem& p, const Vector& x, double upper, const RunOptions& opt, json& rows,
                             std::ostringstream& text) {
    const TimeGrid grid(p.horizon(), opt.config.n_steps);
    bool ok = true;
    for (double c : {0.0, 0.5, 1.0, 2.0}) {
        const auto e = cost_of(p, ControlLaw::zero(p.m1()), ControlLaw::constant(Vector::Constant(p.m2(), c)), x,
                               grid, opt);
        const bool row_ok = e.mean <= upper + 3.0 * e.std_error + rounding_floor(upper);
        ok = ok && row_ok;
        rows.push_back(cost_row("u1=0, u2=c", c, e, upper, row_ok));
        text << "  J(x; 0, " << c << ") = " << fmt(e.mean) << " +- " << fmt(e.std_error) << "  (<= " << fmt(upper)
             << ")\n";
    }
    for (double c : {-1.0, 1.0, 2.0}) {
        const auto e = cost_of(p, ControlLaw::constant(Vector::Constant(p.m1(), c)), ControlLaw::zero(p.m2()), x,
                               grid, opt);
        const bool row_ok = e.mean >= -3.0 * e.std_error - rounding_floor(0.0);
        ok = ok && row_ok;
        rows.push_back(cost_row("u1=c, u2=0", c, e, 0.0, row_ok));
        text << "  J(x; " << c << ", 0) = " << fmt(e.mean) << " +- " << fmt(e.std_error) << "  (>= 0)\n";
    }
    return ok;
}

} // namespace detail

inline ExampleResult run_ex3_2(const RunOptions& opt) {
    const GameProblem p = fixtures::ex3_2();
    const Vector x = initial_state(opt, 1);
    ExampleResult r;
    std::ostringstream text;
    text << "# " << header_line(opt) << "\n";
    text << "ex3_2: one-sided bounds V- >= 0 and V+ <= x^2 with x = " << fmt(x(0)) << "\n";
    json rows = json::array();
    r.ok = detail::one_sided_bounds(p, x, x.squaredNorm(), opt, rows, text);
    r.report = {{"meta", reproducibility_header(opt)}, {"example", "ex3_2"}, {"costs", rows}, {"ok", r.ok}};
    r.text = text.str();
    return r;
}

inline ExampleResult run_ex3_4(const RunOptions& opt) {
    const GameProblem p = fixtures::ex3_4();
    const Vector x = initial_state(opt, 1);
    const std::vector<double> lambdas = opt.lambdas.empty() ? std::vector<double>{0.0, 10.0, 100.0} : opt.lambdas;
    const CostTable table = falsify_lower_value(p, x, lambdas, opt.n_paths, opt.seed, opt.config.n_steps);
    ExampleResult r;
    std::ostringstream text;
    text << "# " << header_line(opt) << "\n";
    text << "ex3_4: J(x; lambda, 0) against -(x^2 + 2 lambda x), x = " << fmt(x(0)) << "\n";
    json rows = json::array();
    r.ok = true;
    for (std::size_t i = 0; i < table.scalars.size(); ++i) {
        const double l = table.scalars[i];
        const double closed = -(x(0) * x(0) + 2.0 * l * x(0));
        const auto& e = table.costs[i];
        const bool within = within_se(e, closed);
        r.ok = r.ok && within;
        rows.push_back({{"lambda", l}, {"cost", io::to_json(e)}, {"closed_form", closed}, {"within_3se", within}});
        text << "  lambda = " << fmt(l) << ": " << fmt(e.mean) << " +- " << fmt(e.std_error) << "  (closed form "
             << fmt(closed) << ")\n";
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < table.scalars.size(); ++i)
        if (table.scalars[i] > table.scalars[i - 1] && !(table.costs[i].mean < table.costs[i - 1].mean))
            decreasing = false;
    text << "  cost decreases as lambda grows: " << (decreasing ? "yes" : "no") << "\n";
    r.report = {{"meta", reproducibility_header(opt)}, {"example", "ex3_4"}, {"costs", rows},
                {"decreasing", decreasing}, {"ok", r.ok}};
    r.text = text.str();
    return r;
}

inline ExampleResult run_ex4_5(const RunOptions& opt) {
    const GameProblem p = fixtures::ex4_5();
    ExampleResult r;
    std::ostringstream text;
    text << "# " << header_line(opt) << "\n";
    text << "ex4_5: P(t) = 2/(t-2) and the certificate status\n";
    const RiccatiSolution sol = solve_riccati(p, opt.config, SolutionKind::game);
    double max_err = 0.0;
    for (std::size_t k = 0; k < sol.grid.size(); ++k) {
        const double t = sol.grid.node(k);
        max_err = std::max(max_err, std::abs(sol.P_nodes[k](0, 0) - 2.0 / (t - 2.0)));
    }
    const CertificateReport cert = certify_A3(p, opt.config);
    const FeedbackLaw law = feedback_gain(p, sol);
    const EquivalenceReport eq = equivalence_report(p, opt.config);
    r.ok = max_err <= 1e-8 && !cert.certified() && cert.failing_side == 1 && eq.a3_not_necessary;
    text << "  P(0) = " << fmt(sol.P0()(0, 0)) << ", max |P - 2/(t-2)| = " << fmt(max_err) << "\n";
    text << "  certificate: " << (cert.certified() ? "CERTIFIED" : "NOT_CERTIFIED") << " (player "
         << cert.failing_side << " " << to_string(cert.player1.cause) << " at t=" << fmt(cert.failure_time) << ")\n";
    text << "  Theta(0) = (" << fmt(law.theta_nodes.front()(0, 0)) << ", " << fmt(law.theta_nodes.front()(1, 0))
         << ")\n";
    text << "  representation cross error = " << fmt(eq.cross_error) << "\n";
    r.report = {{"meta", reproducibility_header(opt)},
                {"example", "ex4_5"},
                {"P0", sol.P0()(0, 0)},
                {"max_error", max_err},
                {"certificate", io::to_json(cert)},
                {"theta0", io::to_json(law.theta_nodes.front())},
                {"equivalence", io::to_json(eq)},
                {"ok", r.ok}};
    r.text = text.str();
    return r;
}

inline ExampleResult run_ex5_2(const RunOptions& opt) {
    const GameProblem p = fixtures::ex5_2();
    const Vector x = initial_state(opt, 1);
    ExampleResult r;
    std::ostringstream text;
    text << "# " << header_line(opt) << "\n";
    text << "ex5_2: V- >= 0, V+ <= x^2 and the game Riccati regularity failure, x = " << fmt(x(0)) << "\n";
    json rows = json::array();
    const bool bounds = detail::one_sided_bounds(p, x, x.squaredNorm(), opt, rows, text);
    const SweepOutcome game = try_solve_riccati(p, opt.config, SolutionKind::game);
    const bool fails_at_end = !game.solved() && game.cause == FailureCause::regularity &&
                              std::abs(game.failure_time - p.horizon()) <= 1.5 * p.horizon() / opt.config.n_steps;
    text << "  game Riccati: " << (game.solved() ? "solved" : std::string("FAILED, ") + to_string(game.cause))
         << " at t=" << fmt(game.failure_time) << " (margin " << fmt(game.failure_margin) << ")\n";
    r.ok = bounds && fails_at_end;
    r.report = {{"meta", reproducibility_header(opt)},
                {"example", "ex5_2"},
                {"costs", rows},
                {"game_riccati", io::to_json(game)},
                {"ok", r.ok}};
    r.text = text.str();
    return r;
}

// Throws ContractViolation for an unknown name.
inline ExampleResult run_example(const std::string& name, const RunOptions& opt) {
    if (name == "ex3_2")
        return run_ex3_2(opt);
    if (name == "ex3_4")
        return run_ex3_4(opt);
    if (name == "ex4_5")
        return run_ex4_5(opt);
    if (name == "ex5_2")
        return run_ex5_2(opt);
    throw ContractViolation("unknown example '" + name + "' (expected ex3_2, ex3_4, ex4_5 or ex5_2)");
}

} // namespace lqgame::cli
