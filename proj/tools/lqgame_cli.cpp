#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lqgame/lqgame.hpp"

using namespace lqgame;
using cli::RunOptions;
using io::json;

namespace {

struct Args {
    std::string problem_path;
    std::size_t steps = 2000;
    double eps_reg = 1e-6;
    std::size_t paths = 10000;
    std::size_t perturbations = 10;
    std::uint64_t seed = 0;
    std::vector<double> x;
    std::vector<double> lambdas;
    std::string out;
    std::string kind = "game";
    std::string controls = "saddle";
    std::string example;
    bool print_json = false;
};

void add_common(CLI::App* sub, Args& a, bool needs_problem) {
    auto* p = sub->add_option("--problem", a.problem_path, "Problem file (JSON)");
    if (needs_problem)
        p->required()->check(CLI::ExistingFile);
    sub->add_option("--steps", a.steps, "Uniform grid steps on [0,T]")->check(CLI::Range(2, 100000000));
    sub->add_option("--eps-reg", a.eps_reg, "Strict regularity margin")->check(CLI::PositiveNumber);
    sub->add_option("--paths", a.paths, "Monte Carlo paths")->check(CLI::Range(2, 100000000));
    sub->add_option("--perturbations", a.perturbations, "Perturbation directions per player");
    sub->add_option("--seed", a.seed, "Seed for all randomness");
    sub->add_option("--x", a.x, "Initial state, comma separated")->delimiter(',');
    sub->add_option("--lambda", a.lambdas, "Scalars, comma separated")->delimiter(',');
    sub->add_option("--out", a.out, "Output directory");
    sub->add_flag("--json", a.print_json, "Print the JSON report instead of text");
}

RunOptions options_from(const Args& a, const std::string& command) {
    RunOptions o;
    o.config.n_steps = a.steps;
    o.config.eps_reg = a.eps_reg;
    o.n_paths = a.paths;
    o.n_perturbations = a.perturbations;
    o.seed = a.seed;
    if (!a.x.empty())
        o.x = Eigen::Map<const Vector>(a.x.data(), static_cast<Eigen::Index>(a.x.size()));
    o.lambdas = a.lambdas;
    o.out_dir = a.out;
    o.command = command;
    return o;
}

int emit(const RunOptions& o, const Args& a, const std::string& stem, json report, const std::string& text,
         const io::SolutionFile* solution, int code) {
    report["exit_code"] = code;
    cli::write_outputs(o, stem, report, text, solution);
    if (a.print_json)
        std::cout << report.dump(2) << "\n";
    else
        std::cout << text;
    return code;
}

std::string sweep_text(const SweepOutcome& s) {
    if (s.solved())
        return "solved";
    return std::string("FAILED, ") + to_string(s.cause) + " at t=" + cli::fmt(s.failure_time) + ": " + s.message;
}

int cmd_certify(const Args& a) {
    const auto o = options_from(a, "certify");
    const GameProblem p = io::load_problem(a.problem_path);
    const auto cert = certify_A3(p, o.config);
    std::string text = "# " + cli::header_line(o) + "\n";
    text += std::string("certificate: ") + (cert.certified() ? "CERTIFIED" : "NOT_CERTIFIED") + "\n";
    text += "player 1: " + sweep_text(cert.player1) + "\n";
    text += "player 2: " + sweep_text(cert.player2) + "\n";
    json report = {{"meta", cli::reproducibility_header(o)}, {"certificate", io::to_json(cert)}};
    return emit(o, a, "certificate", report, text, nullptr,
                cert.certified() ? cli::kExitPass : cli::kExitNotCertified);
}

int cmd_solve(const Args& a, bool synthesize) {
    const auto o = options_from(a, synthesize ? "synthesize" : "solve");
    const GameProblem p = io::load_problem(a.problem_path);
    const SolutionKind kind = synthesize ? SolutionKind::game : io::kind_from_string(a.kind);
    const auto sweep = try_solve_riccati(p, o.config, kind);
    std::string text = "# " + cli::header_line(o) + "\n";
    text += std::string(to_string(kind)) + " Riccati: " + sweep_text(sweep) + "\n";
    json report = {{"meta", cli::reproducibility_header(o)}, {"kind", to_string(kind)}, {"sweep", io::to_json(sweep)}};
    if (!sweep.solved())
        return emit(o, a, "solve", report, text, nullptr, cli::kExitRiccatiFailure);
    io::SolutionFile file;
    file.solution = *sweep.solution;
    file.meta = cli::reproducibility_header(o);
    std::ostringstream p0;
    p0 << file.solution.P0();
    text += "P(0) =\n" + p0.str() + "\n";
    report["P0"] = io::to_json(file.solution.P0());
    if (synthesize) {
        file.law = feedback_gain(p, file.solution);
        const auto resid = stationarity_residual(p, file.solution, *file.law);
        report["theta0"] = io::to_json(file.law->theta_nodes.front());
        report["stationarity_residual_max"] = *std::max_element(resid.begin(), resid.end());
        std::ostringstream th;
        th << file.law->theta_nodes.front();
        text += "Theta(0) =\n" + th.str() + "\n";
    }
    return emit(o, a, synthesize ? "synthesize" : "solve", report, text, &file, cli::kExitPass);
}

int cmd_simulate(const Args& a) {
    const auto o = options_from(a, "simulate");
    const GameProblem p = io::load_problem(a.problem_path);
    const Vector x = cli::initial_state(o, p.n());
    const TimeGrid grid(p.horizon(), o.config.n_steps);
    std::string text = "# " + cli::header_line(o) + "\n";
    json report = {{"meta", cli::reproducibility_header(o)}, {"controls", a.controls}};
    ControlLaw u1 = ControlLaw::zero(p.m1()), u2 = ControlLaw::zero(p.m2());
    if (a.controls == "saddle") {
        const auto sweep = try_solve_riccati(p, o.config, SolutionKind::game);
        if (!sweep.solved()) {
            text += "game Riccati: " + sweep_text(sweep) + "\n";
            report["game_riccati"] = io::to_json(sweep);
            return emit(o, a, "simulate", report, text, nullptr, cli::kExitRiccatiFailure);
        }
        const FeedbackLaw law = feedback_gain(p, *sweep.solution);
        u1 = ControlLaw::feedback(law, 1, grid);
        u2 = ControlLaw::feedback(law, 2, grid);
        report["value_analytic"] = game_value(*sweep.solution, x);
    } else if (a.controls != "zero") {
        throw ContractViolation("--controls must be 'saddle' or 'zero'");
    }
    const auto est = estimate_cost(p, simulate(p, u1, u2, x, grid, o.n_paths, o.seed));
    report["cost"] = io::to_json(est);
    text += "cost: " + cli::fmt(est.mean) + " +- " + cli::fmt(est.std_error) + " (" + std::to_string(est.n_paths) +
            " paths)\n";
    return emit(o, a, "simulate", report, text, nullptr, cli::kExitPass);
}

int cmd_verify(const Args& a) {
    const auto o = options_from(a, "verify");
    const GameProblem p = io::load_problem(a.problem_path);
    const Vector x = cli::initial_state(o, p.n());
    std::string text = "# " + cli::header_line(o) + "\n";
    json report = {{"meta", cli::reproducibility_header(o)}};
    const auto sweep = try_solve_riccati(p, o.config, SolutionKind::game);
    if (!sweep.solved()) {
        text += "game Riccati: " + sweep_text(sweep) + "\n";
        report["game_riccati"] = io::to_json(sweep);
        return emit(o, a, "verify", report, text, nullptr, cli::kExitRiccatiFailure);
    }
    const FeedbackLaw law = feedback_gain(p, *sweep.solution);
    const SaddleReport sr = verify_saddle(p, *sweep.solution, law, x, o.n_perturbations, o.n_paths, o.seed);
    report["saddle"] = io::to_json(sr);
    text += "value " + cli::fmt(sr.value_analytic) + ", Monte Carlo " + cli::fmt(sr.value_mc.mean) + " +- " +
            cli::fmt(sr.value_mc.std_error) + "\n";
    text += std::string("verdict: ") + (sr.pass ? "PASS" : "FAIL") + "\n";
    return emit(o, a, "verify", report, text, nullptr, sr.pass ? cli::kExitPass : cli::kExitVerificationFailed);
}

int cmd_det_rep(const Args& a) {
    auto o = options_from(a, "det-rep");
    const GameProblem p = io::load_problem(a.problem_path);
    if (!p.is_deterministic())
        throw NotDeterministicError("det-rep needs a problem without diffusion (C = D1 = D2 = 0)");
    const auto eq = a.lambdas.empty() ? equivalence_report(p, o.config) : equivalence_report(p, o.config, a.lambdas);
    std::string text = "# " + cli::header_line(o) + "\n";
    text += std::string("certificate: ") + (eq.certificate.certified() ? "CERTIFIED" : "NOT_CERTIFIED") + "\n";
    text += "game Riccati: " + sweep_text(eq.game) + "\n";
    text += "representation: " + (eq.representation_ok() ? std::string("ok") : "FAILED: " + eq.representation_error) +
            "\n";
    if (std::isfinite(eq.cross_error))
        text += "cross error max_t |P_rep - P_riccati|_F = " + cli::fmt(eq.cross_error) + "\n";
    for (std::size_t i = 0; i < eq.lambda_errors.size(); ++i)
        text += "  lambda = " + cli::fmt(eq.lambdas[i]) + ": |P_lambda(0) - P_rep(0)| = " +
                cli::fmt(eq.lambda_errors[i]) + "\n";
    if (eq.a3_not_necessary)
        text += "note: solvable although not certified; the certificate is sufficient, not necessary\n";
    json report = {{"meta", cli::reproducibility_header(o)}, {"equivalence", io::to_json(eq)}};
    std::optional<io::SolutionFile> file;
    if (eq.representation_ok()) {
        file = io::solution_from_representation(*eq.representation);
        file->meta = cli::reproducibility_header(o);
    }
    return emit(o, a, "det_rep", report, text, file ? &*file : nullptr,
                eq.representation_ok() ? cli::kExitPass : cli::kExitRiccatiFailure);
}

int cmd_example(const Args& a) {
    auto o = options_from(a, "example " + a.example);
    const auto r = cli::run_example(a.example, o);
    return emit(o, a, a.example, r.report, r.text, nullptr, r.ok ? cli::kExitPass : cli::kExitVerificationFailed);
}

int cmd_pipeline(const Args& a) {
    const auto o = options_from(a, "pipeline");
    const GameProblem p = io::load_problem(a.problem_path);
    const auto r = cli::run_pipeline(p, o);
    if (a.print_json)
        std::cout << r.report.dump(2) << "\n";
    else
        std::cout << r.text;
    return r.exit_code;
}

int cmd_export(const Args& a) {
    if (a.out.empty())
        throw ContractViolation("export-fixtures needs --out");
    for (const auto& name : fixtures::example_names()) {
        const std::filesystem::path path = std::filesystem::path(a.out) / (name + ".json");
        io::save_problem(path, fixtures::example(name));
        std::cout << path.string() << "\n";
    }
    // a small certified random instance for pipeline smoke runs
    fixtures::RandomSpec spec;
    spec.max_n = 2;
    const auto inst = fixtures::certified_instances(1, 2024, spec).front();
    const std::filesystem::path path = std::filesystem::path(a.out) / "random_certified.json";
    io::save_problem(path, inst.problem);
    std::cout << path.string() << "\n";
    return cli::kExitPass;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-player zero-sum linear-quadratic games: Riccati solver, saddle synthesis and verification"};
    app.set_version_flag("--version", std::string(io::version()));
    app.require_subcommand(1);
    Args a;

    auto* certify = app.add_subcommand("certify", "Check uniform convexity-concavity via the player Riccati equations");
    add_common(certify, a, true);
    auto* solve = app.add_subcommand("solve", "Solve a Riccati equation backward in time");
    add_common(solve, a, true);
    solve->add_option("--kind", a.kind, "game, player1 or player2")
        ->check(CLI::IsMember({"game", "player1", "player2"}));
    auto* synth = app.add_subcommand("synthesize", "Solve the game Riccati equation and build the saddle feedback");
    add_common(synth, a, true);
    auto* sim = app.add_subcommand("simulate", "Monte Carlo cost of the saddle feedback or of zero controls");
    add_common(sim, a, true);
    sim->add_option("--controls", a.controls, "saddle or zero")->check(CLI::IsMember({"saddle", "zero"}));
    auto* verify = app.add_subcommand("verify", "Empirical saddle-point verification");
    add_common(verify, a, true);
    auto* det = app.add_subcommand("det-rep", "Fundamental-matrix representation for problems without diffusion");
    add_common(det, a, true);
    auto* example = app.add_subcommand("example", "Run a built-in example demonstration");
    add_common(example, a, false);
    example->add_option("name", a.example, "ex3_2, ex3_4, ex4_5 or ex5_2")->required();
    auto* pipeline = app.add_subcommand("pipeline", "certify, solve, synthesize and verify in one run");
    add_common(pipeline, a, true);
    auto* exporter = app.add_subcommand("export-fixtures", "Write the built-in examples as problem files");
    exporter->add_option("--out", a.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitUsage;
    }

    try {
        if (*certify)
            return cmd_certify(a);
        if (*solve)
            return cmd_solve(a, false);
        if (*synth)
            return cmd_solve(a, true);
        if (*sim)
            return cmd_simulate(a);
        if (*verify)
            return cmd_verify(a);
        if (*det)
            return cmd_det_rep(a);
        if (*example)
            return cmd_example(a);
        if (*pipeline)
            return cmd_pipeline(a);
        if (*exporter)
            return cmd_export(a);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitUsage;
    }
    return cli::kExitUsage;
}
