#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "test_support.hpp"

using namespace lqgame;

namespace {

const std::filesystem::path kFixtures = LQGAME_FIXTURES_DIR;

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("lqgame_test_cli_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Exit status of the command-line tool run with `args`; stdout and stderr go to `log`.
int run_cli(const std::string& args, const std::filesystem::path& log) {
    const std::string cmd = std::string(LQGAME_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

io::json read_json(const std::filesystem::path& p) { return io::parse_json(io::read_text(p), p.string()); }

cli::RunOptions quick_options() {
    cli::RunOptions o;
    o.config.n_steps = 200;
    o.n_paths = 2000;
    o.n_perturbations = 4;
    o.seed = 3;
    return o;
}

} // namespace

TEST(Pipeline, CertifiedFixturePasses) {
    const auto dir = temp_dir("pass");
    const int code = run_cli("pipeline --problem " + (kFixtures / "random_certified.json").string() +
                                 " --steps 200 --paths 4000 --out " + dir.string(),
                             dir / "log.txt");
    EXPECT_EQ(code, cli::kExitPass) << io::read_text(dir / "log.txt");
    const auto report = read_json(dir / "report.json");
    EXPECT_EQ(report["certificate"]["status"], "CERTIFIED");
    EXPECT_EQ(report["saddle"]["verdict"], "PASS");
    EXPECT_EQ(report["meta"]["seed"], 0);
    EXPECT_EQ(report["meta"]["config"]["n_steps"], 200);
    EXPECT_TRUE(std::filesystem::exists(dir / "solution.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "riccati.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "report.txt"));
}

TEST(Pipeline, NoiseFreeScalarGameIsNotCertifiedButSolved) {
    const auto dir = temp_dir("ex4_5");
    const int code = run_cli("pipeline --problem " + (kFixtures / "ex4_5.json").string() + " --steps 1000 --out " +
                                 dir.string(),
                             dir / "log.txt");
    EXPECT_EQ(code, cli::kExitNotCertified) << io::read_text(dir / "log.txt");
    const auto sol = io::load_solution(dir / "solution.json");
    EXPECT_NEAR(sol.solution.P0()(0, 0), -1.0, 1e-8);
    ASSERT_TRUE(sol.law.has_value());
    EXPECT_NEAR(sol.law->theta_nodes.front()(1, 0), -1.5, 1e-8);
    const auto report = read_json(dir / "report.json");
    EXPECT_EQ(report["certificate"]["failing_side"], 1);
    EXPECT_TRUE(report["equivalence"]["a3_sufficient_not_necessary"].get<bool>());
    EXPECT_FALSE(report.contains("saddle"));
}

TEST(Pipeline, NoiseChannelGameFailsAtHorizon) {
    const auto dir = temp_dir("ex5_2");
    const int code = run_cli("pipeline --problem " + (kFixtures / "ex5_2.json").string() + " --steps 1000 --out " +
                                 dir.string(),
                             dir / "log.txt");
    EXPECT_EQ(code, cli::kExitRiccatiFailure) << io::read_text(dir / "log.txt");
    const auto report = read_json(dir / "report.json");
    EXPECT_EQ(report["game_riccati"]["cause"], "regularity");
    EXPECT_NEAR(report["game_riccati"]["failure_time"].get<double>(), 1.0, 1e-3);
    EXPECT_FALSE(std::filesystem::exists(dir / "solution.json"));
}

TEST(Pipeline, WrongLawGivesVerificationFailure) {
    // exit code 4 is the saddle verdict; exercised in process with a perturbed law through the
    // same report fields the pipeline maps to its exit code
    const auto inst = fixtures::certified_instances(1, 1234).front();
    SolverConfig cfg;
    cfg.n_steps = 200;
    const auto sol = solve_riccati(inst.problem, cfg, SolutionKind::game);
    auto law = feedback_gain(inst.problem, sol);
    for (auto& th : law.theta_nodes)
        th.array() += 0.5;
    EXPECT_FALSE(verify_saddle(inst.problem, sol, law, inst.x, 10, 10000, 99).pass);
}

TEST(Pipeline, SameSeedSameReport) {
    const auto p = io::load_problem(kFixtures / "random_certified.json");
    auto o = quick_options();
    auto a = cli::run_pipeline(p, o);
    auto b = cli::run_pipeline(p, o);
    EXPECT_EQ(a.exit_code, b.exit_code);
    EXPECT_EQ(a.report["saddle"], b.report["saddle"]);
    EXPECT_EQ(a.report["meta"], b.report["meta"]);
    o.seed = 4;
    const auto c = cli::run_pipeline(p, o);
    EXPECT_NE(a.report["saddle"]["value_mc"], c.report["saddle"]["value_mc"]);
}

TEST(Examples, InProcessDemonstrations) {
    auto o = quick_options();
    o.config.n_steps = 1000;
    const auto ex45 = cli::run_example("ex4_5", o);
    EXPECT_TRUE(ex45.ok) << ex45.text;
    EXPECT_LE(ex45.report["max_error"].get<double>(), 1e-8);

    o.config.n_steps = 100;
    const auto ex34 = cli::run_example("ex3_4", o);
    EXPECT_TRUE(ex34.ok) << ex34.text;
    EXPECT_EQ(ex34.report["costs"][2]["closed_form"], -201.0);
    EXPECT_TRUE(ex34.report["decreasing"].get<bool>());

    const auto ex52 = cli::run_example("ex5_2", o);
    EXPECT_TRUE(ex52.ok) << ex52.text;
    // both controls off: the state is frozen and the cost is x^2 exactly
    EXPECT_EQ(ex52.report["costs"][0]["cost"]["mean"], 1.0);
    EXPECT_EQ(ex52.report["costs"][0]["cost"]["std_error"], 0.0);

    const auto ex32 = cli::run_example("ex3_2", o);
    EXPECT_TRUE(ex32.ok) << ex32.text;

    EXPECT_THROW(cli::run_example("ex9_9", o), ContractViolation);
}

TEST(Commands, ExitCodesAndOutputs) {
    const auto dir = temp_dir("commands");
    const std::string ex45 = (kFixtures / "ex4_5.json").string();
    const std::string rnd = (kFixtures / "random_certified.json").string();
    EXPECT_EQ(run_cli("example ex4_5", dir / "a.txt"), cli::kExitPass);
    EXPECT_EQ(run_cli("example ex3_4 --lambda 0,10,100 --paths 500 --steps 100", dir / "b.txt"), cli::kExitPass);
    EXPECT_EQ(run_cli("example nope", dir / "c.txt"), cli::kExitUsage);
    EXPECT_EQ(run_cli("certify --problem " + ex45, dir / "d.txt"), cli::kExitNotCertified);
    EXPECT_EQ(run_cli("certify --problem " + rnd, dir / "e.txt"), cli::kExitPass);
    EXPECT_EQ(run_cli("solve --kind player1 --problem " + ex45, dir / "f.txt"), cli::kExitRiccatiFailure);
    EXPECT_EQ(run_cli("solve --kind game --problem " + ex45 + " --out " + dir.string(), dir / "g.txt"),
              cli::kExitPass);
    EXPECT_TRUE(std::filesystem::exists(dir / "solution.json"));
    EXPECT_EQ(run_cli("det-rep --problem " + ex45, dir / "h.txt"), cli::kExitPass);
    EXPECT_EQ(run_cli("verify --problem " + rnd + " --steps 200 --paths 2000", dir / "i.txt"), cli::kExitPass);
    EXPECT_EQ(run_cli("simulate --problem " + rnd + " --steps 100 --paths 100 --controls zero", dir / "j.txt"),
              cli::kExitPass);
    EXPECT_EQ(run_cli("pipeline --problem " + (dir / "missing.json").string(), dir / "k.txt"), cli::kExitUsage);
    EXPECT_EQ(run_cli("pipeline --bogus", dir / "l.txt"), cli::kExitUsage);
    EXPECT_EQ(run_cli("--help", dir / "m.txt"), 0);
    EXPECT_NE(io::read_text(dir / "a.txt").find("NOT_CERTIFIED"), std::string::npos);
}
