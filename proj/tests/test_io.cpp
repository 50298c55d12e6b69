#include <gtest/gtest.h>

#include <filesystem>
#include <limits>

#include "test_support.hpp"

using namespace lqgame;
using namespace testing_support;

namespace {

const std::filesystem::path kFixtures = LQGAME_FIXTURES_DIR;

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("lqgame_test_io_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

io::json fixture_json(const std::string& name) {
    return io::parse_json(io::read_text(kFixtures / (name + ".json")), name);
}

std::string field_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "<no error>";
}

} // namespace

TEST(ProblemFile, NoiseFreeScalarGameFixture) {
    const auto p = io::load_problem(kFixtures / "ex4_5.json");
    EXPECT_EQ(p.n(), 1);
    EXPECT_EQ(p.m1(), 1);
    EXPECT_EQ(p.m2(), 1);
    EXPECT_EQ(p.cost().G(0, 0), -2.0);
    const auto c = p.at(0.3);
    EXPECT_EQ(c.R(0, 0), 1.0);
    EXPECT_EQ(c.R(0, 1), 0.0);
    EXPECT_EQ(c.R(1, 1), -2.0 / 3.0);
    EXPECT_TRUE(p.is_deterministic());
}

TEST(ProblemFile, CommittedFixturesMatchBuiltIns) {
    for (const auto& name : fixtures::example_names())
        EXPECT_EQ(fixture_json(name), io::problem_to_json(fixtures::example(name))) << name;
}

TEST(ProblemFile, SampledCoefficientsKeepTheirValues) {
    const auto p = io::load_problem(kFixtures / "ex3_2.json");
    const auto c = p.at(0.25);
    EXPECT_NEAR(c.B(0, 0), 0.5, 1e-6);
    EXPECT_NEAR(c.D(0, 1), 0.25, 1e-12);
    EXPECT_NEAR(c.R(1, 1), -0.0625, 1e-6);
}

TEST(ProblemFile, AsymmetricCrossWeightNamesField) {
    auto doc = fixture_json("ex4_5");
    doc["cost"]["R21"] = {{"constant", {{0.5}}}};
    EXPECT_EQ(field_of([&] { io::problem_from_json(doc); }), "cost.R21");
}

TEST(ProblemFile, ShapeAndMemberErrorsNameFields) {
    auto doc = fixture_json("ex4_5");
    doc["dynamics"]["B1"] = {{"constant", {{1.0, 2.0}}}};
    EXPECT_EQ(field_of([&] { io::problem_from_json(doc); }).rfind("dynamics.B1", 0), 0u);

    doc = fixture_json("ex4_5");
    doc["dims"].erase("m2");
    EXPECT_EQ(field_of([&] { io::problem_from_json(doc); }).rfind("dims", 0), 0u);

    doc = fixture_json("ex4_5");
    doc["cost"]["Q"] = {{"constant", {{"x"}}}};
    EXPECT_EQ(field_of([&] { io::problem_from_json(doc); }).rfind("cost.Q", 0), 0u);

    doc = fixture_json("ex4_5");
    doc["cost"]["Q"] = {{"samples", {{"times", {0.0, 0.2, 1.0}}, {"values", {{{0.0}}, {{0.0}}, {{0.0}}}}}}};
    EXPECT_EQ(field_of([&] { io::problem_from_json(doc); }).rfind("cost.Q", 0), 0u);
}

TEST(ProblemFile, EmptyAndMalformedDocumentsAreParseErrors) {
    const auto dir = temp_dir("parse");
    io::write_text(dir / "empty.json", "");
    try {
        io::load_problem(dir / "empty.json");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("empty document"), std::string::npos) << e.what();
    }
    io::write_text(dir / "broken.json", "{\n  \"horizon\": 1.0,\n  \"dims\": {,}\n}\n");
    try {
        io::load_problem(dir / "broken.json");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(io::load_problem(dir / "missing.json"), Error);
}

TEST(ProblemFile, SaveLoadRoundTrip) {
    const auto dir = temp_dir("problem");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = fixtures::random_instance(seed);
        io::save_problem(dir / "p.json", inst.problem);
        const auto back = io::load_problem(dir / "p.json");
        for (double t : {0.0, 0.37, 1.0}) {
            const auto a = inst.problem.at(t), b = back.at(t);
            EXPECT_EQ(a.A, b.A);
            EXPECT_EQ(a.B, b.B);
            EXPECT_EQ(a.D, b.D);
            EXPECT_EQ(a.R, b.R);
            EXPECT_EQ(a.S, b.S);
        }
        EXPECT_EQ(back.cost().G, inst.problem.cost().G);
    }
}

TEST(SolutionFile, BitExactRoundTrip) {
    const auto dir = temp_dir("solution");
    Rng rng(42);
    io::SolutionFile f;
    f.solution.grid = TimeGrid(1.5, 7);
    f.solution.kind = SolutionKind::game;
    for (std::size_t k = 0; k < 8; ++k) {
        Matrix P = rng.symmetric(3) * std::pow(10.0, rng.uniform(-300, 300));
        P(0, 0) = 1.0 / 3.0;
        P(1, 1) = std::numeric_limits<double>::denorm_min();
        f.solution.P_nodes.push_back(P);
        f.solution.margin1_nodes.push_back(rng.uniform(0, 1));
        f.solution.margin2_nodes.push_back(-rng.uniform(0, 1));
    }
    FeedbackLaw law;
    law.grid = f.solution.grid;
    law.m1 = 1;
    law.m2 = 2;
    for (std::size_t k = 0; k < 8; ++k)
        law.theta_nodes.push_back(rng.matrix(3, 3));
    f.law = law;
    f.meta = {{"seed", 7}};

    io::save_solution(dir / "s.json", f);
    const auto back = io::load_solution(dir / "s.json");
    EXPECT_EQ(back.solution.grid, f.solution.grid);
    EXPECT_EQ(back.solution.kind, SolutionKind::game);
    ASSERT_EQ(back.solution.P_nodes.size(), 8u);
    for (std::size_t k = 0; k < 8; ++k) {
        EXPECT_EQ(back.solution.P_nodes[k], f.solution.P_nodes[k]);
        EXPECT_EQ(back.law->theta_nodes[k], law.theta_nodes[k]);
    }
    EXPECT_EQ(back.solution.margin1_nodes, f.solution.margin1_nodes);
    EXPECT_EQ(back.solution.margin2_nodes, f.solution.margin2_nodes);
    EXPECT_EQ(back.law->m2, 2);
    EXPECT_EQ(back.meta["seed"], 7);
}

TEST(SolutionFile, SolverOutputRoundTrip) {
    const auto dir = temp_dir("solver");
    const auto p = fixtures::ex4_5();
    SolverConfig cfg;
    cfg.n_steps = 100;
    io::SolutionFile f;
    f.solution = solve_riccati(p, cfg, SolutionKind::player2);
    io::save_solution(dir / "s.json", f);
    const auto back = io::load_solution(dir / "s.json");
    EXPECT_EQ(back.solution.kind, SolutionKind::player2);
    EXPECT_TRUE(back.solution.margin1_nodes.empty());
    EXPECT_EQ(back.solution.margin2_nodes, f.solution.margin2_nodes);
    EXPECT_FALSE(back.law.has_value());
    for (std::size_t k = 0; k < f.solution.P_nodes.size(); ++k)
        EXPECT_EQ(back.solution.P_nodes[k], f.solution.P_nodes[k]);
}

TEST(SolutionFile, RejectsInconsistentDocuments) {
    io::SolutionFile f;
    f.solution.grid = TimeGrid(1.0, 2);
    f.solution.P_nodes.assign(3, Matrix::Zero(1, 1));
    auto doc = io::solution_to_json(f);
    doc["P_nodes"].erase(0);
    EXPECT_EQ(field_of([&] { io::solution_from_json(doc); }), "P_nodes");
    doc = io::solution_to_json(f);
    doc["kind"] = "both";
    EXPECT_EQ(field_of([&] { io::solution_from_json(doc); }), "kind");
}

TEST(SolutionCsv, OneRowPerNode) {
    SolverConfig cfg;
    cfg.n_steps = 10;
    const auto sol = solve_riccati(fixtures::ex4_5(), cfg, SolutionKind::game);
    const std::string csv = io::solution_csv(sol, "run header");
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# run header");
    std::getline(in, line);
    EXPECT_EQ(line, "t,P_0_0,margin1,margin2");
    std::size_t rows = 0;
    while (std::getline(in, line))
        ++rows;
    EXPECT_EQ(rows, 11u);
}

TEST(ReportJson, NonFiniteValuesBecomeNull) {
    CertificateReport rep;
    const auto j = io::to_json(rep);
    EXPECT_TRUE(j["failure_time"].is_null());
    EXPECT_EQ(io::to_json(std::vector<double>{1.0, std::nan("")})[1], nullptr);
}

TEST(Pretty, ParsesBackToSameDocument) {
    const auto doc = io::problem_to_json(fixtures::ex5_2());
    EXPECT_EQ(io::parse_json(io::pretty(doc), "pretty"), doc);
}
