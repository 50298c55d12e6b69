#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace lqgame;
using namespace testing_support;

namespace {

SolverConfig steps(std::size_t n) {
    SolverConfig c;
    c.n_steps = n;
    return c;
}

fixtures::RandomSpec deterministic_spec() {
    fixtures::RandomSpec spec;
    spec.deterministic = true;
    return spec;
}

ConstantData scalar_data(double a, double b1, double b2, double q, double r1, double r2) {
    auto d = zero_data(1, 1, 1);
    d.A(0, 0) = a;
    d.B1(0, 0) = b1;
    d.B2(0, 0) = b2;
    d.Q(0, 0) = q;
    d.R11(0, 0) = r1;
    d.R22(0, 0) = -r2;
    return d;
}

} // namespace

TEST(Hamiltonian, ZeroCoefficientsGiveZero) {
    const auto h = hamiltonian(make_problem(zero_data(2, 1, 1)), 10);
    ASSERT_EQ(h.H_nodes.size(), 11u);
    ASSERT_EQ(h.H_midpoints.size(), 10u);
    for (const auto& H : h.H_nodes)
        EXPECT_EQ(H, Matrix::Zero(4, 4));
}

TEST(Hamiltonian, ScalarHandAssembly) {
    const double a = 0.3, b1 = 1.2, b2 = -0.7, q = 0.4, r1 = 2.0, r2 = 0.5;
    const auto h = hamiltonian(make_problem(scalar_data(a, b1, b2, q, r1, r2)), 4);
    Matrix expect(2, 2);
    expect << a, -(b1 * b1 / r1 - b2 * b2 / r2), -q, -a;
    for (const auto& H : h.H_nodes)
        EXPECT_LE((H - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Hamiltonian, TraceFreeOnRandomInstances) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = fixtures::random_instance(seed, deterministic_spec());
        const auto h = hamiltonian(inst.problem, 20);
        for (const auto& H : h.H_nodes)
            EXPECT_LE(std::abs(H.trace()), 1e-10);
    }
}

TEST(Hamiltonian, RejectsDiffusionAndIrregularWeights) {
    EXPECT_THROW(hamiltonian(fixtures::ex3_4()), NotDeterministicError);
    auto d = scalar_data(0, 1, 1, 0, 1, 1);
    d.R22(0, 0) = 0.0;
    try {
        hamiltonian(make_problem(d), 10);
        FAIL();
    } catch (const RegularityError& e) {
        EXPECT_EQ(e.player(), 2);
    }
}

TEST(FundamentalMatrix, ZeroHamiltonianIsIdentity) {
    const auto f = fundamental_matrix(hamiltonian(make_problem(zero_data(2, 1, 1)), 10));
    for (const auto& psi : f.Psi_nodes)
        EXPECT_EQ(psi, Matrix::Identity(4, 4));
}

TEST(FundamentalMatrix, MatchesMatrixExponential) {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const auto inst = fixtures::random_instance(seed, deterministic_spec());
        const auto h = hamiltonian(inst.problem, 1000);
        const auto f = fundamental_matrix(h);
        EXPECT_EQ(f.Psi_nodes.front(), Matrix::Identity(h.H_nodes[0].rows(), h.H_nodes[0].rows()));
        const Matrix E = expm(h.H_nodes[0]);
        EXPECT_LE((f.Psi_nodes.back() - E).cwiseAbs().maxCoeff(), 1e-8 * (1 + E.norm()));
        for (const auto& psi : f.Psi_nodes)
            EXPECT_NEAR(psi.determinant(), 1.0, 1e-6);
    }
}

TEST(FundamentalMatrix, OverflowIsBlowUp) {
    auto d = zero_data(1, 1, 1);
    d.A(0, 0) = 50.0;
    EXPECT_THROW(fundamental_matrix(hamiltonian(make_problem(d), 100)), BlowUpError);
}

TEST(Representation, TerminalStructureAndNoiseFreeScalarGame) {
    const auto p = fixtures::ex4_5();
    const auto rep = representation(p, fundamental_matrix(hamiltonian(p, 1000)), p.cost().G);
    EXPECT_LE((rep.Lambda_nodes.back() + Matrix::Identity(1, 1)).norm(), 1e-10);
    EXPECT_LE((rep.P_rep_nodes.back() - p.cost().G).norm(), 1e-8);
    EXPECT_NEAR(rep.P_rep_nodes.front()(0, 0), -1.0, 1e-6);
    for (std::size_t k = 0; k < rep.grid.size(); k += 50)
        EXPECT_NEAR(rep.P_rep_nodes[k](0, 0), 2.0 / (rep.grid.node(k) - 2.0), 1e-8);
}

TEST(Representation, AgreesWithBackwardSweepOnCertifiedInstances) {
    const SolverConfig cfg = steps(1000);
    const auto instances = fixtures::certified_instances(100, 2718, deterministic_spec(), cfg);
    for (const auto& inst : instances) {
        const auto& p = inst.problem;
        const auto psi = fundamental_matrix(hamiltonian(p, cfg.n_steps, cfg.eps_reg));
        const auto rep = representation(p, psi, p.cost().G);
        const auto sol = solve_riccati(p, cfg, SolutionKind::game);
        double worst = 0.0;
        for (std::size_t k = 0; k < sol.grid.size(); ++k)
            worst = std::max(worst, (rep.P_rep_nodes[k] - sol.P_nodes[k]).norm());
        EXPECT_LE(worst, 1e-6);
        const auto n = p.n();
        EXPECT_LE((rep.Lambda_nodes.back() + Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE(rep.max_symmetry_defect, 1e-7);
        for (const auto& m : psi.Psi_nodes)
            EXPECT_NEAR(m.determinant(), 1.0, 1e-6);
    }
}

TEST(Representation, SingularLambdaIsReported) {
    // first channel: dP/dt = P^2 from P(1) = -2, so Lambda_11(t) = 1 - 2t vanishes at t = 1/2;
    // second channel frozen with Lambda_22 = -1
    auto d = zero_data(2, 1, 1);
    d.B1(0, 0) = 1.0;
    d.G(0, 0) = -2.0;
    const auto p = make_problem(d);
    const auto psi = fundamental_matrix(hamiltonian(p, 100));
    try {
        representation(p, psi, p.cost().G);
        FAIL();
    } catch (const RepresentationSingular& e) {
        EXPECT_NEAR(e.time(), 0.5, 1e-12);
        EXPECT_GT(e.condition(), kMaxLambdaCondition);
    }
    EXPECT_THROW(representation(p, psi, Matrix::Zero(3, 3)), ContractViolation);
}

TEST(EquivalenceReport, CertifiedInstanceAllSucceed) {
    const SolverConfig cfg = steps(500);
    const auto inst = fixtures::certified_instances(1, 31, deterministic_spec(), cfg).front();
    const auto rep = equivalence_report(inst.problem, cfg);
    EXPECT_TRUE(rep.certificate.certified());
    EXPECT_TRUE(rep.game.solved());
    EXPECT_TRUE(rep.representation_ok());
    EXPECT_TRUE(rep.consistent);
    EXPECT_FALSE(rep.a3_not_necessary);
    EXPECT_LE(rep.cross_error, 1e-6);
    ASSERT_EQ(rep.lambda_errors.size(), 3u);
    EXPECT_TRUE(rep.lambda_errors_decreasing);
}

TEST(EquivalenceReport, NoiseFreeScalarGameFlagsCertificateAsSufficientOnly) {
    const auto rep = equivalence_report(fixtures::ex4_5(), steps(1000));
    EXPECT_FALSE(rep.certificate.certified());
    EXPECT_EQ(rep.certificate.failing_side, 1);
    EXPECT_TRUE(rep.game.solved());
    EXPECT_TRUE(rep.representation_ok());
    EXPECT_TRUE(rep.a3_not_necessary);
    EXPECT_TRUE(rep.consistent);
    EXPECT_LE(rep.cross_error, 1e-6);
}

TEST(EquivalenceReport, ZeroProblemIsTrivial) {
    const auto rep = equivalence_report(make_problem(zero_data(2, 1, 1)), steps(50));
    EXPECT_TRUE(rep.certificate.certified());
    ASSERT_TRUE(rep.representation_ok());
    for (const auto& P : rep.representation->P_rep_nodes)
        EXPECT_LE(P.norm(), 1e-15);
    EXPECT_EQ(rep.cross_error, 0.0);
}

TEST(EquivalenceReport, FailuresReportedJointly) {
    auto d = zero_data(2, 1, 1);
    d.B1(0, 0) = 1.0;
    d.G(0, 0) = -2.0;
    const auto rep = equivalence_report(make_problem(d), steps(100));
    EXPECT_FALSE(rep.game.solved());
    EXPECT_FALSE(rep.representation_ok());
    EXPECT_FALSE(rep.representation_error.empty());
    EXPECT_TRUE(rep.consistent);
    EXPECT_TRUE(std::isnan(rep.cross_error));
}
