#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "core.hpp"
#include "riccati.hpp"

namespace lqgame {

// Hamiltonian coefficient of the noise-free game,
//   H = [[A - B R^-1 S, -B R^-1 B'], [-(Q - S' R^-1 S), -(A - B R^-1 S)']],
// at every grid node and at every step midpoint (the RK4 stages of the flow need both).
struct HamiltonianPath {
    TimeGrid grid;
    std::vector<Matrix> H_nodes;
    std::vector<Matrix> H_midpoints;
};

// Psi' = H Psi, Psi(0) = I.
struct FundamentalMatrix {
    TimeGrid grid;
    std::vector<Matrix> Psi_nodes;
};

struct RepresentationResult {
    TimeGrid grid;
    std::vector<Matrix> Lambda_nodes;
    std::vector<Matrix> P_rep_nodes;        // symmetrized
    std::vector<double> condition_numbers;  // 2-norm condition of Lambda(t)
    std::vector<double> symmetry_defects;   // |P - P'|_F before symmetrization
    double max_symmetry_defect = 0.0;
};

inline constexpr double kMaxLambdaCondition = 1e10;

namespace detail {

inline Matrix hamiltonian_at(const NodeCoefficients& c, double t, double eps_reg) {
    const Matrix R11 = c.R.topLeftCorner(c.m1, c.m1);
    const Matrix R22 = c.R.bottomRightCorner(c.m2, c.m2);
    const double margin1 = sym_eig_extremes(detail::symmetrize(R11)).lambda_min;
    if (!(margin1 > eps_reg))
        throw RegularityError(t, 1, margin1);
    const double margin2 = sym_eig_extremes(detail::symmetrize(R22)).lambda_max;
    if (!(margin2 < -eps_reg))
        throw RegularityError(t, 2, margin2);
    const Matrix r_inv = block_inverse(R11, c.R.topRightCorner(c.m1, c.m2), R22);
    const auto n = c.A.rows();
    const Matrix a = c.A - c.B * r_inv * c.S;
    Matrix H(2 * n, 2 * n);
    H << a, -c.B * r_inv * c.B.transpose(), -(c.Q - c.S.transpose() * r_inv * c.S), -a.transpose();
    return H;
}

inline double condition_number(const Matrix& m) {
    const Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    const double smallest = s(s.size() - 1);
    return smallest > 0.0 ? s(0) / smallest : std::numeric_limits<double>::infinity();
}

} // namespace detail

// Requires C = D1 = D2 = 0 (NotDeterministicError) and R11 > 0, R22 < 0 with margin eps_reg at
// every evaluation time (RegularityError).
inline HamiltonianPath hamiltonian(const GameProblem& problem, std::size_t n_steps = 2000, double eps_reg = 1e-6) {
    if (!problem.is_deterministic())
        throw NotDeterministicError("hamiltonian: the problem has a diffusion term (C or D is nonzero)");
    HamiltonianPath h{TimeGrid(problem.horizon(), n_steps), {}, {}};
    for (std::size_t k = 0; k < h.grid.size(); ++k) {
        const double t = h.grid.node(k);
        h.H_nodes.push_back(detail::hamiltonian_at(problem.at(t), t, eps_reg));
        if (k + 1 < h.grid.size()) {
            const double tm = t + 0.5 * h.grid.dt();
            h.H_midpoints.push_back(detail::hamiltonian_at(problem.at(tm), tm, eps_reg));
        }
    }
    return h;
}

// Classical RK4 forward from Psi(0) = I. BlowUpError when |Psi|_F exceeds blowup_cap or
// becomes non-finite.
inline FundamentalMatrix fundamental_matrix(const HamiltonianPath& h, double blowup_cap = 1e8) {
    if (h.H_nodes.size() != h.grid.size() || h.H_midpoints.size() + 1 != h.grid.size())
        throw ContractViolation("fundamental_matrix: Hamiltonian path is not sampled on its grid");
    const auto dim = h.H_nodes.front().rows();
    FundamentalMatrix f{h.grid, {}};
    f.Psi_nodes.reserve(h.grid.size());
    f.Psi_nodes.push_back(Matrix::Identity(dim, dim));
    const double dt = h.grid.dt();
    for (std::size_t k = 0; k + 1 < h.grid.size(); ++k) {
        const Matrix& psi = f.Psi_nodes.back();
        const Matrix& hm = h.H_midpoints[k];
        const Matrix k1 = h.H_nodes[k] * psi;
        const Matrix k2 = hm * (psi + 0.5 * dt * k1);
        const Matrix k3 = hm * (psi + 0.5 * dt * k2);
        const Matrix k4 = h.H_nodes[k + 1] * (psi + dt * k3);
        Matrix next = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double norm = next.norm();
        if (!std::isfinite(norm) || norm > blowup_cap)
            throw BlowUpError(h.grid.node(k + 1), norm);
        f.Psi_nodes.push_back(std::move(next));
    }
    return f;
}

// With M(t) = Psi(T) Psi(t)^-1 split into n x n blocks:
//   Lambda(t) = G M12 - M22,   P(t) = -Lambda(t)^-1 (G M11 - M21).
// Psi(t)^-1 is applied by LU solves. RepresentationSingular when cond(Lambda(t)) > 1e10.
inline RepresentationResult representation(const GameProblem& problem, const FundamentalMatrix& psi, const Matrix& G) {
    const auto n = problem.n();
    if (G.rows() != n || G.cols() != n)
        throw ContractViolation("representation: terminal weight has the wrong shape");
    if (psi.Psi_nodes.size() != psi.grid.size() || psi.Psi_nodes.front().rows() != 2 * n)
        throw ContractViolation("representation: fundamental matrix does not match the problem");
    RepresentationResult res;
    res.grid = psi.grid;
    const Matrix& psi_T = psi.Psi_nodes.back();
    for (std::size_t k = 0; k < psi.grid.size(); ++k) {
        // M = Psi(T) Psi(t)^-1  <=>  Psi(t)' M' = Psi(T)'
        const Matrix M = psi.Psi_nodes[k].transpose().partialPivLu().solve(psi_T.transpose()).transpose();
        const Matrix lambda = G * M.topRightCorner(n, n) - M.bottomRightCorner(n, n);
        const double cond = detail::condition_number(lambda);
        if (!(cond <= kMaxLambdaCondition))
            throw RepresentationSingular(psi.grid.node(k), cond);
        const Matrix p_raw = -lambda.partialPivLu().solve(G * M.topLeftCorner(n, n) - M.bottomLeftCorner(n, n));
        const double defect = (p_raw - p_raw.transpose()).norm();
        res.Lambda_nodes.push_back(lambda);
        res.condition_numbers.push_back(cond);
        res.symmetry_defects.push_back(defect);
        res.max_symmetry_defect = std::max(res.max_symmetry_defect, defect);
        res.P_rep_nodes.push_back(detail::symmetrize(p_raw));
    }
    return res;
}

// Cross-validation of the noise-free game: (A3) certificate, backward game Riccati sweep and the
// fundamental-matrix representation, side by side.
struct EquivalenceReport {
    CertificateReport certificate;
    SweepOutcome game;
    std::optional<RepresentationResult> representation;
    std::string representation_error;
    double cross_error = std::numeric_limits<double>::quiet_NaN();  // max_t |P_rep - P_game|_F
    std::vector<double> lambdas;
    std::vector<double> lambda_errors;  // |P_lambda(0) - P_rep(0)|_F, NaN when that sweep failed
    bool lambda_errors_decreasing = false;
    // Game Riccati and representation both succeed while (A3) is not certified.
    bool a3_not_necessary = false;
    // The game sweep and the representation either both succeed or both fail.
    bool consistent = false;

    bool representation_ok() const noexcept { return representation.has_value(); }
};

inline EquivalenceReport equivalence_report(const GameProblem& problem, const SolverConfig& config,
                                            const std::vector<double>& lambdas = {0.1, 0.01, 0.001}) {
    config.validate();
    EquivalenceReport rep;
    rep.certificate = certify_A3(problem, config);
    rep.game = try_solve_riccati(problem, config, SolutionKind::game);
    try {
        const auto psi = fundamental_matrix(hamiltonian(problem, config.n_steps, config.eps_reg), config.blowup_cap);
        rep.representation = representation(problem, psi, problem.cost().G);
    } catch (const Error& e) {
        rep.representation_error = e.what();
    }
    if (rep.representation_ok() && rep.game.solved()) {
        double worst = 0.0;
        const auto& P = rep.game.solution->P_nodes;
        for (std::size_t k = 0; k < P.size(); ++k)
            worst = std::max(worst, (rep.representation->P_rep_nodes[k] - P[k]).norm());
        rep.cross_error = worst;
    }
    if (rep.representation_ok()) {
        rep.lambdas = lambdas;
        const auto family = solve_lambda_family(problem, lambdas, config);
        const Matrix& p0 = rep.representation->P_rep_nodes.front();
        for (std::size_t i = 0; i < lambdas.size(); ++i)
            rep.lambda_errors.push_back(family.P0_values[i] ? (*family.P0_values[i] - p0).norm()
                                                            : std::numeric_limits<double>::quiet_NaN());
        rep.lambda_errors_decreasing = true;
        for (std::size_t i = 0; i < rep.lambda_errors.size(); ++i)
            if (!std::isfinite(rep.lambda_errors[i]) || (i > 0 && !(rep.lambda_errors[i] < rep.lambda_errors[i - 1])))
                rep.lambda_errors_decreasing = false;
    }
    rep.a3_not_necessary = rep.game.solved() && rep.representation_ok() && !rep.certificate.certified();
    rep.consistent = rep.game.solved() == rep.representation_ok();
    return rep;
}

} // namespace lqgame
