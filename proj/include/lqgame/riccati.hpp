#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"

namespace lqgame {

enum class SolutionKind { game, player1, player2 };

inline const char* to_string(SolutionKind k) {
    switch (k) {
    case SolutionKind::game: return "game";
    case SolutionKind::player1: return "player1";
    case SolutionKind::player2: return "player2";
    }
    return "?";
}

struct SolverConfig {
    double eps_reg = 1e-6;    // strict regularity threshold for the player margins
    double blowup_cap = 1e8;  // abort when |P|_F exceeds this
    std::size_t n_steps = 2000;

    void validate() const {
        if (!(eps_reg > 0.0))
            throw ContractViolation("eps_reg must be positive");
        if (!(blowup_cap > 1.0))
            throw ContractViolation("blowup_cap must exceed 1");
        if (n_steps < 2)
            throw ContractViolation("n_steps must be at least 2");
    }
};

// Solution of a Riccati equation on a uniform grid, with the regularity margins seen at
// every node. Player-1 solutions leave margin2_nodes empty and vice versa.
struct RiccatiSolution {
    TimeGrid grid;
    std::vector<Matrix> P_nodes;
    std::vector<double> margin1_nodes;
    std::vector<double> margin2_nodes;
    SolutionKind kind = SolutionKind::game;

    const Matrix& P0() const { return P_nodes.front(); }
    const Matrix& PT() const { return P_nodes.back(); }
};

namespace detail {

struct RhsEval {
    Matrix dPdt;
    double margin1 = std::numeric_limits<double>::quiet_NaN();
    double margin2 = std::numeric_limits<double>::quiet_NaN();
};

inline RhsEval riccati_rhs_at(const NodeCoefficients& c, double t, const Matrix& P, SolutionKind kind,
                              double eps_reg) {
    RhsEval out;
    const Matrix pd = P * c.D;
    Matrix gain_term;
    switch (kind) {
    case SolutionKind::game: {
        const RiccatiBlocks b = assemble_blocks(c, P);
        out.margin1 = b.margin1;
        out.margin2 = b.margin2;
        // Strict: a margin exactly at +-eps_reg is a violation. NaN margins also fail here.
        if (!(b.margin1 > eps_reg))
            throw RegularityError(t, 1, b.margin1);
        if (!(b.margin2 < -eps_reg))
            throw RegularityError(t, 2, b.margin2);
        const Matrix r_inv = block_inverse(b.R_P.topLeftCorner(c.m1, c.m1), b.R_P.topRightCorner(c.m1, c.m2),
                                           b.R_P.bottomRightCorner(c.m2, c.m2));
        gain_term = b.S_P.transpose() * r_inv * b.S_P;
        break;
    }
    case SolutionKind::player1: {
        const Matrix m = symmetrize(c.R.topLeftCorner(c.m1, c.m1) + c.D1().transpose() * pd.leftCols(c.m1));
        out.margin1 = sym_eig_extremes(m).lambda_min;
        if (!(out.margin1 > eps_reg))
            throw RegularityError(t, 1, out.margin1);
        const Matrix s = c.B1().transpose() * P + pd.leftCols(c.m1).transpose() * c.C + c.S1();
        gain_term = s.transpose() * sym_inverse(m, "M") * s;
        break;
    }
    case SolutionKind::player2: {
        const Matrix nblk = symmetrize(c.R.bottomRightCorner(c.m2, c.m2) + c.D2().transpose() * pd.rightCols(c.m2));
        out.margin2 = sym_eig_extremes(nblk).lambda_max;
        if (!(out.margin2 < -eps_reg))
            throw RegularityError(t, 2, out.margin2);
        const Matrix s = c.B2().transpose() * P + pd.rightCols(c.m2).transpose() * c.C + c.S2();
        gain_term = s.transpose() * sym_inverse(nblk, "N") * s;
        break;
    }
    }
    const Matrix pa = P * c.A;
    const Matrix f = pa + pa.transpose() + c.C.transpose() * P * c.C + c.Q - gain_term;
    out.dPdt = -symmetrize(f);
    return out;
}

} // namespace detail

// dP/dt of the game Riccati equation (kind=game) or of a single-player equation, i.e.
//   -[PA + A'P + C'PC + Q - (PB + C'PD + S')(R + D'PD)^{-1}(B'P + D'PC + S)]
// with B, D, S, R restricted to the player's blocks for player kinds.
// Throws RegularityError when a required margin is not strictly beyond eps_reg.
inline Matrix riccati_rhs(const GameProblem& problem, double t, const Matrix& P, SolutionKind kind,
                          double eps_reg = SolverConfig{}.eps_reg) {
    if (P.rows() != problem.n() || P.cols() != problem.n())
        throw ContractViolation("riccati_rhs: P has the wrong shape");
    return detail::riccati_rhs_at(problem.at(t), t, P, kind, eps_reg).dPdt;
}

// Backward classical RK4 sweep from P(T) = G on the uniform grid, symmetrizing every stage and
// checking regularity at every stage evaluation. Throws RegularityError or BlowUpError carrying
// the partial path computed before the failure.
inline RiccatiSolution solve_riccati(const GameProblem& problem, const SolverConfig& config, SolutionKind kind) {
    config.validate();
    const TimeGrid grid(problem.horizon(), config.n_steps);
    const std::size_t last = grid.n_steps();

    RiccatiSolution sol;
    sol.grid = grid;
    sol.kind = kind;
    sol.P_nodes.resize(grid.size());
    std::vector<double> m1(grid.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> m2(grid.size(), std::numeric_limits<double>::quiet_NaN());

    auto partial_from = [&](std::size_t first) {
        PartialSolution p;
        for (std::size_t k = first; k <= last; ++k) {
            p.times.push_back(grid.node(k));
            p.P.push_back(sol.P_nodes[k]);
        }
        return p;
    };
    auto eval = [&](const NodeCoefficients& c, double t, const Matrix& P, std::size_t first_done) {
        try {
            return detail::riccati_rhs_at(c, t, P, kind, config.eps_reg);
        } catch (const RegularityError& e) {
            throw RegularityError(e.time(), e.player(), e.margin(), partial_from(first_done));
        }
    };
    auto check_size = [&](const Matrix& P, double t, std::size_t first_done) {
        const double norm = P.norm();
        if (!std::isfinite(norm) || norm > config.blowup_cap)
            throw BlowUpError(t, norm, partial_from(first_done));
    };

    sol.P_nodes[last] = problem.cost().G;
    const double h = grid.dt();
    NodeCoefficients c_hi = problem.at(grid.node(last));
    for (std::size_t k = last; k > 0; --k) {
        const double t = grid.node(k);
        const double t_mid = t - 0.5 * h;
        const double t_lo = grid.node(k - 1);
        const Matrix& P = sol.P_nodes[k];

        const auto k1 = eval(c_hi, t, P, k);
        m1[k] = k1.margin1;
        m2[k] = k1.margin2;

        const NodeCoefficients c_mid = problem.at(t_mid);
        Matrix y = detail::symmetrize(P - 0.5 * h * k1.dPdt);
        check_size(y, t_mid, k);
        const auto k2 = eval(c_mid, t_mid, y, k);
        y = detail::symmetrize(P - 0.5 * h * k2.dPdt);
        check_size(y, t_mid, k);
        const auto k3 = eval(c_mid, t_mid, y, k);
        NodeCoefficients c_lo = problem.at(t_lo);
        y = detail::symmetrize(P - h * k3.dPdt);
        check_size(y, t_lo, k);
        const auto k4 = eval(c_lo, t_lo, y, k);

        Matrix next = detail::symmetrize(P - (h / 6.0) * (k1.dPdt + 2.0 * k2.dPdt + 2.0 * k3.dPdt + k4.dPdt));
        check_size(next, t_lo, k);
        sol.P_nodes[k - 1] = std::move(next);
        c_hi = std::move(c_lo);
    }
    const auto k0 = eval(c_hi, 0.0, sol.P_nodes[0], 0);
    m1[0] = k0.margin1;
    m2[0] = k0.margin2;

    if (kind != SolutionKind::player2)
        sol.margin1_nodes = std::move(m1);
    if (kind != SolutionKind::player1)
        sol.margin2_nodes = std::move(m2);
    return sol;
}

// ============================================================================
// Certification of the uniform convexity-concavity condition
// ============================================================================

enum class CertificateStatus { certified, not_certified };

enum class FailureCause { none, regularity, blowup, singular };

inline const char* to_string(FailureCause c) {
    switch (c) {
    case FailureCause::none: return "none";
    case FailureCause::regularity: return "regularity";
    case FailureCause::blowup: return "blowup";
    case FailureCause::singular: return "singular";
    }
    return "?";
}

// Outcome of one backward sweep, with the failure folded into data.
struct SweepOutcome {
    std::optional<RiccatiSolution> solution;
    FailureCause cause = FailureCause::none;
    double failure_time = std::numeric_limits<double>::quiet_NaN();
    double failure_margin = std::numeric_limits<double>::quiet_NaN();
    std::string message;

    bool solved() const noexcept { return solution.has_value(); }
};

inline SweepOutcome try_solve_riccati(const GameProblem& problem, const SolverConfig& config, SolutionKind kind) {
    SweepOutcome out;
    try {
        out.solution = solve_riccati(problem, config, kind);
    } catch (const RegularityError& e) {
        out.cause = FailureCause::regularity;
        out.failure_time = e.time();
        out.failure_margin = e.margin();
        out.message = e.what();
    } catch (const BlowUpError& e) {
        out.cause = FailureCause::blowup;
        out.failure_time = e.time();
        out.message = e.what();
    } catch (const SingularBlockError& e) {
        out.cause = FailureCause::singular;
        out.message = e.what();
    }
    return out;
}

struct CertificateReport {
    CertificateStatus status = CertificateStatus::not_certified;
    SweepOutcome player1;
    SweepOutcome player2;
    int failing_side = 0;  // 0 when certified, otherwise the first failing player
    double failure_time = std::numeric_limits<double>::quiet_NaN();
    double min_margin1 = std::numeric_limits<double>::quiet_NaN();
    double max_margin2 = std::numeric_limits<double>::quiet_NaN();

    bool certified() const noexcept { return status == CertificateStatus::certified; }
};

// Solves both single-player Riccati equations. CERTIFIED when both are strongly regular on
// [0,T]; this is a sufficient certificate only, never a refutation.
inline CertificateReport certify_A3(const GameProblem& problem, const SolverConfig& config) {
    CertificateReport rep;
    rep.player1 = try_solve_riccati(problem, config, SolutionKind::player1);
    rep.player2 = try_solve_riccati(problem, config, SolutionKind::player2);
    if (rep.player1.solved()) {
        const auto& m = rep.player1.solution->margin1_nodes;
        rep.min_margin1 = *std::min_element(m.begin(), m.end());
    }
    if (rep.player2.solved()) {
        const auto& m = rep.player2.solution->margin2_nodes;
        rep.max_margin2 = *std::max_element(m.begin(), m.end());
    }
    if (rep.player1.solved() && rep.player2.solved()) {
        rep.status = CertificateStatus::certified;
    } else if (!rep.player1.solved()) {
        rep.failing_side = 1;
        rep.failure_time = rep.player1.failure_time;
    } else {
        rep.failing_side = 2;
        rep.failure_time = rep.player2.failure_time;
    }
    return rep;
}

// Radius r = alpha / (4(|D|_inf^2 + 1)) of the ball around a terminal value inside which the
// game Riccati right-hand side stays regular; alpha is the weaker of the two player margins.
// Diagnostic only.
inline double local_solvability_radius(const GameProblem& problem, const RiccatiSolution& p1,
                                       const RiccatiSolution& p2) {
    const double min1 = *std::min_element(p1.margin1_nodes.begin(), p1.margin1_nodes.end());
    const double max2 = *std::max_element(p2.margin2_nodes.begin(), p2.margin2_nodes.end());
    const double alpha = std::min(min1, -max2);
    double d_norm = 0.0;
    for (std::size_t k = 0; k < p1.grid.size(); ++k) {
        const Matrix d = problem.at(p1.grid.node(k)).D;
        d_norm = std::max(d_norm, Eigen::JacobiSVD<Matrix>(d).singularValues()(0));
    }
    return alpha / (4.0 * (d_norm * d_norm + 1.0));
}

// ============================================================================
// Comparison P1 <= P <= P2
// ============================================================================

struct ComparisonReport {
    double min_lower = std::numeric_limits<double>::infinity();  // min_k lambda_min(P - P1)
    double min_upper = std::numeric_limits<double>::infinity();  // min_k lambda_min(P2 - P)
    std::size_t worst_lower_node = 0;
    std::size_t worst_upper_node = 0;
    std::vector<std::size_t> violating_nodes;
    bool pass = true;
};

inline constexpr double kComparisonTolerance = 1e-8;

inline ComparisonReport comparison_check(const RiccatiSolution& game, const RiccatiSolution& p1,
                                         const RiccatiSolution& p2) {
    if (!(game.grid == p1.grid) || !(game.grid == p2.grid) || game.P_nodes.size() != p1.P_nodes.size() ||
        game.P_nodes.size() != p2.P_nodes.size())
        throw ContractViolation("comparison_check: solutions are on different grids");
    ComparisonReport rep;
    for (std::size_t k = 0; k < game.P_nodes.size(); ++k) {
        const double lower = sym_eig_extremes(detail::symmetrize(game.P_nodes[k] - p1.P_nodes[k])).lambda_min;
        const double upper = sym_eig_extremes(detail::symmetrize(p2.P_nodes[k] - game.P_nodes[k])).lambda_min;
        if (lower < rep.min_lower) {
            rep.min_lower = lower;
            rep.worst_lower_node = k;
        }
        if (upper < rep.min_upper) {
            rep.min_upper = upper;
            rep.worst_upper_node = k;
        }
        if (lower < -kComparisonTolerance || upper < -kComparisonTolerance)
            rep.violating_nodes.push_back(k);
    }
    rep.pass = rep.violating_nodes.empty();
    return rep;
}

// ============================================================================
// Regularized family R11 + lambda I, R22 - lambda I
// ============================================================================

struct RegularizedFamily {
    std::vector<double> lambdas;
    std::vector<SweepOutcome> outcomes;
    std::vector<std::optional<Matrix>> P0_values;

    bool solved(std::size_t i) const { return outcomes.at(i).solved(); }
    const RiccatiSolution& solution(std::size_t i) const { return *outcomes.at(i).solution; }
};

inline RegularizedFamily solve_lambda_family(const GameProblem& problem, const std::vector<double>& lambdas,
                                             const SolverConfig& config) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0))
            throw ContractViolation("solve_lambda_family: every lambda must be positive");
        if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
            throw ContractViolation("solve_lambda_family: lambdas must be strictly decreasing");
    }
    RegularizedFamily fam;
    fam.lambdas = lambdas;
    for (double lambda : lambdas) {
        fam.outcomes.push_back(try_solve_riccati(problem.with_regularization(lambda), config, SolutionKind::game));
        const auto& o = fam.outcomes.back();
        fam.P0_values.push_back(o.solved() ? std::optional<Matrix>(o.solution->P0()) : std::nullopt);
    }
    return fam;
}

} // namespace lqgame
