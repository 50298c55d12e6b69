#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "core.hpp"
#include "riccati.hpp"

namespace lqgame {

// Time-varying saddle gain Theta(t) on the solution grid. The first m1 rows act for player 1,
// the last m2 rows for player 2. Between nodes the gain is linearly interpolated.
struct FeedbackLaw {
    TimeGrid grid;
    std::vector<Matrix> theta_nodes;
    Eigen::Index m1 = 0;
    Eigen::Index m2 = 0;

    Matrix theta1(std::size_t k) const { return theta_nodes.at(k).topRows(m1); }
    Matrix theta2(std::size_t k) const { return theta_nodes.at(k).bottomRows(m2); }

    Matrix at(double t) const {
        const double s = std::clamp(t / grid.horizon(), 0.0, 1.0) * static_cast<double>(grid.n_steps());
        const auto i = std::min(static_cast<std::size_t>(std::floor(s)), grid.n_steps() - 1);
        const double w = s - static_cast<double>(i);
        if (w == 0.0)
            return theta_nodes[i];
        return (1.0 - w) * theta_nodes[i] + w * theta_nodes[i + 1];
    }
};

// Theta = -(R + D'PD)^{-1} (B'P + D'PC + S) at every node of a strongly regular game solution.
inline FeedbackLaw feedback_gain(const GameProblem& problem, const RiccatiSolution& sol) {
    if (sol.kind != SolutionKind::game)
        throw ContractViolation("feedback_gain needs a game Riccati solution");
    if (sol.margin1_nodes.size() != sol.P_nodes.size() || sol.margin2_nodes.size() != sol.P_nodes.size())
        throw ContractViolation("feedback_gain: solution is missing regularity margins");
    for (std::size_t k = 0; k < sol.P_nodes.size(); ++k)
        if (!(sol.margin1_nodes[k] > 0.0) || !(sol.margin2_nodes[k] < 0.0))
            throw ContractViolation("feedback_gain: solution is not strongly regular at node " + std::to_string(k));

    FeedbackLaw law;
    law.grid = sol.grid;
    law.m1 = problem.m1();
    law.m2 = problem.m2();
    law.theta_nodes.reserve(sol.P_nodes.size());
    for (std::size_t k = 0; k < sol.P_nodes.size(); ++k) {
        const NodeCoefficients c = problem.at(sol.grid.node(k));
        const RiccatiBlocks b = assemble_blocks(c, sol.P_nodes[k]);
        const Matrix r_inv = block_inverse(b.R_P.topLeftCorner(c.m1, c.m1), b.R_P.topRightCorner(c.m1, c.m2),
                                           b.R_P.bottomRightCorner(c.m2, c.m2));
        law.theta_nodes.push_back(-r_inv * b.S_P);
    }
    return law;
}

// Per-node |(R + D'PD) Theta + (B'P + D'PC + S)|_F.
inline std::vector<double> stationarity_residual(const GameProblem& problem, const RiccatiSolution& sol,
                                                 const FeedbackLaw& law) {
    if (!(law.grid == sol.grid))
        throw ContractViolation("stationarity_residual: grid mismatch");
    std::vector<double> out;
    out.reserve(sol.P_nodes.size());
    for (std::size_t k = 0; k < sol.P_nodes.size(); ++k) {
        const RiccatiBlocks b = assemble_blocks(problem, sol.P_nodes[k], sol.grid.node(k));
        out.push_back((b.R_P * law.theta_nodes[k] + b.S_P).norm());
    }
    return out;
}

// <P(0)x, x>
inline double game_value(const RiccatiSolution& sol, const Vector& x) {
    if (sol.kind != SolutionKind::game)
        throw ContractViolation("game_value needs a game Riccati solution");
    if (x.size() != sol.P0().rows())
        throw ContractViolation("game_value: state has the wrong dimension");
    return x.dot(sol.P0() * x);
}

struct ClosedLoopSystem {
    TimeGrid grid;
    std::vector<Matrix> drift_nodes;      // A + B Theta
    std::vector<Matrix> diffusion_nodes;  // C + D Theta
};

inline ClosedLoopSystem closed_loop(const GameProblem& problem, const FeedbackLaw& law) {
    if (law.theta_nodes.size() != law.grid.size() || law.grid.horizon() != problem.horizon())
        throw ContractViolation("closed_loop: law grid does not match the problem horizon");
    ClosedLoopSystem sys;
    sys.grid = law.grid;
    for (std::size_t k = 0; k < law.grid.size(); ++k) {
        const NodeCoefficients c = problem.at(law.grid.node(k));
        if (law.theta_nodes[k].rows() != c.B.cols() || law.theta_nodes[k].cols() != c.A.rows())
            throw ContractViolation("closed_loop: gain has the wrong shape");
        sys.drift_nodes.push_back(c.A + c.B * law.theta_nodes[k]);
        sys.diffusion_nodes.push_back(c.C + c.D * law.theta_nodes[k]);
    }
    return sys;
}

// E[X(t)] of the closed loop: the mean obeys dm/dt = (A + B Theta) m. RK4 on the grid with the
// drift linearly interpolated at midpoints.
inline std::vector<Vector> mean_flow(const ClosedLoopSystem& sys, const Vector& x) {
    std::vector<Vector> out;
    out.reserve(sys.grid.size());
    out.push_back(x);
    const double h = sys.grid.dt();
    for (std::size_t k = 0; k + 1 < sys.grid.size(); ++k) {
        const Matrix& a0 = sys.drift_nodes[k];
        const Matrix& a1 = sys.drift_nodes[k + 1];
        const Matrix am = 0.5 * (a0 + a1);
        const Vector& m = out.back();
        const Vector k1 = a0 * m;
        const Vector k2 = am * (m + 0.5 * h * k1);
        const Vector k3 = am * (m + 0.5 * h * k2);
        const Vector k4 = a1 * (m + h * k3);
        out.push_back(m + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    return out;
}

// (X, Y, Z) with Y = P X and Z = P (C X + D u), u = Theta X.
struct AdjointTriple {
    std::vector<Vector> X_nodes;
    std::vector<Vector> Y_nodes;
    std::vector<Vector> Z_nodes;
};

inline AdjointTriple adjoint_triple(const GameProblem& problem, const RiccatiSolution& sol, const FeedbackLaw& law,
                                    const std::vector<Vector>& X_path) {
    if (!(law.grid == sol.grid) || X_path.size() != sol.P_nodes.size())
        throw ContractViolation("adjoint_triple: grid mismatch");
    AdjointTriple out;
    out.X_nodes = X_path;
    for (std::size_t k = 0; k < X_path.size(); ++k) {
        const NodeCoefficients c = problem.at(sol.grid.node(k));
        const Vector u = law.theta_nodes[k] * X_path[k];
        out.Y_nodes.push_back(sol.P_nodes[k] * X_path[k]);
        out.Z_nodes.push_back(sol.P_nodes[k] * (c.C * X_path[k] + c.D * u));
    }
    return out;
}

// Per-node |B'Y + D'Z + S X + R u| along X_path. Vanishes up to rounding for the saddle law.
inline std::vector<double> fbsde_residual(const GameProblem& problem, const RiccatiSolution& sol,
                                          const FeedbackLaw& law, const std::vector<Vector>& X_path) {
    const AdjointTriple triple = adjoint_triple(problem, sol, law, X_path);
    std::vector<double> out;
    out.reserve(X_path.size());
    for (std::size_t k = 0; k < X_path.size(); ++k) {
        const NodeCoefficients c = problem.at(sol.grid.node(k));
        const Vector u = law.theta_nodes[k] * X_path[k];
        const Vector r = c.B.transpose() * triple.Y_nodes[k] + c.D.transpose() * triple.Z_nodes[k] +
                         c.S * X_path[k] + c.R * u;
        out.push_back(r.norm());
    }
    return out;
}

} // namespace lqgame
