#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "core.hpp"
#include "random.hpp"
#include "riccati.hpp"
#include "synthesis.hpp"

namespace lqgame {

// ============================================================================
// Control laws
// ============================================================================

// A player's control: state feedback u = K_k X, a deterministic open-loop path u_k, or a constant.
// Gains and paths are given at the nodes of the simulation grid.
class ControlLaw {
public:
    enum class Kind { feedback, open_loop_deterministic, constant };

    static ControlLaw feedback(std::vector<Matrix> gains) {
        ControlLaw c(Kind::feedback);
        c.gains_ = std::move(gains);
        return c;
    }

    // Rows of a synthesized law for one player (1 or 2), interpolated onto `grid`.
    static ControlLaw feedback(const FeedbackLaw& law, int player, const TimeGrid& grid) {
        std::vector<Matrix> gains;
        gains.reserve(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const Matrix theta = law.grid == grid ? law.theta_nodes[k] : law.at(grid.node(k));
            gains.push_back(player == 1 ? Matrix(theta.topRows(law.m1)) : Matrix(theta.bottomRows(law.m2)));
        }
        return feedback(std::move(gains));
    }

    static ControlLaw open_loop(std::vector<Vector> values) {
        ControlLaw c(Kind::open_loop_deterministic);
        c.path_ = std::move(values);
        return c;
    }

    static ControlLaw constant(Vector value) {
        ControlLaw c(Kind::constant);
        c.constant_ = std::move(value);
        return c;
    }

    static ControlLaw zero(Eigen::Index dim) { return constant(Vector::Zero(dim)); }

    Kind kind() const noexcept { return kind_; }

    Eigen::Index dim() const {
        switch (kind_) {
        case Kind::feedback: return gains_.empty() ? 0 : gains_.front().rows();
        case Kind::open_loop_deterministic: return path_.empty() ? 0 : path_.front().size();
        case Kind::constant: return constant_.size();
        }
        return 0;
    }

    // Throws ContractViolation unless the law fits a player with `m` controls on `grid` with state dim n.
    void check(const TimeGrid& grid, Eigen::Index n, Eigen::Index m, const std::string& who) const {
        if (dim() != m)
            throw ContractViolation(who + ": control dimension " + std::to_string(dim()) + " != " + std::to_string(m));
        if (kind_ == Kind::feedback) {
            if (gains_.size() != grid.size())
                throw ContractViolation(who + ": feedback gains are not sampled on the simulation grid");
            for (const auto& g : gains_)
                if (g.rows() != m || g.cols() != n)
                    throw ContractViolation(who + ": feedback gain has the wrong shape");
        } else if (kind_ == Kind::open_loop_deterministic) {
            if (path_.size() != grid.size())
                throw ContractViolation(who + ": open-loop path is not sampled on the simulation grid");
            for (const auto& v : path_)
                if (v.size() != m)
                    throw ContractViolation(who + ": open-loop path has the wrong dimension");
        }
    }

    void eval(std::size_t k, const Vector& X, Vector& out) const {
        switch (kind_) {
        case Kind::feedback: out.noalias() = gains_[k] * X; break;
        case Kind::open_loop_deterministic: out = path_[k]; break;
        case Kind::constant: out = constant_; break;
        }
    }

private:
    explicit ControlLaw(Kind k) : kind_(k) {}

    Kind kind_;
    std::vector<Matrix> gains_;
    std::vector<Vector> path_;
    Vector constant_;
};

// ============================================================================
// Path simulation and cost quadrature
// ============================================================================

struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

// Mean and standard error (sample std / sqrt(n)) of per-path values.
inline CostEstimate summarize(const std::vector<double>& values) {
    CostEstimate est;
    est.n_paths = values.size();
    if (values.empty())
        return est;
    double sum = 0.0;
    for (double v : values)
        sum += v;
    est.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - est.mean) * (v - est.mean);
        est.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
    }
    return est;
}

// Simulated trajectories. Brownian increments are stored row-per-path and depend only on
// (seed, path index, grid), so control variants run with one seed share their noise.
struct PathEnsemble {
    TimeGrid grid;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    Matrix increments;            // n_paths x n_steps, dW_k ~ N(0, dt)
    std::vector<Matrix> X_paths;  // each n x (n_steps + 1)
    std::vector<Matrix> u1_paths; // each m1 x (n_steps + 1)
    std::vector<Matrix> u2_paths; // each m2 x (n_steps + 1)
};

namespace detail {

// Per-node coefficients stacked for z = [X; u1; u2]:
// flow = [[A, B], [C, D]] gives drift (top n rows) and diffusion (bottom n rows),
// weight = [[Q, S'], [S, R]] gives the running cost z' W z.
struct StepCoefficients {
    Matrix flow;
    Matrix weight;
};

inline std::vector<StepCoefficients> step_coefficients(const GameProblem& problem, const TimeGrid& grid) {
    if (grid.horizon() != problem.horizon())
        throw ContractViolation("simulation grid horizon differs from the problem horizon");
    const auto n = problem.n(), m = problem.m();
    std::vector<StepCoefficients> out;
    out.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const NodeCoefficients c = problem.at(grid.node(k));
        StepCoefficients s;
        s.flow.resize(2 * n, n + m);
        s.flow << c.A, c.B, c.C, c.D;
        s.weight.resize(n + m, n + m);
        s.weight << c.Q, c.S.transpose(), c.S, c.R;
        out.push_back(std::move(s));
    }
    return out;
}

// Scratch vectors so the inner loops do not allocate.
struct Workspace {
    Eigen::Index n, m1, m2;
    Vector z, wz, flow;

    Workspace(Eigen::Index n_, Eigen::Index m1_, Eigen::Index m2_)
        : n(n_), m1(m1_), m2(m2_), z(n_ + m1_ + m2_), wz(n_ + m1_ + m2_), flow(2 * n_) {}

    void pack(const Vector& X, const Vector& u1, const Vector& u2) {
        z.head(n) = X;
        z.segment(n, m1) = u1;
        z.tail(m2) = u2;
    }
};

// <QX,X> + 2<S1 X,u1> + 2<S2 X,u2> + <R11 u1,u1> + 2<R12 u2,u1> + <R22 u2,u2>
inline double running_cost(const StepCoefficients& c, const Vector& X, const Vector& u1, const Vector& u2,
                           Workspace& ws) {
    ws.pack(X, u1, u2);
    ws.wz.noalias() = c.weight * ws.z;
    return ws.z.dot(ws.wz);
}

// X <- X + (A X + B1 u1 + B2 u2) dt + (C X + D1 u1 + D2 u2) dW, reusing the z packed by the
// preceding running_cost call when `packed` is set.
inline void euler_step(const StepCoefficients& c, Vector& X, const Vector& u1, const Vector& u2, double dt, double dW,
                       Workspace& ws, bool packed = false) {
    if (!packed)
        ws.pack(X, u1, u2);
    ws.flow.noalias() = c.flow * ws.z;
    X += dt * ws.flow.head(ws.n) + dW * ws.flow.tail(ws.n);
}

inline void fill_increments(std::uint64_t seed, std::size_t path, double dt, double* out, std::size_t n_steps) {
    NormalStream stream(derive_seed(seed, path));
    const double scale = std::sqrt(dt);
    for (std::size_t k = 0; k < n_steps; ++k)
        out[k] = scale * stream.next();
}

} // namespace detail

// Euler-Maruyama simulation of the controlled state equation with both players' laws.
inline PathEnsemble simulate(const GameProblem& problem, const ControlLaw& u1, const ControlLaw& u2, const Vector& x,
                             const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed) {
    if (n_paths < 1)
        throw ContractViolation("simulate: need at least one path");
    if (x.size() != problem.n())
        throw ContractViolation("simulate: initial state has the wrong dimension");
    u1.check(grid, problem.n(), problem.m1(), "player 1 law");
    u2.check(grid, problem.n(), problem.m2(), "player 2 law");
    const auto coeffs = detail::step_coefficients(problem, grid);
    const std::size_t steps = grid.n_steps();
    const double dt = grid.dt();

    PathEnsemble ens;
    ens.grid = grid;
    ens.n_paths = n_paths;
    ens.seed = seed;
    ens.increments.resize(static_cast<Eigen::Index>(n_paths), static_cast<Eigen::Index>(steps));
    ens.X_paths.resize(n_paths);
    ens.u1_paths.resize(n_paths);
    ens.u2_paths.resize(n_paths);

    parallel_for(n_paths, [&](std::size_t p) {
        std::vector<double> dw(steps);
        detail::fill_increments(seed, p, dt, dw.data(), steps);
        detail::Workspace ws(problem.n(), problem.m1(), problem.m2());
        Matrix& xs = ens.X_paths[p];
        Matrix& us1 = ens.u1_paths[p];
        Matrix& us2 = ens.u2_paths[p];
        xs.resize(problem.n(), static_cast<Eigen::Index>(steps + 1));
        us1.resize(problem.m1(), static_cast<Eigen::Index>(steps + 1));
        us2.resize(problem.m2(), static_cast<Eigen::Index>(steps + 1));
        Vector X = x, a(problem.m1()), b(problem.m2());
        for (std::size_t k = 0; k <= steps; ++k) {
            u1.eval(k, X, a);
            u2.eval(k, X, b);
            xs.col(static_cast<Eigen::Index>(k)) = X;
            us1.col(static_cast<Eigen::Index>(k)) = a;
            us2.col(static_cast<Eigen::Index>(k)) = b;
            if (k == steps)
                break;
            detail::euler_step(coeffs[k], X, a, b, dt, dw[k], ws);
            if (!X.allFinite())
                throw SimulationDiverged(p, k + 1);
        }
        for (std::size_t k = 0; k < steps; ++k)
            ens.increments(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = dw[k];
    });
    return ens;
}

// Per-path cost <G X(T), X(T)> + trapezoid quadrature of the running cost.
inline std::vector<double> path_costs(const GameProblem& problem, const PathEnsemble& ens) {
    const auto coeffs = detail::step_coefficients(problem, ens.grid);
    const Matrix& G = problem.cost().G;
    const double dt = ens.grid.dt();
    const std::size_t steps = ens.grid.n_steps();
    std::vector<double> out(ens.n_paths);
    parallel_for(ens.n_paths, [&](std::size_t p) {
        const Matrix& xs = ens.X_paths.at(p);
        const Matrix& us1 = ens.u1_paths.at(p);
        const Matrix& us2 = ens.u2_paths.at(p);
        if (xs.rows() != problem.n() || us1.rows() != problem.m1() || us2.rows() != problem.m2() ||
            xs.cols() != static_cast<Eigen::Index>(steps + 1))
            throw ContractViolation("estimate_cost: ensemble does not match the problem dimensions");
        detail::Workspace ws(problem.n(), problem.m1(), problem.m2());
        double integral = 0.0;
        Vector X(problem.n()), a(problem.m1()), b(problem.m2());
        for (std::size_t k = 0; k <= steps; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            X = xs.col(kk);
            a = us1.col(kk);
            b = us2.col(kk);
            const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
            integral += w * detail::running_cost(coeffs[k], X, a, b, ws);
        }
        const Vector xt = xs.col(static_cast<Eigen::Index>(steps));
        out[p] = xt.dot(G * xt) + dt * integral;
    });
    return out;
}

inline CostEstimate estimate_cost(const GameProblem& problem, const PathEnsemble& ens) {
    return summarize(path_costs(problem, ens));
}

// ============================================================================
// Empirical saddle verification
// ============================================================================

inline constexpr double kVerdictStandardErrors = 3.0;

// Absolute slack added to standard-error checks so estimates without sampling noise (SE at
// rounding level) are not judged on floating-point noise.
inline double rounding_floor(double reference) { return 1e-9 * (1.0 + std::abs(reference)); }

// |mean - reference| <= k SE + rounding_floor(reference)
inline bool within_se(const CostEstimate& e, double reference, double k = kVerdictStandardErrors) {
    return std::abs(e.mean - reference) <= k * e.std_error + rounding_floor(reference);
}

struct SaddleReport {
    double value_analytic = 0.0;
    CostEstimate value_mc;
    std::vector<CostEstimate> gaps_player1;  // J(x; u1* + v, u2*) - J(x; u*)
    std::vector<CostEstimate> gaps_player2;  // J(x; u1*, u2* + w) - J(x; u*)
    double threshold_se = kVerdictStandardErrors;
    // |J_h - J_2h| of the base pair on the coupled half-resolution grid; estimates the Euler
    // bias of value_mc. Zero when the grid has an odd number of steps.
    double discretization_allowance = 0.0;
    double value_tolerance = 0.0;  // threshold_se * SE + discretization_allowance + rounding floor
    bool value_ok = false;
    std::size_t failing_gaps1 = 0;
    std::size_t failing_gaps2 = 0;
    bool pass = false;
};

// Deterministic perturbation directions on `grid`: each component is a random combination of
// 1, cos(pi t/T), cos(2 pi t/T), cos(3 pi t/T); each direction is scaled to unit L2 norm on [0,T].
// Directions come in sign-flipped pairs (d, -d) so a first-order term in the gap cannot hide.
inline std::vector<std::vector<Vector>> perturbation_directions(const TimeGrid& grid, Eigen::Index dim,
                                                                std::size_t count, std::uint64_t seed) {
    constexpr int kBasis = 4;
    NormalStream stream(derive_seed(seed, 0x70657274ULL));
    std::vector<std::vector<Vector>> out;
    out.reserve(count);
    const double T = grid.horizon();
    for (std::size_t j = 0; j < count; ++j) {
        if (j % 2 == 1) {
            std::vector<Vector> flipped = out.back();
            for (auto& v : flipped)
                v = -v;
            out.push_back(std::move(flipped));
            continue;
        }
        Matrix coef(dim, kBasis);
        for (Eigen::Index i = 0; i < dim; ++i)
            for (int b = 0; b < kBasis; ++b)
                coef(i, b) = stream.next();
        std::vector<Vector> path(grid.size(), Vector(dim));
        double norm2 = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double t = grid.node(k);
            Vector basis(kBasis);
            for (int b = 0; b < kBasis; ++b)
                basis(b) = std::cos(b * std::numbers::pi * t / T);
            path[k] = coef * basis;
            const double w = (k == 0 || k + 1 == grid.size()) ? 0.5 : 1.0;
            norm2 += w * grid.dt() * path[k].squaredNorm();
        }
        const double scale = 1.0 / std::sqrt(norm2);
        for (auto& v : path)
            v *= scale;
        out.push_back(std::move(path));
    }
    return out;
}

// Simulates the closed-loop pair u* = Theta X* and, on the same Brownian increments, every
// unilateral deviation u1* + v (player 1) and u2* + w (player 2) against the opponent's fixed
// open-loop process. PASS iff every player-1 gap >= -3 SE, every player-2 gap <= 3 SE and the
// Monte Carlo value is within 3 SE (plus the Euler bias estimate) of <P(0)x, x>. Every threshold
// also carries rounding_floor(value).
inline SaddleReport verify_saddle(const GameProblem& problem, const RiccatiSolution& sol, const FeedbackLaw& law,
                                  const Vector& x, std::size_t n_perturbations, std::size_t n_paths,
                                  std::uint64_t seed) {
    if (n_paths < 2)
        throw ContractViolation("verify_saddle: need at least two paths");
    if (!(law.grid == sol.grid))
        throw ContractViolation("verify_saddle: law and solution grids differ");
    if (x.size() != problem.n())
        throw ContractViolation("verify_saddle: initial state has the wrong dimension");
    const TimeGrid& grid = law.grid;
    const auto n = problem.n(), m1 = problem.m1(), m2 = problem.m2();
    const auto coeffs = detail::step_coefficients(problem, grid);
    const std::size_t steps = grid.n_steps();
    const bool coarse = steps % 2 == 0;
    const double dt = grid.dt();
    const Matrix& G = problem.cost().G;

    std::vector<Matrix> theta1, theta2;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        theta1.push_back(law.theta1(k));
        theta2.push_back(law.theta2(k));
    }
    const auto dirs1 = perturbation_directions(grid, m1, n_perturbations, derive_seed(seed, 1));
    const auto dirs2 = perturbation_directions(grid, m2, n_perturbations, derive_seed(seed, 2));

    const std::size_t deviations = 2 * n_perturbations;
    const std::size_t columns = 2 + deviations;
    // per_path[p * columns + j]: j = 0 base cost, 1 base cost on the half grid minus base cost,
    // then player-1 gaps, then player-2 gaps
    std::vector<double> per_path(n_paths * columns);

    parallel_for(n_paths, [&](std::size_t p) {
        std::vector<double> dw(steps);
        detail::fill_increments(seed, p, dt, dw.data(), steps);
        detail::Workspace ws(n, m1, m2);
        Vector X = x;
        std::vector<Vector> Xv(deviations, x);
        std::vector<double> integral(1 + deviations, 0.0);
        Vector a(m1), b(m2), a_dev(m1), b_dev(m2);
        for (std::size_t k = 0; k <= steps; ++k) {
            const auto& c = coeffs[k];
            const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
            a.noalias() = theta1[k] * X;
            b.noalias() = theta2[k] * X;
            // deviations play against the opponent's baseline control process
            for (std::size_t j = 0; j < n_perturbations; ++j) {
                a_dev = a + dirs1[j][k];
                integral[1 + j] += w * detail::running_cost(c, Xv[j], a_dev, b, ws);
                if (k < steps)
                    detail::euler_step(c, Xv[j], a_dev, b, dt, dw[k], ws, true);
                b_dev = b + dirs2[j][k];
                Vector& xj = Xv[n_perturbations + j];
                integral[1 + n_perturbations + j] += w * detail::running_cost(c, xj, a, b_dev, ws);
                if (k < steps)
                    detail::euler_step(c, xj, a, b_dev, dt, dw[k], ws, true);
            }
            integral[0] += w * detail::running_cost(c, X, a, b, ws);
            if (k == steps)
                break;
            detail::euler_step(c, X, a, b, dt, dw[k], ws, true);
            if (!X.allFinite())
                throw SimulationDiverged(p, k + 1);
        }
        double* out = &per_path[p * columns];
        out[0] = X.dot(G * X) + dt * integral[0];
        for (std::size_t j = 0; j < deviations; ++j) {
            const Vector& xt = Xv[j];
            if (!xt.allFinite())
                throw SimulationDiverged(p, steps);
            out[2 + j] = xt.dot(G * xt) + dt * integral[1 + j] - out[0];
        }
        if (coarse) {
            // same Brownian path, every other node
            Vector Xc = x;
            double ic = 0.0;
            for (std::size_t k = 0; k <= steps; k += 2) {
                const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
                a.noalias() = theta1[k] * Xc;
                b.noalias() = theta2[k] * Xc;
                ic += w * detail::running_cost(coeffs[k], Xc, a, b, ws);
                if (k < steps)
                    detail::euler_step(coeffs[k], Xc, a, b, 2.0 * dt, dw[k] + dw[k + 1], ws, true);
            }
            out[1] = Xc.dot(G * Xc) + 2.0 * dt * ic - out[0];
        }
    });

    SaddleReport rep;
    rep.value_analytic = game_value(sol, x);
    std::vector<double> column(n_paths);
    auto column_estimate = [&](std::size_t j) {
        for (std::size_t p = 0; p < n_paths; ++p)
            column[p] = per_path[p * columns + j];
        return summarize(column);
    };
    rep.value_mc = column_estimate(0);
    rep.discretization_allowance = coarse ? std::abs(column_estimate(1).mean) : 0.0;
    for (std::size_t j = 0; j < n_perturbations; ++j)
        rep.gaps_player1.push_back(column_estimate(2 + j));
    for (std::size_t j = 0; j < n_perturbations; ++j)
        rep.gaps_player2.push_back(column_estimate(2 + n_perturbations + j));

    const double k = rep.threshold_se;
    const double floor = rounding_floor(rep.value_analytic);
    rep.value_tolerance = k * rep.value_mc.std_error + rep.discretization_allowance + floor;
    rep.value_ok = std::abs(rep.value_mc.mean - rep.value_analytic) <= rep.value_tolerance;
    for (const auto& g : rep.gaps_player1)
        if (!(g.mean >= -k * g.std_error - floor))
            ++rep.failing_gaps1;
    for (const auto& g : rep.gaps_player2)
        if (!(g.mean <= k * g.std_error + floor))
            ++rep.failing_gaps2;
    rep.pass = rep.value_ok && rep.failing_gaps1 == 0 && rep.failing_gaps2 == 0;
    return rep;
}

// ============================================================================
// Exact oracle for the time-discretized game
// ============================================================================

struct DiscreteOracleResult {
    double value = 0.0;
    std::vector<Matrix> gains;    // u_k = K_k X_k, k = 0..N-1, (m1+m2) x n
    std::vector<Matrix> P_nodes;  // discrete value matrices, k = 0..N
};

// The game discretized on N uniform steps: piecewise-constant controls, Euler transition
// X_{k+1} = X_k + h(A X_k + B u_k) + (C X_k + D u_k) xi_k with xi_k ~ N(0, h), and trapezoid
// running cost h/2 [l(t_k, X_k, u_k) + l(t_{k+1}, X_{k+1}, u_k)]. Solved exactly by backward
// recursion on quadratic value functions X' P_k X; each step is a convex-concave quadratic
// saddle problem in (u1, u2).
inline DiscreteOracleResult discrete_oracle(const GameProblem& problem, const Vector& x, std::size_t N) {
    if (N < 1)
        throw ContractViolation("discrete_oracle: need at least one step");
    if (x.size() != problem.n())
        throw ContractViolation("discrete_oracle: initial state has the wrong dimension");
    const auto n = problem.n(), m = problem.m(), m1 = problem.m1(), m2 = problem.m2();
    const double h = problem.horizon() / static_cast<double>(N);
    auto node = [&](std::size_t k) { return k >= N ? problem.horizon() : static_cast<double>(k) * h; };
    auto weight = [&](const NodeCoefficients& c) {
        Matrix W(n + m, n + m);
        W << c.Q, c.S.transpose(), c.S, c.R;
        return W;
    };

    DiscreteOracleResult res;
    res.P_nodes.resize(N + 1);
    res.gains.resize(N);
    res.P_nodes[N] = problem.cost().G;
    NodeCoefficients c_next = problem.at(node(N));
    for (std::size_t kk = N; kk > 0; --kk) {
        const std::size_t k = kk - 1;
        const NodeCoefficients c = problem.at(node(k));
        const Matrix& P = res.P_nodes[k + 1];

        Matrix F(n, n + m), Gn(n, n + m);
        F << Matrix::Identity(n, n) + h * c.A, h * c.B;
        Gn << c.C, c.D;
        Matrix E = Matrix::Zero(n + m, n + m);
        E.topRows(n) = F;
        E.bottomRightCorner(m, m).setIdentity();
        Matrix Eg = Matrix::Zero(n + m, n + m);
        Eg.topRows(n) = Gn;
        const Matrix W0 = weight(c), W1 = weight(c_next);

        const Matrix Qz = detail::symmetrize(0.5 * h * W0 + 0.5 * h * (E.transpose() * W1 * E + h * Eg.transpose() * W1 * Eg) +
                                             F.transpose() * P * F + h * Gn.transpose() * P * Gn);
        const Matrix Qxx = Qz.topLeftCorner(n, n);
        const Matrix Qux = Qz.bottomLeftCorner(m, n);
        const Matrix Quu = Qz.bottomRightCorner(m, m);
        const double margin1 = sym_eig_extremes(Matrix(Quu.topLeftCorner(m1, m1))).lambda_min;
        const double margin2 = sym_eig_extremes(Matrix(Quu.bottomRightCorner(m2, m2))).lambda_max;
        if (!(margin1 > 0.0))
            throw OracleRegularityError(k, 1, margin1);
        if (!(margin2 < 0.0))
            throw OracleRegularityError(k, 2, margin2);
        const Matrix quu_inv =
            block_inverse(Quu.topLeftCorner(m1, m1), Quu.topRightCorner(m1, m2), Quu.bottomRightCorner(m2, m2));
        res.gains[k] = -quu_inv * Qux;
        res.P_nodes[k] = detail::symmetrize(Qxx + Qux.transpose() * res.gains[k]);
        c_next = c;
    }
    res.value = x.dot(res.P_nodes[0] * x);
    return res;
}

// ============================================================================
// Lower-value falsifier
// ============================================================================

struct CostTable {
    std::vector<double> scalars;
    std::vector<CostEstimate> costs;
};

// J(x; lambda * 1, 0) for each lambda: player 1 plays the constant control with every component
// equal to lambda, player 2 plays zero.
inline CostTable falsify_lower_value(const GameProblem& problem, const Vector& x, const std::vector<double>& scalars,
                                     std::size_t n_paths, std::uint64_t seed, std::size_t n_steps = 1000) {
    CostTable table;
    const TimeGrid grid(problem.horizon(), n_steps);
    for (double lambda : scalars) {
        const auto u1 = ControlLaw::constant(Vector::Constant(problem.m1(), lambda));
        const auto u2 = ControlLaw::zero(problem.m2());
        table.scalars.push_back(lambda);
        table.costs.push_back(estimate_cost(problem, simulate(problem, u1, u2, x, grid, n_paths, seed)));
    }
    return table;
}

} // namespace lqgame
