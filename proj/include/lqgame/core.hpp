#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace lqgame {

// ============================================================================
// Time grid
// ============================================================================

// Uniform grid t_k = k*T/n_steps on [0,T].
class TimeGrid {
public:
    TimeGrid() = default;

    TimeGrid(double horizon, std::size_t n_steps) : horizon_(horizon), n_steps_(n_steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw ContractViolation("time grid horizon must be positive and finite");
        if (n_steps < 2)
            throw ContractViolation("time grid needs at least 2 steps");
    }

    double horizon() const noexcept { return horizon_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    std::size_t size() const noexcept { return n_steps_ + 1; }
    double dt() const noexcept { return horizon_ / static_cast<double>(n_steps_); }

    // The last node is exactly T.
    double node(std::size_t k) const noexcept {
        if (k >= n_steps_)
            return horizon_;
        return static_cast<double>(k) * horizon_ / static_cast<double>(n_steps_);
    }

    bool operator==(const TimeGrid&) const = default;

private:
    double horizon_ = 1.0;
    std::size_t n_steps_ = 2;
};

namespace detail {

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// |M - M^T|_max <= rel * |M|_max
inline bool is_symmetric(const Matrix& m, double rel = 1e-12) {
    if (m.rows() != m.cols())
        return false;
    return max_abs(m - m.transpose()) <= rel * max_abs(m);
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Slack allowed when a time computed by floating arithmetic lands just outside [0,T].
inline double time_slack(double horizon) { return 1e-12 * std::max(1.0, horizon); }

} // namespace detail

// ============================================================================
// Coefficient paths
// ============================================================================

// A matrix-valued coefficient: either constant in time, or sampled on a uniform
// grid over [0,T] and linearly interpolated between samples.
class CoefficientPath {
public:
    CoefficientPath() = default;

    static CoefficientPath constant(Matrix value) {
        CoefficientPath p;
        p.values_.push_back(std::move(value));
        return p;
    }

    static CoefficientPath sampled(std::vector<Matrix> values, double horizon) {
        if (values.size() < 2)
            throw ContractViolation("sampled coefficient path needs at least 2 samples");
        if (!(horizon > 0.0))
            throw ContractViolation("sampled coefficient path needs a positive horizon");
        for (const auto& v : values)
            if (v.rows() != values.front().rows() || v.cols() != values.front().cols())
                throw ContractViolation("sampled coefficient path has inconsistent sample shapes");
        CoefficientPath p;
        p.values_ = std::move(values);
        p.horizon_ = horizon;
        return p;
    }

    // Samples f(t_j) at n_samples uniform nodes of [0, horizon].
    template <class F>
    static CoefficientPath from_function(F&& f, double horizon, std::size_t n_samples) {
        std::vector<Matrix> values;
        values.reserve(n_samples);
        for (std::size_t j = 0; j < n_samples; ++j) {
            const double t = j + 1 == n_samples ? horizon : horizon * static_cast<double>(j) / (n_samples - 1);
            values.push_back(f(t));
        }
        return sampled(std::move(values), horizon);
    }

    bool is_constant() const noexcept { return values_.size() == 1; }
    Eigen::Index rows() const noexcept { return values_.empty() ? 0 : values_.front().rows(); }
    Eigen::Index cols() const noexcept { return values_.empty() ? 0 : values_.front().cols(); }
    double horizon() const noexcept { return horizon_; }
    const std::vector<Matrix>& samples() const noexcept { return values_; }

    // Time of sample j (sampled paths only).
    double sample_time(std::size_t j) const noexcept {
        if (j + 1 >= values_.size())
            return horizon_;
        return horizon_ * static_cast<double>(j) / static_cast<double>(values_.size() - 1);
    }

    // Value at time t. Sampled paths reproduce node values exactly and are affine in between.
    Matrix at(double t) const {
        if (values_.empty())
            throw ContractViolation("empty coefficient path");
        if (is_constant())
            return values_.front();
        const double slack = detail::time_slack(horizon_);
        if (!(t >= -slack && t <= horizon_ + slack))
            throw DomainError("coefficient evaluated at t=" + std::to_string(t) + " outside [0," +
                              std::to_string(horizon_) + "]");
        const std::size_t last = values_.size() - 1;
        const double s = std::clamp(t, 0.0, horizon_) / horizon_ * static_cast<double>(last);
        const double nearest = std::round(s);
        if (std::abs(s - nearest) <= 1e-9)
            return values_[static_cast<std::size_t>(nearest)];
        const auto i = std::min(static_cast<std::size_t>(std::floor(s)), last - 1);
        const double w = s - static_cast<double>(i);
        return (1.0 - w) * values_[i] + w * values_[i + 1];
    }

    // Same path with a constant matrix added to every sample.
    CoefficientPath plus(const Matrix& offset) const {
        CoefficientPath p = *this;
        for (auto& v : p.values_)
            v += offset;
        return p;
    }

    bool is_zero() const {
        return std::all_of(values_.begin(), values_.end(), [](const Matrix& m) { return m.isZero(0.0); });
    }

private:
    std::vector<Matrix> values_;
    double horizon_ = 0.0;
};

// Evaluates path at t, requiring 0 <= t <= horizon.
inline Matrix eval_coeff(const CoefficientPath& path, double t, double horizon) {
    const double slack = detail::time_slack(horizon);
    if (!(t >= -slack && t <= horizon + slack))
        throw DomainError("t=" + std::to_string(t) + " outside [0," + std::to_string(horizon) + "]");
    return path.at(std::clamp(t, 0.0, horizon));
}

// ============================================================================
// Problem data
// ============================================================================

struct StateDynamics {
    CoefficientPath A, B1, B2, C, D1, D2;
};

struct CostWeights {
    Matrix G;
    CoefficientPath Q, S1, S2, R11, R12, R21, R22;
};

// B = [B1 | B2], D = [D1 | D2], S = [S1; S2], R = [[R11, R12], [R21, R22]] at one time.
struct AssembledBlocks {
    Matrix B, D, S, R;
};

// All coefficients evaluated at one time.
struct NodeCoefficients : AssembledBlocks {
    Matrix A, C, Q;
    Eigen::Index m1 = 0, m2 = 0;

    auto B1() const { return B.leftCols(m1); }
    auto B2() const { return B.rightCols(m2); }
    auto D1() const { return D.leftCols(m1); }
    auto D2() const { return D.rightCols(m2); }
    auto S1() const { return S.topRows(m1); }
    auto S2() const { return S.bottomRows(m2); }
};

// The full game: dynamics, quadratic cost and horizon. Validated on construction.
class GameProblem {
public:
    GameProblem(StateDynamics dynamics, CostWeights cost, double horizon)
        : dyn_(std::move(dynamics)), cost_(std::move(cost)), horizon_(horizon) {
        validate();
    }

    Eigen::Index n() const noexcept { return dyn_.A.rows(); }
    Eigen::Index m1() const noexcept { return dyn_.B1.cols(); }
    Eigen::Index m2() const noexcept { return dyn_.B2.cols(); }
    Eigen::Index m() const noexcept { return m1() + m2(); }
    double horizon() const noexcept { return horizon_; }
    const StateDynamics& dynamics() const noexcept { return dyn_; }
    const CostWeights& cost() const noexcept { return cost_; }

    NodeCoefficients at(double t) const {
        NodeCoefficients c;
        c.m1 = m1();
        c.m2 = m2();
        const auto nn = n(), mm = m();
        c.A = eval_coeff(dyn_.A, t, horizon_);
        c.C = eval_coeff(dyn_.C, t, horizon_);
        c.Q = eval_coeff(cost_.Q, t, horizon_);
        c.B.resize(nn, mm);
        c.B << eval_coeff(dyn_.B1, t, horizon_), eval_coeff(dyn_.B2, t, horizon_);
        c.D.resize(nn, mm);
        c.D << eval_coeff(dyn_.D1, t, horizon_), eval_coeff(dyn_.D2, t, horizon_);
        c.S.resize(mm, nn);
        c.S << eval_coeff(cost_.S1, t, horizon_), eval_coeff(cost_.S2, t, horizon_);
        c.R.resize(mm, mm);
        c.R << eval_coeff(cost_.R11, t, horizon_), eval_coeff(cost_.R12, t, horizon_),
            eval_coeff(cost_.R21, t, horizon_), eval_coeff(cost_.R22, t, horizon_);
        return c;
    }

    AssembledBlocks blocks(double t) const { return static_cast<AssembledBlocks>(at(t)); }

    // C = D1 = D2 = 0 identically.
    bool is_deterministic() const { return dyn_.C.is_zero() && dyn_.D1.is_zero() && dyn_.D2.is_zero(); }

    // The regularized game with R11 + lambda I and R22 - lambda I.
    GameProblem with_regularization(double lambda) const {
        CostWeights c = cost_;
        c.R11 = c.R11.plus(lambda * Matrix::Identity(m1(), m1()));
        c.R22 = c.R22.plus(-lambda * Matrix::Identity(m2(), m2()));
        return GameProblem(dyn_, std::move(c), horizon_);
    }

private:
    void validate() const;

    StateDynamics dyn_;
    CostWeights cost_;
    double horizon_;
};

inline void GameProblem::validate() const {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
        throw ValidationError("horizon", "must be positive and finite");
    const auto nn = dyn_.A.rows();
    const auto mm1 = dyn_.B1.cols();
    const auto mm2 = dyn_.B2.cols();
    if (nn < 1)
        throw ValidationError("dynamics.A", "state dimension must be at least 1");
    if (mm1 < 1)
        throw ValidationError("dynamics.B1", "player-1 control dimension must be at least 1");
    if (mm2 < 1)
        throw ValidationError("dynamics.B2", "player-2 control dimension must be at least 1");

    auto check_path = [&](const CoefficientPath& p, const std::string& field, Eigen::Index r, Eigen::Index c) {
        if (p.samples().empty())
            throw ValidationError(field, "missing");
        if (p.rows() != r || p.cols() != c)
            throw ValidationError(field, "expected shape " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
                                             std::to_string(p.rows()) + "x" + std::to_string(p.cols()));
        if (!p.is_constant() && std::abs(p.horizon() - horizon_) > detail::time_slack(horizon_))
            throw ValidationError(field, "samples must span [0, horizon]");
        for (const auto& v : p.samples())
            if (!detail::all_finite(v))
                throw ValidationError(field, "non-finite entry");
    };
    check_path(dyn_.A, "dynamics.A", nn, nn);
    check_path(dyn_.B1, "dynamics.B1", nn, mm1);
    check_path(dyn_.B2, "dynamics.B2", nn, mm2);
    check_path(dyn_.C, "dynamics.C", nn, nn);
    check_path(dyn_.D1, "dynamics.D1", nn, mm1);
    check_path(dyn_.D2, "dynamics.D2", nn, mm2);
    check_path(cost_.Q, "cost.Q", nn, nn);
    check_path(cost_.S1, "cost.S1", mm1, nn);
    check_path(cost_.S2, "cost.S2", mm2, nn);
    check_path(cost_.R11, "cost.R11", mm1, mm1);
    check_path(cost_.R12, "cost.R12", mm1, mm2);
    check_path(cost_.R21, "cost.R21", mm2, mm1);
    check_path(cost_.R22, "cost.R22", mm2, mm2);

    if (cost_.G.rows() != nn || cost_.G.cols() != nn)
        throw ValidationError("cost.G", "expected shape " + std::to_string(nn) + "x" + std::to_string(nn));
    if (!detail::all_finite(cost_.G))
        throw ValidationError("cost.G", "non-finite entry");
    if (!detail::is_symmetric(cost_.G))
        throw ValidationError("cost.G", "not symmetric");

    auto check_symmetric = [&](const CoefficientPath& p, const std::string& field) {
        for (std::size_t j = 0; j < p.samples().size(); ++j)
            if (!detail::is_symmetric(p.samples()[j]))
                throw ValidationError(field, "not symmetric at sample " + std::to_string(j));
    };
    check_symmetric(cost_.Q, "cost.Q");
    check_symmetric(cost_.R11, "cost.R11");
    check_symmetric(cost_.R22, "cost.R22");

    // R21 = R12^T wherever either path has a sample.
    std::vector<double> times{0.0, horizon_};
    for (const auto* p : {&cost_.R12, &cost_.R21})
        if (!p->is_constant())
            for (std::size_t j = 0; j < p->samples().size(); ++j)
                times.push_back(p->sample_time(j));
    for (double t : times) {
        const Matrix r12t = cost_.R12.at(t).transpose();
        const Matrix r21 = cost_.R21.at(t);
        const double scale = std::max(detail::max_abs(r12t), detail::max_abs(r21));
        if (detail::max_abs(r21 - r12t) > 1e-12 * scale)
            throw ValidationError("cost.R21", "must equal R12 transposed (t=" + std::to_string(t) + ")");
    }
}

// ============================================================================
// Small dense kernels
// ============================================================================

struct EigExtremes {
    double lambda_min;
    double lambda_max;
};

// Smallest and largest eigenvalue of a symmetric matrix.
inline EigExtremes sym_eig_extremes(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw ContractViolation("sym_eig_extremes needs a non-empty square matrix");
    if (!detail::is_symmetric(m))
        throw ContractViolation("sym_eig_extremes needs a symmetric matrix");
    if (m.rows() == 1)
        return {m(0, 0), m(0, 0)};
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw ContractViolation("symmetric eigensolver did not converge");
    const auto& ev = es.eigenvalues();
    return {ev(0), ev(ev.size() - 1)};
}

inline constexpr double kMaxBlockCondition = 1e12;

namespace detail {

// Inverse of a symmetric matrix through its eigendecomposition; throws SingularBlockError
// naming `block` when the condition estimate exceeds kMaxBlockCondition.
inline Matrix sym_inverse(const Matrix& m, const std::string& block) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    if (es.info() != Eigen::Success)
        throw SingularBlockError(block, std::numeric_limits<double>::infinity());
    const Vector abs_ev = es.eigenvalues().cwiseAbs();
    const double lo = abs_ev.minCoeff();
    const double hi = abs_ev.maxCoeff();
    const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(cond <= kMaxBlockCondition))
        throw SingularBlockError(block, cond);
    const Matrix& v = es.eigenvectors();
    return v * es.eigenvalues().cwiseInverse().asDiagonal() * v.transpose();
}

} // namespace detail

// Inverse of [[M, L], [L^T, N]] by the Schur complement Phi = N - L^T M^{-1} L:
//
//   [[M^-1 + (M^-1 L) Phi^-1 (M^-1 L)^T, -(M^-1 L) Phi^-1],
//    [-Phi^-1 (M^-1 L)^T,                  Phi^-1        ]]
inline Matrix block_inverse(const Matrix& M, const Matrix& L, const Matrix& N) {
    const auto k = M.rows();
    const auto p = N.rows();
    if (M.cols() != k || N.cols() != p || L.rows() != k || L.cols() != p)
        throw ContractViolation("block_inverse: inconsistent block shapes");
    const Matrix m_inv = detail::sym_inverse(M, "M");
    const Matrix m_inv_l = m_inv * L;
    const Matrix phi = detail::symmetrize(N - L.transpose() * m_inv_l);
    const Matrix phi_inv = detail::sym_inverse(phi, "Phi");

    Matrix out(k + p, k + p);
    out.topLeftCorner(k, k) = m_inv + m_inv_l * phi_inv * m_inv_l.transpose();
    out.topRightCorner(k, p) = -m_inv_l * phi_inv;
    out.bottomLeftCorner(p, k) = out.topRightCorner(k, p).transpose();
    out.bottomRightCorner(p, p) = phi_inv;
    return out;
}

// R_P = R + D^T P D and S_P = B^T P + D^T P C + S at one time, plus the two player margins
// (lambda_min of the player-1 diagonal block, lambda_max of the player-2 diagonal block).
struct RiccatiBlocks {
    Matrix R_P;
    Matrix S_P;
    double margin1;
    double margin2;
};

inline RiccatiBlocks assemble_blocks(const NodeCoefficients& c, const Matrix& P) {
    RiccatiBlocks out;
    const Matrix pd = P * c.D;
    out.R_P = detail::symmetrize(c.R + c.D.transpose() * pd);
    out.S_P = c.B.transpose() * P + pd.transpose() * c.C + c.S;
    out.margin1 = sym_eig_extremes(out.R_P.topLeftCorner(c.m1, c.m1)).lambda_min;
    out.margin2 = sym_eig_extremes(out.R_P.bottomRightCorner(c.m2, c.m2)).lambda_max;
    return out;
}

inline RiccatiBlocks assemble_blocks(const GameProblem& problem, const Matrix& P, double t) {
    if (P.rows() != problem.n() || P.cols() != problem.n())
        throw ContractViolation("assemble_blocks: P has the wrong shape");
    return assemble_blocks(problem.at(t), P);
}

} // namespace lqgame
