#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"
#include "riccati.hpp"

namespace lqgame::fixtures {

// Time-varying coefficients are sampled at this many uniform nodes of [0, T].
inline constexpr std::size_t kSamples = 1001;

namespace detail {

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

inline CoefficientPath constant(double v) { return CoefficientPath::constant(scalar(v)); }

inline CoefficientPath sampled(const std::function<double(double)>& f, double horizon = 1.0) {
    return CoefficientPath::from_function([&](double t) { return scalar(f(t)); }, horizon, kSamples);
}

} // namespace detail

// dX = sqrt(t) u1 dt + t u2 dW on [0,1], cost X(1)^2 + int 2t u1 u2 - t^2 u2^2.
inline GameProblem ex3_2() {
    using detail::constant;
    using detail::sampled;
    StateDynamics dyn{constant(0), sampled([](double t) { return std::sqrt(t); }), constant(0), constant(0),
                      constant(0), sampled([](double t) { return t; })};
    CostWeights cost{detail::scalar(1),
                     constant(0),
                     constant(0),
                     constant(0),
                     constant(0),
                     sampled([](double t) { return t; }),
                     sampled([](double t) { return t; }),
                     sampled([](double t) { return -t * t; })};
    return GameProblem(std::move(dyn), std::move(cost), 1.0);
}

// dX = u1 dt + u2 dW on [0,1], cost -X(1)^2 + int u1^2 - u2^2.
inline GameProblem ex3_4() {
    using detail::constant;
    StateDynamics dyn{constant(0), constant(1), constant(0), constant(0), constant(0), constant(1)};
    CostWeights cost{detail::scalar(-1), constant(0), constant(0), constant(0), constant(1),
                     constant(0),        constant(0), constant(-1)};
    return GameProblem(std::move(dyn), std::move(cost), 1.0);
}

// dX = (u1 + u2) dt on [0,1], cost -2 X(1)^2 + int u1^2 - (2/3) u2^2.
inline GameProblem ex4_5() {
    using detail::constant;
    StateDynamics dyn{constant(0), constant(1), constant(1), constant(0), constant(0), constant(0)};
    CostWeights cost{detail::scalar(-2), constant(0), constant(0), constant(0), constant(1),
                     constant(0),        constant(0), constant(-2.0 / 3.0)};
    return GameProblem(std::move(dyn), std::move(cost), 1.0);
}

// dX = u1 dt + u2 dW on [0,1], cost X(1)^2 + int t^2 u1^2 - u2^2.
inline GameProblem ex5_2() {
    using detail::constant;
    StateDynamics dyn{constant(0), constant(1), constant(0), constant(0), constant(0), constant(1)};
    CostWeights cost{detail::scalar(1),
                     constant(0),
                     constant(0),
                     constant(0),
                     detail::sampled([](double t) { return t * t; }),
                     constant(0),
                     constant(0),
                     constant(-1)};
    return GameProblem(std::move(dyn), std::move(cost), 1.0);
}

inline const std::vector<std::string>& example_names() {
    static const std::vector<std::string> names{"ex3_2", "ex3_4", "ex4_5", "ex5_2"};
    return names;
}

// Throws ContractViolation for an unknown name.
inline GameProblem example(const std::string& name) {
    if (name == "ex3_2")
        return ex3_2();
    if (name == "ex3_4")
        return ex3_4();
    if (name == "ex4_5")
        return ex4_5();
    if (name == "ex5_2")
        return ex5_2();
    throw ContractViolation("unknown example '" + name + "'");
}

// ============================================================================
// Random instances
// ============================================================================

struct RandomSpec {
    Eigen::Index max_n = 4;
    Eigen::Index max_m = 2;
    double coefficient_bound = 1.0;  // entries of A, B, C, D, R12 drawn from [-bound, bound]
    double weight_scale = 0.01;      // G, Q, S drawn from [-scale, scale]
    bool deterministic = false;      // C = D1 = D2 = 0
    double horizon = 1.0;
};

struct RandomInstance {
    GameProblem problem;
    Vector x;
};

namespace detail {

class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : gen_(seed) {}

    // [lo, hi), from 53 random bits so the stream is the same on every platform
    double operator()(double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    Eigen::Index index(Eigen::Index lo, Eigen::Index hi) {
        return lo + static_cast<Eigen::Index>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    Matrix matrix(Eigen::Index r, Eigen::Index c, double bound) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j)
                m(i, j) = (*this)(-bound, bound);
        return m;
    }

    Matrix symmetric(Eigen::Index n, double bound) {
        Matrix m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j)
                m(i, j) = m(j, i) = (*this)(-bound, bound);
        return m;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace detail

// One random instance with R11 = I, R22 = -I and constant coefficients; no certification.
inline RandomInstance random_instance(std::uint64_t seed, const RandomSpec& spec = {}) {
    detail::Uniform u(seed);
    const Eigen::Index n = u.index(1, spec.max_n);
    const Eigen::Index m1 = u.index(1, spec.max_m);
    const Eigen::Index m2 = u.index(1, spec.max_m);
    const double b = spec.coefficient_bound;
    const double w = spec.weight_scale;
    auto c = [](Matrix m) { return CoefficientPath::constant(std::move(m)); };

    StateDynamics dyn;
    dyn.A = c(u.matrix(n, n, b));
    dyn.B1 = c(u.matrix(n, m1, b));
    dyn.B2 = c(u.matrix(n, m2, b));
    dyn.C = c(spec.deterministic ? Matrix::Zero(n, n) : u.matrix(n, n, b));
    dyn.D1 = c(spec.deterministic ? Matrix::Zero(n, m1) : u.matrix(n, m1, b));
    dyn.D2 = c(spec.deterministic ? Matrix::Zero(n, m2) : u.matrix(n, m2, b));

    CostWeights cost;
    cost.G = u.symmetric(n, w);
    cost.Q = c(u.symmetric(n, w));
    cost.S1 = c(u.matrix(m1, n, w));
    cost.S2 = c(u.matrix(m2, n, w));
    cost.R11 = c(Matrix::Identity(m1, m1));
    const Matrix r12 = u.matrix(m1, m2, b);
    cost.R12 = c(r12);
    cost.R21 = c(r12.transpose());
    cost.R22 = c(-Matrix::Identity(m2, m2));

    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i)
        x(i) = u(-1.0, 1.0);
    return {GameProblem(std::move(dyn), std::move(cost), spec.horizon), x};
}

// The first `count` random instances (seeds derived from `seed`) that certify_A3 certifies.
inline std::vector<RandomInstance> certified_instances(std::size_t count, std::uint64_t seed,
                                                       const RandomSpec& spec = {},
                                                       const SolverConfig& config = {}) {
    std::vector<RandomInstance> out;
    std::mt19937_64 seeds(seed);
    for (std::size_t attempt = 0; out.size() < count; ++attempt) {
        if (attempt > 100 * count + 100)
            throw ContractViolation("certified_instances: too few random instances certify");
        RandomInstance inst = random_instance(seeds(), spec);
        if (certify_A3(inst.problem, config).certified())
            out.push_back(std::move(inst));
    }
    return out;
}

} // namespace lqgame::fixtures
