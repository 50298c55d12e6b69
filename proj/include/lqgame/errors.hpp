#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lqgame {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the domain of a function (e.g. time outside [0,T]).
class DomainError : public Error {
public:
    using Error::Error;
};

// Caller broke a documented precondition (shape, symmetry, grid mismatch).
class ContractViolation : public Error {
public:
    using Error::Error;
};

// Problem data failed validation; `field` is a dotted path such as "cost.R21".
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

// One block of a block-matrix inversion is numerically singular.
class SingularBlockError : public Error {
public:
    SingularBlockError(std::string block, double condition)
        : Error("singular block '" + block + "' (condition estimate " + std::to_string(condition) + ")"),
          block_(std::move(block)),
          condition_(condition) {}

    const std::string& block() const noexcept { return block_; }
    double condition() const noexcept { return condition_; }

private:
    std::string block_;
    double condition_;
};

// The part of a backward Riccati integration that completed before a failure,
// in increasing time order.
struct PartialSolution {
    std::vector<double> times;
    std::vector<Matrix> P;
};

// Failure of a backward Riccati sweep. Carries the failure time and the partial path.
class RiccatiFailure : public Error {
public:
    RiccatiFailure(const std::string& what, double time, PartialSolution partial)
        : Error(what), time_(time), partial_(std::move(partial)) {}

    double time() const noexcept { return time_; }
    const PartialSolution& partial() const noexcept { return partial_; }

private:
    double time_;
    PartialSolution partial_;
};

// A player's regularity margin lost its required sign (or came within eps_reg of zero).
// player is 1 (margin = lambda_min of the player-1 block) or 2 (lambda_max of the player-2 block).
class RegularityError : public RiccatiFailure {
public:
    RegularityError(double time, int player, double margin, PartialSolution partial = {})
        : RiccatiFailure("regularity lost for player " + std::to_string(player) + " at t=" + std::to_string(time) +
                             " (margin " + std::to_string(margin) + ")",
                         time, std::move(partial)),
          player_(player),
          margin_(margin) {}

    int player() const noexcept { return player_; }
    double margin() const noexcept { return margin_; }

private:
    int player_;
    double margin_;
};

class BlowUpError : public RiccatiFailure {
public:
    BlowUpError(double time, double norm, PartialSolution partial = {})
        : RiccatiFailure("solution blew up at t=" + std::to_string(time) + " (Frobenius norm " + std::to_string(norm) +
                             ")",
                         time, std::move(partial)),
          norm_(norm) {}

    double norm() const noexcept { return norm_; }

private:
    double norm_;
};

class SimulationDiverged : public Error {
public:
    SimulationDiverged(std::size_t path, std::size_t step)
        : Error("simulation diverged on path " + std::to_string(path) + " at step " + std::to_string(step)),
          path_(path),
          step_(step) {}

    std::size_t path() const noexcept { return path_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t path_;
    std::size_t step_;
};

// Problem has a diffusion term, so the deterministic machinery does not apply.
class NotDeterministicError : public Error {
public:
    using Error::Error;
};

// Lambda(t) of the explicit representation is too ill-conditioned to invert.
class RepresentationSingular : public Error {
public:
    RepresentationSingular(double time, double condition)
        : Error("representation singular at t=" + std::to_string(time) + " (condition " + std::to_string(condition) +
                ")"),
          time_(time),
          condition_(condition) {}

    double time() const noexcept { return time_; }
    double condition() const noexcept { return condition_; }

private:
    double time_;
    double condition_;
};

// A step of the discrete-time oracle lost convexity (player 1) or concavity (player 2).
class OracleRegularityError : public Error {
public:
    OracleRegularityError(std::size_t step, int player, double margin)
        : Error("discrete oracle regularity lost at step " + std::to_string(step) + " for player " +
                std::to_string(player) + " (margin " + std::to_string(margin) + ")"),
          step_(step),
          player_(player) {}

    std::size_t step() const noexcept { return step_; }
    int player() const noexcept { return player_; }

private:
    std::size_t step_;
    int player_;
};

} // namespace lqgame
