#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mama {

using StateIndex = std::size_t;

enum class Errc {
    SyntaxError,
    UnknownSection,
    DuplicateMarkovianBlock,
    DuplicateAction,
    DistributionNotNormalized,
    NonPositiveRate,
    EmptyModel,
    UnknownState,
    InvalidArgument,
    NotConverged,
    ZenoModel,
    StepOverflow,
    EmptyMec,
    Singular,
    NotErgodic,
    TooManyPolicies,
    Unbounded,
    Infeasible,
    ZenoGuardTripped,
};

const char* to_string(Errc code);

/// Every failure raised by the library. `line()` is 1-based and only set for
/// errors that originate in model text.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::size_t line = 0);

    Errc code() const noexcept { return code_; }
    std::size_t line() const noexcept { return line_; }

private:
    Errc code_;
    std::size_t line_;
};

/// A probabilistic-only cycle reachable from the initial state.
class ZenoError : public Error {
public:
    ZenoError(std::vector<StateIndex> witness, const std::string& message);

    const std::vector<StateIndex>& witness() const noexcept { return witness_; }

private:
    std::vector<StateIndex> witness_;
};

class NotConvergedError : public Error {
public:
    NotConvergedError(std::size_t iterations, double residual);

    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t iterations_;
    double residual_;
};

} // namespace mama
