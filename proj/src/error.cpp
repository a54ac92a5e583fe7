#include "mama/error.hpp"

#include <cstdio>

namespace mama {

const char* to_string(Errc code)
{
    switch (code) {
    case Errc::SyntaxError: return "syntax error";
    case Errc::UnknownSection: return "unknown section";
    case Errc::DuplicateMarkovianBlock: return "duplicate Markovian block";
    case Errc::DuplicateAction: return "duplicate action";
    case Errc::DistributionNotNormalized: return "distribution not normalized";
    case Errc::NonPositiveRate: return "non-positive rate";
    case Errc::EmptyModel: return "empty model";
    case Errc::UnknownState: return "unknown state";
    case Errc::InvalidArgument: return "invalid argument";
    case Errc::NotConverged: return "not converged";
    case Errc::ZenoModel: return "Zeno model";
    case Errc::StepOverflow: return "step overflow";
    case Errc::EmptyMec: return "empty end component";
    case Errc::Singular: return "singular system";
    case Errc::NotErgodic: return "not ergodic";
    case Errc::TooManyPolicies: return "too many policies";
    case Errc::Unbounded: return "unbounded";
    case Errc::Infeasible: return "infeasible";
    case Errc::ZenoGuardTripped: return "Zeno guard tripped";
    }
    return "error";
}

Error::Error(Errc code, const std::string& message, std::size_t line)
    : std::runtime_error(message), code_(code), line_(line)
{
}

ZenoError::ZenoError(std::vector<StateIndex> witness, const std::string& message)
    : Error(Errc::ZenoModel, message), witness_(std::move(witness))
{
}

namespace {
std::string not_converged_message(std::size_t iterations, double residual)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "no convergence after %zu iterations (residual %.3g)", iterations, residual);
    return buf;
}
} // namespace

NotConvergedError::NotConvergedError(std::size_t iterations, double residual)
    : Error(Errc::NotConverged, not_converged_message(iterations, residual)),
      iterations_(iterations), residual_(residual)
{
}

} // namespace mama
