#pragma once

#include "mama/mdpsolve.hpp"

#include <cstdint>

namespace mama {

/// Largest k accepted by `choose_delta`.
inline constexpr std::uint64_t kMaxSteps = std::uint64_t{1} << 40;

struct DeltaChoice {
    double delta = 0.0;
    std::uint64_t k = 0;
};

/// k = ceil(lambda^2 b^2 / (2 eps)) and delta = b / k, so that the
/// discretisation error lambda^2 b^2 / (2k) is at most eps.
DeltaChoice choose_delta(double lambda, double b, double eps);

/// 1 - e^{-lambda b} (1 + lambda b/k)^k, evaluated without cancellation.
double discretisation_error(double lambda, double b, std::uint64_t k);

/// The automaton observed in steps of length delta: a Markovian state makes
/// at most one jump per step.
struct DiscretisedMA {
    ValidatedMA vma;
    double delta = 0.0;
    /// mu^s for Markovian states, empty for probabilistic ones.
    std::vector<Distribution> step;
    /// 1 - e^{-E(s) delta}: probability of a jump within one step.
    std::vector<double> jump;
};

DiscretisedMA discretise(const ValidatedMA& vma, double delta);

/// Largest exit rate over Markovian states that can actually leave; states
/// whose only successor is themselves never change the value and are left out.
double effective_lambda(const ValidatedMA& vma);

/// Optimal probability to reach `goals` within k steps of the discretised
/// automaton (goal states absorbing). Each step is a Jacobi update of the
/// Markovian states followed by the zero-time propagation through the
/// probabilistic states.
ValueVector step_bounded_reach(const DiscretisedMA& dma, const GoalSet& goals, std::uint64_t k, Mode mode);

struct TimedQuery {
    GoalSet goals;
    double a = 0.0;
    double b = 0.0;
    double epsilon = 1e-3;
    Mode mode = Mode::Max;
};

struct BoundedResult {
    ValueVector lower;
    ValueVector upper;
    /// Step length and count over [0, b-a] (the goal-absorbing phase).
    double delta = 0.0;
    std::uint64_t k = 0;
    /// Step length and count over [0, a]; zero when a = 0.
    double delta_a = 0.0;
    std::uint64_t k_a = 0;
    /// A-priori bounds of the goal phase: the closed-form relaxation and the
    /// exact discretisation term. The smaller one is used.
    double error_relaxed = 0.0;
    double error_exact = 0.0;
};

/// Optimal probability of visiting `goals` at some time in [a, b], returned as
/// a bracket of width at most epsilon. For a > 0 the horizon is split into a
/// goal-absorbing phase over b-a and a plain phase over a, using half of the
/// budget for the first and a quarter for each side of the second.
BoundedResult timed_reachability(const ValidatedMA& vma, const TimedQuery& query);

} // namespace mama
