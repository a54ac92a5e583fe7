#pragma once

#include "mama/mdpsolve.hpp"

namespace mama {

/// SSP whose optimal expected cost is the expected time to reach `goals`:
/// Markovian non-goal states pay 1/E(s) for their single action, probabilistic
/// actions are free and goal states are terminal with cost 0. Choice indices
/// are those of `vma.choices(s)`.
SspInstance build_ssp_et(const ValidatedMA& vma, const GoalSet& goals);

struct ExpectedTimeResult {
    /// Expected time per state; +inf where the goal is not reached almost surely.
    ValueVector values;
    /// Optimal choice of every non-goal state with a finite value.
    StationaryPolicy policy;
    std::size_t iterations = 0;
};

/// Minimal or maximal expected time to reach `goals`. Throws ZenoError on a
/// reachable probabilistic cycle.
ExpectedTimeResult expected_time(const ValidatedMA& vma, const GoalSet& goals, Mode mode, double tolerance = 1e-10);

} // namespace mama
