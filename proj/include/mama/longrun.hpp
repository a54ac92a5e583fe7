#pragma once

#include "mama/graph.hpp"
#include "mama/mdpsolve.hpp"

#include <map>

namespace mama {

struct UnichainResult {
    /// Optimal long-run fraction of time spent in the goal states of the MEC.
    double value = 0.0;
    /// Choice index per member of the MEC, taken from the kept actions.
    std::map<StateIndex, std::size_t> policy;
    std::size_t iterations = 0;
};

/// Optimal long-run ratio of the two costs c1 = 1/E on goal Markovian states
/// and c2 = 1/E on all Markovian states, restricted to `mec`. Found by
/// bisection on k over [0,1], deciding the sign of the optimal average of
/// c1 - k*c2 by relative value iteration on the damped embedded chain.
UnichainResult lra_unichain(const ValidatedMA& vma, const Mec& mec, const GoalSet& goals, Mode mode,
                            double tolerance = 1e-10);

/// SSP whose optimal terminal value equals the long-run average: every MEC
/// is replaced by a gate u_j and a sink q_j with terminal value LRA_j.
struct LraQuotient {
    SspInstance ssp;
    /// Quotient state of every original state (MEC members map to their gate).
    std::vector<StateIndex> state_of;
    std::vector<StateIndex> gates;
    std::vector<StateIndex> sinks;
    /// For every gate, the origin (state, choice index) of each action; the
    /// stay action "!" has no origin.
    std::vector<std::vector<std::optional<std::pair<StateIndex, std::size_t>>>> origins;
};

LraQuotient build_ssp_lra(const ValidatedMA& vma, const std::vector<Mec>& mecs,
                          const std::vector<double>& mec_values);

struct LraResult {
    std::vector<Mec> mecs;
    std::vector<double> mec_values;
    ValueVector values;
    /// Witness: stays in the chosen MEC with its in-MEC policy, otherwise
    /// steers towards the chosen exit.
    MaPolicy policy;
    std::size_t iterations = 0;
};

/// Minimal or maximal long-run average fraction of time spent in `goals`.
LraResult lra(const ValidatedMA& vma, const GoalSet& goals, Mode mode, double tolerance = 1e-10);

} // namespace mama
