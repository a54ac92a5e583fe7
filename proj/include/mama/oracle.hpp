#pragma once

#include "mama/graph.hpp"
#include "mama/mdpsolve.hpp"

#include <cmath>
#include <cstdint>
#include <functional>

// Reference engines for tests and `mama run --verify`. They share only the
// model types with the production solvers.
namespace mama::oracle {

struct DenseLinearSystem {
    std::vector<std::vector<double>> matrix;
    std::vector<double> rhs;
};

/// Gaussian elimination with partial pivoting. Throws Singular.
std::vector<double> solve(DenseLinearSystem system);

/// Expected time to reach `goals` in a model without probabilistic states.
ValueVector ctmc_hitting_time(const ValidatedMA& vma, const GoalSet& goals);

/// Expected time to reach `goals` in the chain induced by `policy`.
ValueVector et_fixed_policy(const ValidatedMA& vma, const GoalSet& goals, const MaPolicy& policy);

/// Stationary distribution of a CTMC with a single closed class, from the
/// embedded chain: mu P = mu, then pi_i proportional to mu_i / E_i.
/// Throws NotErgodic otherwise.
std::vector<double> ctmc_steady_state(const ValidatedMA& vma);

/// Long-run fraction of time in `goals` in the chain induced by `policy`.
ValueVector lra_fixed_policy(const ValidatedMA& vma, const GoalSet& goals, const MaPolicy& policy);

enum class Objective { ExpectedTime, LongRunAverage };

/// Pointwise optimum over all stationary deterministic policies. Throws
/// TooManyPolicies beyond 10^6 policies.
ValueVector enumerate_policies(const ValidatedMA& vma, const GoalSet& goals, Objective objective, Mode mode);

/// Calls `visit` with every stationary deterministic policy (choices of goal
/// states are left at 0 when `skip_goals` is set).
void for_each_policy(const ValidatedMA& vma, const GoalSet& goals, bool skip_goals,
                     const std::function<void(const MaPolicy&)>& visit);

/// Optimal long-run ratio inside `mec` from the linear program over k and
/// the relative values x_s.
double lp_ratio(const ValidatedMA& vma, const Mec& mec, const GoalSet& goals, Mode mode);

/// Optimal SSP values from the linear program over v. States marked infinite
/// in `ssp` stay +inf.
ValueVector lp_ssp(const SspInstance& ssp, Mode mode);

/// Probability of visiting `goals` within [0, b] in a CTMC, by uniformization.
std::vector<double> ctmc_transient(const ValidatedMA& vma, const GoalSet& goals, double b);

/// Probability of visiting `goals` at some time in [a, b] under `policy`.
std::vector<double> policy_reach_within(const ValidatedMA& vma, const GoalSet& goals, const MaPolicy& policy,
                                        double a, double b);

enum class SimulationKind { ExpectedTime, TimedReach, LongRunAverage };

struct SimulationQuery {
    SimulationKind kind = SimulationKind::ExpectedTime;
    GoalSet goals;
    double a = 0.0;
    double b = 0.0;
    /// Runs stop at this time; long-run averages are taken over [0, horizon].
    double horizon = 1e4;
};

struct Estimate {
    double mean = 0.0;
    /// Half width of the normal-approximation 95% confidence interval.
    double half_width = 0.0;
    std::size_t runs = 0;

    bool contains(double x) const { return std::abs(x - mean) <= half_width; }
};

/// Monte Carlo estimate from the initial state. Run i uses its own random
/// stream derived from (seed, i), so the result does not depend on `threads`.
Estimate simulate(const ValidatedMA& vma, const MaPolicy& policy, const SimulationQuery& query, std::size_t runs,
                  std::uint64_t seed, std::size_t threads = 0);

} // namespace mama::oracle
