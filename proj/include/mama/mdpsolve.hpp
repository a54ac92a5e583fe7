#pragma once

#include "mama/graph.hpp"
#include "mama/model.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mama {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Per-state value; +inf marks states that cannot reach the goal.
using ValueVector = std::vector<double>;

/// Chosen action index per state; empty where no choice is made (goal or
/// infinite-valued states).
using StationaryPolicy = std::vector<std::optional<std::size_t>>;

struct SspAction {
    std::string label;
    double cost = 0.0;
    Distribution kernel;

    friend bool operator==(const SspAction&, const SspAction&) = default;
};

/// Non-negative stochastic shortest path problem.
struct SspInstance {
    std::vector<std::string> names;
    StateIndex initial = 0;
    std::vector<std::vector<SspAction>> actions;
    StateSet goals;
    /// Terminal cost g on goal states (ignored elsewhere).
    std::vector<double> terminal;
    /// States fixed at +inf by the caller's qualitative pre-pass.
    StateSet infinite;

    std::size_t num_states() const { return actions.size(); }

    /// Empty instance with `n` states.
    static SspInstance with_states(std::size_t n);
    /// Choice graph of all actions (goal states included).
    ChoiceGraph graph() const;
    /// Throws InvalidArgument unless kernels are stochastic and costs non-negative.
    void check() const;
};

struct SolverOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 10'000'000;
};

struct SspSolution {
    ValueVector values;
    StationaryPolicy policy;
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// Gauss-Seidel value iteration on the Bellman operator
///   v(s) = opt_a c(s,a) + sum_s' P(s,a,s') v(s'),   v = g on goals,
/// started from 0. Stops once the sweep change is at most `tolerance` and the
/// geometric tail estimate of the remaining error is below it as well.
/// Zero-cost end components are collapsed first in Mode::Min so that the
/// least fixpoint is the optimal cost. Ties in the extracted policy go to the
/// lexicographically smallest label.
SspSolution solve_ssp(const SspInstance& ssp, Mode mode, const SolverOptions& options = {});

/// One application of the Bellman operator (used for fixpoint checks).
ValueVector bellman(const SspInstance& ssp, const ValueVector& values, Mode mode);

/// Optimal expected terminal value collected at the first Markovian state
/// reached from each probabilistic state in zero time. Built once per model;
/// `solve` then runs in a single topological sweep over the probabilistic
/// states (cyclic parts, which must be unreachable, are iterated).
class ZeroTimeSolver {
public:
    explicit ZeroTimeSolver(const ValidatedMA& vma);

    /// Overwrites the probabilistic entries of `values`; Markovian entries are
    /// the terminal values.
    void solve(std::vector<double>& values, Mode mode) const;

private:
    struct Component {
        std::vector<StateIndex> states;
        bool cyclic = false;
    };
    const ValidatedMA* vma_;
    std::vector<Component> order_;
};

/// Convenience wrapper over ZeroTimeSolver: returns a full-size vector equal to
/// `terminal` on Markovian states.
ValueVector zero_time_reach(const ValidatedMA& vma, const ValueVector& terminal, Mode mode);

} // namespace mama
