#pragma once

#include "mama/error.hpp"

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mama {

/// Label of the single pseudo-action of a Markovian state when the automaton
/// is viewed as an MDP. Matches the Markovian block marker of the text format.
inline constexpr std::string_view kMarkovianAction = "!";

enum class Mode { Min, Max };

const char* to_string(Mode mode);

struct Branch {
    StateIndex target;
    double probability;

    friend bool operator==(const Branch&, const Branch&) = default;
};

using Distribution = std::vector<Branch>;

struct ProbTransition {
    std::string action;
    Distribution distribution;

    friend bool operator==(const ProbTransition&, const ProbTransition&) = default;
};

struct MarkovEdge {
    StateIndex target;
    double rate;

    friend bool operator==(const MarkovEdge&, const MarkovEdge&) = default;
};

/// Raw automaton as read from a model file: states are interned names,
/// transitions are kept in input order.
class MarkovAutomaton {
public:
    /// Returns the index of `name`, adding the state if it is new.
    StateIndex intern(std::string_view name);
    std::optional<StateIndex> find(std::string_view name) const;

    std::size_t num_states() const { return names_.size(); }
    const std::string& name(StateIndex s) const { return names_.at(s); }
    const std::vector<std::string>& names() const { return names_; }

    StateIndex initial() const { return initial_; }
    void set_initial(StateIndex s) { initial_ = s; }

    const std::vector<ProbTransition>& prob_transitions(StateIndex s) const { return prob_.at(s); }
    const std::vector<MarkovEdge>& markov_edges(StateIndex s) const { return markov_.at(s); }
    std::vector<ProbTransition>& prob_transitions(StateIndex s) { return prob_.at(s); }
    std::vector<MarkovEdge>& markov_edges(StateIndex s) { return markov_.at(s); }

    void add_prob_transition(StateIndex s, std::string action, Distribution distribution);
    void add_markov_edge(StateIndex s, StateIndex target, double rate);

    friend bool operator==(const MarkovAutomaton&, const MarkovAutomaton&) = default;

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, StateIndex> index_;
    StateIndex initial_ = 0;
    std::vector<std::vector<ProbTransition>> prob_;
    std::vector<std::vector<MarkovEdge>> markov_;
};

/// Name-based structural equality: equal state names, initial state and
/// per-state transitions (in order, bit-exact numbers), independent of the
/// interning order of the two automata.
bool structurally_equal(const MarkovAutomaton& a, const MarkovAutomaton& b);

/// Fixed-universe set of states.
class StateSet {
public:
    StateSet() = default;
    explicit StateSet(std::size_t universe, bool value = false) : bits_(universe, value) {}
    static StateSet of(std::size_t universe, std::initializer_list<StateIndex> members);
    static StateSet of(std::size_t universe, std::span<const StateIndex> members);

    std::size_t universe() const { return bits_.size(); }
    bool contains(StateIndex s) const { return s < bits_.size() && bits_[s]; }
    void insert(StateIndex s) { bits_.at(s) = true; }
    void erase(StateIndex s) { bits_.at(s) = false; }
    std::size_t count() const;
    bool empty() const { return count() == 0; }
    std::vector<StateIndex> members() const;

    friend bool operator==(const StateSet&, const StateSet&) = default;

private:
    std::vector<bool> bits_;
};

using GoalSet = StateSet;

/// One enabled choice of a state in the MDP view of the automaton: a named
/// probabilistic action, or the Markovian pseudo-action with distribution P(s,.).
struct Choice {
    std::string label;
    Distribution distribution;

    friend bool operator==(const Choice&, const Choice&) = default;
};

/// Stationary deterministic policy on a validated automaton: index into
/// `choices(s)` for every state (always 0 for Markovian states).
using MaPolicy = std::vector<std::size_t>;

/// Closed automaton with the Markovian/probabilistic partition and the
/// derived rate quantities. Immutable once built by `validate`.
class ValidatedMA {
public:
    const MarkovAutomaton& underlying() const { return ma_; }
    std::size_t num_states() const { return ma_.num_states(); }
    StateIndex initial() const { return ma_.initial(); }
    const std::string& name(StateIndex s) const { return ma_.name(s); }

    bool is_markovian(StateIndex s) const { return markovian_.at(s); }
    bool is_probabilistic(StateIndex s) const { return !markovian_.at(s); }
    std::size_t num_markovian() const;
    std::size_t num_probabilistic() const { return num_states() - num_markovian(); }

    /// E(s); zero for probabilistic states.
    double exit_rate(StateIndex s) const { return exit_rate_.at(s); }
    /// R(s,.) with parallel edges summed, sorted by target.
    std::span<const MarkovEdge> rates(StateIndex s) const { return rates_.at(s); }
    /// P(s,.) for Markovian states, sorted by target; empty for probabilistic states.
    std::span<const Branch> branch(StateIndex s) const;
    /// P(s,s') for a Markovian state.
    double branch_probability(StateIndex s, StateIndex target) const;
    std::span<const Choice> choices(StateIndex s) const { return choices_.at(s); }

    double lambda_max() const { return lambda_max_; }
    bool is_reachable(StateIndex s) const { return reachable_.at(s); }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Structural equality; warnings are ignored.
    friend bool operator==(const ValidatedMA& a, const ValidatedMA& b)
    {
        return a.ma_ == b.ma_;
    }

private:
    friend ValidatedMA validate(const MarkovAutomaton& ma);

    MarkovAutomaton ma_;
    std::vector<bool> markovian_;
    std::vector<double> exit_rate_;
    std::vector<std::vector<MarkovEdge>> rates_;
    std::vector<std::vector<Choice>> choices_;
    std::vector<bool> reachable_;
    std::vector<std::string> warnings_;
    double lambda_max_ = 0.0;
};

/// Tolerance on the sum of an input distribution.
inline constexpr double kDistributionTolerance = 1e-9;

/// Checks the structural invariants and closes the automaton: maximal-progress
/// closure, deadlock states become Markovian-absorbing (self-loop of rate 1),
/// parallel Markovian edges are summed and distributions renormalized.
ValidatedMA validate(const MarkovAutomaton& ma);

/// Replaces all transitions of every goal state by a Markovian self-loop of rate 1.
ValidatedMA make_absorbing(const ValidatedMA& vma, const GoalSet& goals);

/// Throws UnknownState unless `goals` is over the state space of `vma`.
void check_goal_set(const ValidatedMA& vma, const GoalSet& goals);

/// Distinct states in the support of all choices of `s`.
std::vector<StateIndex> successors(const ValidatedMA& vma, StateIndex s);

} // namespace mama
