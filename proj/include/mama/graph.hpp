#pragma once

#include "mama/model.hpp"

#include <map>
#include <optional>
#include <vector>

namespace mama {

/// Successor structure of an MDP. Each state lists its enabled choices; a
/// choice keeps the index it has in the source model so results can be
/// mapped back after filtering.
struct ChoiceGraph {
    struct Choice {
        std::size_t id;
        std::vector<StateIndex> successors;
    };
    std::vector<std::vector<Choice>> choices;

    std::size_t num_states() const { return choices.size(); }

    /// Every choice of every state of `vma`.
    static ChoiceGraph of(const ValidatedMA& vma);
};

/// Strongly connected components of a directed graph. Each component is
/// sorted; components are ordered by their smallest member.
std::vector<std::vector<StateIndex>> strongly_connected_components(
    const std::vector<std::vector<StateIndex>>& adjacency);

/// SCCs of the union graph (all probabilistic and Markovian edges).
std::vector<std::vector<StateIndex>> sccs(const ValidatedMA& vma);

/// The first SCC reachable from the initial state that carries a cycle of
/// probabilistic transitions only, or nullopt for a non-Zeno model.
std::optional<std::vector<StateIndex>> check_non_zeno(const ValidatedMA& vma);

/// Throws ZenoError naming the witness if `check_non_zeno` finds one.
void require_non_zeno(const ValidatedMA& vma);

struct Mec {
    std::vector<StateIndex> states;
    /// Kept choice indices per member (index 0, the Markovian pseudo-action,
    /// for Markovian states).
    std::map<StateIndex, std::vector<std::size_t>> actions;

    bool contains(StateIndex s) const { return actions.count(s) != 0; }

    friend bool operator==(const Mec&, const Mec&) = default;
};

/// Maximal end components of an arbitrary choice graph, sorted by smallest member.
std::vector<Mec> maximal_end_components(const ChoiceGraph& graph);

/// Maximal end components of the automaton.
std::vector<Mec> mecs(const ValidatedMA& vma);

/// Mode::Max: states from which some policy reaches `goals` almost surely.
/// Mode::Min: states from which every policy does.
StateSet almost_sure_reach(const ChoiceGraph& graph, const StateSet& goals, Mode mode);
StateSet almost_sure_reach(const ValidatedMA& vma, const GoalSet& goals, Mode mode);

/// States that can reach `targets` along edges of `graph`.
StateSet backward_reachable(const ChoiceGraph& graph, const StateSet& targets);

} // namespace mama
