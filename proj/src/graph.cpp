#include "mama/graph.hpp"

#include <algorithm>
#include <limits>

namespace mama {

ChoiceGraph ChoiceGraph::of(const ValidatedMA& vma)
{
    ChoiceGraph g;
    g.choices.resize(vma.num_states());
    for (StateIndex s = 0; s < vma.num_states(); ++s) {
        auto choices = vma.choices(s);
        for (std::size_t c = 0; c < choices.size(); ++c) {
            ChoiceGraph::Choice choice{c, {}};
            for (const Branch& b : choices[c].distribution)
                choice.successors.push_back(b.target);
            g.choices[s].push_back(std::move(choice));
        }
    }
    return g;
}

std::vector<std::vector<StateIndex>> strongly_connected_components(
    const std::vector<std::vector<StateIndex>>& adjacency)
{
    constexpr std::size_t unvisited = std::numeric_limits<std::size_t>::max();
    const std::size_t n = adjacency.size();
    std::vector<std::size_t> index(n, unvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<StateIndex> stack;
    std::vector<std::vector<StateIndex>> out;
    std::size_t counter = 0;

    // Explicit call stack: (vertex, next successor position).
    std::vector<std::pair<StateIndex, std::size_t>> frames;
    for (StateIndex root = 0; root < n; ++root) {
        if (index[root] != unvisited)
            continue;
        frames.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            auto& [v, pos] = frames.back();
            if (pos < adjacency[v].size()) {
                StateIndex w = adjacency[v][pos++];
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            StateIndex done = v;
            frames.pop_back();
            if (!frames.empty())
                low[frames.back().first] = std::min(low[frames.back().first], low[done]);
            if (low[done] == index[done]) {
                std::vector<StateIndex> component;
                StateIndex w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    component.push_back(w);
                } while (w != done);
                std::sort(component.begin(), component.end());
                out.push_back(std::move(component));
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

std::vector<std::vector<StateIndex>> sccs(const ValidatedMA& vma)
{
    std::vector<std::vector<StateIndex>> adjacency(vma.num_states());
    for (StateIndex s = 0; s < vma.num_states(); ++s)
        adjacency[s] = successors(vma, s);
    return strongly_connected_components(adjacency);
}

std::optional<std::vector<StateIndex>> check_non_zeno(const ValidatedMA& vma)
{
    const std::size_t n = vma.num_states();
    std::vector<std::vector<StateIndex>> adjacency(n);
    for (StateIndex s = 0; s < n; ++s) {
        if (!vma.is_probabilistic(s))
            continue;
        for (StateIndex t : successors(vma, s))
            if (vma.is_probabilistic(t))
                adjacency[s].push_back(t);
    }
    for (const auto& component : strongly_connected_components(adjacency)) {
        const StateIndex first = component.front();
        if (!vma.is_probabilistic(first) || !vma.is_reachable(first))
            continue;
        const bool cyclic = component.size() > 1 ||
                            std::find(adjacency[first].begin(), adjacency[first].end(), first) != adjacency[first].end();
        if (cyclic)
            return component;
    }
    return std::nullopt;
}

void require_non_zeno(const ValidatedMA& vma)
{
    auto witness = check_non_zeno(vma);
    if (!witness)
        return;
    std::string names;
    for (StateIndex s : *witness)
        names += (names.empty() ? "" : ", ") + vma.name(s);
    throw ZenoError(*witness, "reachable cycle of probabilistic states {" + names + "}");
}

std::vector<Mec> maximal_end_components(const ChoiceGraph& graph)
{
    const std::size_t n = graph.num_states();
    std::vector<bool> alive(n);
    std::vector<std::vector<std::size_t>> kept(n);
    for (StateIndex s = 0; s < n; ++s) {
        for (std::size_t c = 0; c < graph.choices[s].size(); ++c)
            kept[s].push_back(c);
        alive[s] = !kept[s].empty();
    }

    std::vector<std::vector<StateIndex>> components;
    std::vector<std::size_t> component_of(n);
    while (true) {
        std::vector<std::vector<StateIndex>> adjacency(n);
        for (StateIndex s = 0; s < n; ++s) {
            if (!alive[s])
                continue;
            for (std::size_t c : kept[s])
                for (StateIndex t : graph.choices[s][c].successors)
                    if (alive[t])
                        adjacency[s].push_back(t);
        }
        components = strongly_connected_components(adjacency);
        for (std::size_t i = 0; i < components.size(); ++i)
            for (StateIndex s : components[i])
                component_of[s] = i;

        bool changed = false;
        for (StateIndex s = 0; s < n; ++s) {
            if (!alive[s])
                continue;
            auto leaves = [&](std::size_t c) {
                for (StateIndex t : graph.choices[s][c].successors)
                    if (!alive[t] || component_of[t] != component_of[s])
                        return true;
                return false;
            };
            const std::size_t before = kept[s].size();
            std::erase_if(kept[s], leaves);
            if (kept[s].size() != before)
                changed = true;
            if (kept[s].empty())
                alive[s] = false;
        }
        if (!changed)
            break;
    }

    std::vector<Mec> out;
    for (const auto& component : components) {
        if (!alive[component.front()])
            continue;
        Mec mec;
        mec.states = component;
        for (StateIndex s : component) {
            auto& ids = mec.actions[s];
            for (std::size_t c : kept[s])
                ids.push_back(graph.choices[s][c].id);
        }
        out.push_back(std::move(mec));
    }
    return out;
}

std::vector<Mec> mecs(const ValidatedMA& vma)
{
    return maximal_end_components(ChoiceGraph::of(vma));
}

StateSet backward_reachable(const ChoiceGraph& graph, const StateSet& targets)
{
    const std::size_t n = graph.num_states();
    std::vector<std::vector<StateIndex>> reverse(n);
    for (StateIndex s = 0; s < n; ++s)
        for (const auto& c : graph.choices[s])
            for (StateIndex t : c.successors)
                reverse[t].push_back(s);
    StateSet seen = targets;
    std::vector<StateIndex> stack = targets.members();
    while (!stack.empty()) {
        StateIndex t = stack.back();
        stack.pop_back();
        for (StateIndex s : reverse[t])
            if (!seen.contains(s)) {
                seen.insert(s);
                stack.push_back(s);
            }
    }
    return seen;
}

namespace {

bool all_in(const std::vector<StateIndex>& states, const StateSet& set)
{
    return std::all_of(states.begin(), states.end(), [&](StateIndex t) { return set.contains(t); });
}

StateSet exists_almost_sure(const ChoiceGraph& graph, const StateSet& goals)
{
    const std::size_t n = graph.num_states();
    StateSet region(n, true);
    while (true) {
        StateSet attractor = goals;
        bool grew = true;
        while (grew) {
            grew = false;
            for (StateIndex s = 0; s < n; ++s) {
                if (attractor.contains(s) || !region.contains(s))
                    continue;
                for (const auto& c : graph.choices[s]) {
                    if (!all_in(c.successors, region))
                        continue;
                    bool progress = std::any_of(c.successors.begin(), c.successors.end(),
                                                [&](StateIndex t) { return attractor.contains(t); });
                    if (progress) {
                        attractor.insert(s);
                        grew = true;
                        break;
                    }
                }
            }
        }
        if (attractor == region)
            return region;
        region = attractor;
    }
}

StateSet forall_almost_sure(const ChoiceGraph& graph, const StateSet& goals)
{
    const std::size_t n = graph.num_states();
    // States from which some policy avoids the goals forever.
    StateSet avoid(n);
    for (StateIndex s = 0; s < n; ++s)
        if (!goals.contains(s))
            avoid.insert(s);
    bool shrunk = true;
    while (shrunk) {
        shrunk = false;
        for (StateIndex s = 0; s < n; ++s) {
            if (!avoid.contains(s) || graph.choices[s].empty())
                continue;
            bool stays = std::any_of(graph.choices[s].begin(), graph.choices[s].end(),
                                     [&](const auto& c) { return all_in(c.successors, avoid); });
            if (!stays) {
                avoid.erase(s);
                shrunk = true;
            }
        }
    }

    // Anything that can enter `avoid` before the goals fails the quantifier.
    std::vector<std::vector<StateIndex>> reverse(n);
    for (StateIndex s = 0; s < n; ++s)
        if (!goals.contains(s))
            for (const auto& c : graph.choices[s])
                for (StateIndex t : c.successors)
                    reverse[t].push_back(s);
    StateSet bad = avoid;
    std::vector<StateIndex> stack = avoid.members();
    while (!stack.empty()) {
        StateIndex t = stack.back();
        stack.pop_back();
        for (StateIndex s : reverse[t])
            if (!bad.contains(s)) {
                bad.insert(s);
                stack.push_back(s);
            }
    }
    StateSet out(n);
    for (StateIndex s = 0; s < n; ++s)
        if (!bad.contains(s))
            out.insert(s);
    return out;
}

} // namespace

StateSet almost_sure_reach(const ChoiceGraph& graph, const StateSet& goals, Mode mode)
{
    return mode == Mode::Max ? exists_almost_sure(graph, goals) : forall_almost_sure(graph, goals);
}

StateSet almost_sure_reach(const ValidatedMA& vma, const GoalSet& goals, Mode mode)
{
    check_goal_set(vma, goals);
    return almost_sure_reach(ChoiceGraph::of(vma), goals, mode);
}

} // namespace mama
