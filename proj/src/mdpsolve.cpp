#include "mama/mdpsolve.hpp"

#include <algorithm>
#include <cmath>

namespace mama {

SspInstance SspInstance::with_states(std::size_t n)
{
    SspInstance ssp;
    ssp.names.resize(n);
    ssp.actions.resize(n);
    ssp.goals = StateSet(n);
    ssp.terminal.assign(n, 0.0);
    ssp.infinite = StateSet(n);
    return ssp;
}

ChoiceGraph SspInstance::graph() const
{
    ChoiceGraph g;
    g.choices.resize(num_states());
    for (StateIndex s = 0; s < num_states(); ++s)
        for (std::size_t a = 0; a < actions[s].size(); ++a) {
            ChoiceGraph::Choice c{a, {}};
            for (const Branch& b : actions[s][a].kernel)
                c.successors.push_back(b.target);
            g.choices[s].push_back(std::move(c));
        }
    return g;
}

void SspInstance::check() const
{
    const std::size_t n = num_states();
    if (goals.universe() != n || infinite.universe() != n || terminal.size() != n || names.size() != n)
        throw Error(Errc::InvalidArgument, "SSP instance has inconsistent dimensions");
    for (StateIndex s = 0; s < n; ++s) {
        if (goals.contains(s)) {
            if (!(terminal[s] >= 0.0))
                throw Error(Errc::InvalidArgument, "negative terminal cost at " + names[s]);
            continue;
        }
        if (actions[s].empty() && !infinite.contains(s))
            throw Error(Errc::InvalidArgument, "state " + names[s] + " has no action");
        for (const SspAction& a : actions[s]) {
            if (!(a.cost >= 0.0))
                throw Error(Errc::InvalidArgument, "negative cost at " + names[s]);
            double sum = 0.0;
            for (const Branch& b : a.kernel) {
                if (b.target >= n)
                    throw Error(Errc::InvalidArgument, "kernel target out of range at " + names[s]);
                sum += b.probability;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw Error(Errc::InvalidArgument, "kernel of " + names[s] + "/" + a.label + " is not stochastic");
        }
    }
}

namespace {

bool better(double candidate, double incumbent, Mode mode)
{
    return mode == Mode::Min ? candidate < incumbent : candidate > incumbent;
}

double q_value(const SspAction& a, const ValueVector& v)
{
    double q = a.cost;
    for (const Branch& b : a.kernel) {
        if (std::isinf(v[b.target]))
            return kInfinity;
        q += b.probability * v[b.target];
    }
    return q;
}

// Optimal value over the actions of `s`; +inf propagates symbolically.
double optimum(const std::vector<SspAction>& actions, const ValueVector& v, Mode mode)
{
    double best = mode == Mode::Min ? kInfinity : -kInfinity;
    for (const SspAction& a : actions) {
        double q = q_value(a, v);
        if (better(q, best, mode))
            best = q;
    }
    return best;
}

std::size_t greedy_action(const std::vector<SspAction>& actions, const ValueVector& v, Mode mode, double tie)
{
    double best = optimum(actions, v, mode);
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        double q = q_value(actions[i], v);
        bool tied = std::isinf(best) ? q == best : std::abs(q - best) <= tie;
        if (tied && (!pick || actions[i].label < actions[*pick].label))
            pick = i;
    }
    return *pick;
}

StateSet extended_infinite(const SspInstance& ssp, Mode mode)
{
    // Mode::Min needs some proper policy, Mode::Max needs all policies proper.
    StateSet finite = almost_sure_reach(ssp.graph(), ssp.goals, mode == Mode::Min ? Mode::Max : Mode::Min);
    StateSet inf = ssp.infinite;
    for (StateIndex s = 0; s < ssp.num_states(); ++s)
        if (!finite.contains(s) && !ssp.goals.contains(s))
            inf.insert(s);
    return inf;
}

SspSolution value_iteration(const SspInstance& ssp, Mode mode, const SolverOptions& options)
{
    const std::size_t n = ssp.num_states();
    SspSolution sol;
    sol.values.assign(n, 0.0);
    sol.policy.assign(n, std::nullopt);
    std::vector<StateIndex> active;
    for (StateIndex s = 0; s < n; ++s) {
        if (ssp.goals.contains(s))
            sol.values[s] = ssp.terminal[s];
        else if (ssp.infinite.contains(s))
            sol.values[s] = kInfinity;
        else
            active.push_back(s);
    }

    double previous = kInfinity;
    bool converged = active.empty();
    std::size_t it = 0;
    while (!converged) {
        if (it == options.max_iterations)
            throw NotConvergedError(it, previous);
        ++it;
        double residual = 0.0;
        double magnitude = 0.0;
        for (StateIndex s : active) {
            double next = optimum(ssp.actions[s], sol.values, mode);
            double old = sol.values[s];
            if (std::isinf(next) || std::isinf(old)) {
                if (next != old)
                    residual = kInfinity;
            } else {
                residual = std::max(residual, std::abs(next - old));
                magnitude = std::max(magnitude, std::abs(next));
            }
            sol.values[s] = next;
        }
        const double rate = residual / previous;
        if (residual <= options.tolerance) {
            if (residual == 0.0 || residual <= 4e-16 * magnitude)
                converged = true;
            else if (rate < 1.0 && residual * rate / (1.0 - rate) <= options.tolerance)
                converged = true;
        }
        previous = residual;
        sol.residual = residual;
    }
    sol.iterations = it;

    for (StateIndex s : active)
        if (!std::isinf(sol.values[s]))
            sol.policy[s] = greedy_action(ssp.actions[s], sol.values, mode, options.tolerance);
    return sol;
}

// Routes every member of `mec` to `owner` through its kept actions.
void steer_within(const SspInstance& ssp, const Mec& mec, StateIndex owner, StationaryPolicy& policy)
{
    StateSet reached(ssp.num_states());
    reached.insert(owner);
    bool grew = true;
    while (grew) {
        grew = false;
        for (StateIndex s : mec.states) {
            if (reached.contains(s))
                continue;
            std::optional<std::size_t> pick;
            for (std::size_t a : mec.actions.at(s)) {
                const auto& kernel = ssp.actions[s][a].kernel;
                bool progress = std::any_of(kernel.begin(), kernel.end(),
                                            [&](const Branch& b) { return reached.contains(b.target); });
                if (progress && (!pick || ssp.actions[s][a].label < ssp.actions[s][*pick].label))
                    pick = a;
            }
            if (pick) {
                policy[s] = pick;
                grew = true;
            }
        }
        for (StateIndex s : mec.states)
            if (policy[s] && !reached.contains(s) && s != owner)
                reached.insert(s);
    }
}

} // namespace

ValueVector bellman(const SspInstance& ssp, const ValueVector& values, Mode mode)
{
    ValueVector out(ssp.num_states());
    for (StateIndex s = 0; s < ssp.num_states(); ++s) {
        if (ssp.goals.contains(s))
            out[s] = ssp.terminal[s];
        else if (ssp.infinite.contains(s))
            out[s] = kInfinity;
        else
            out[s] = optimum(ssp.actions[s], values, mode);
    }
    return out;
}

SspSolution solve_ssp(const SspInstance& input, Mode mode, const SolverOptions& options)
{
    if (!(options.tolerance > 0.0))
        throw Error(Errc::InvalidArgument, "tolerance must be positive");
    input.check();
    SspInstance ssp = input;
    ssp.infinite = extended_infinite(input, mode);
    if (mode == Mode::Max)
        return value_iteration(ssp, mode, options);

    // Zero-cost end components outside the goal would pin the least fixpoint
    // below the optimum; collapse each into its smallest member.
    const std::size_t n = ssp.num_states();
    ChoiceGraph zero;
    zero.choices.resize(n);
    auto open = [&](StateIndex s) { return !ssp.goals.contains(s) && !ssp.infinite.contains(s); };
    for (StateIndex s = 0; s < n; ++s) {
        if (!open(s))
            continue;
        for (std::size_t a = 0; a < ssp.actions[s].size(); ++a) {
            const SspAction& act = ssp.actions[s][a];
            if (act.cost != 0.0)
                continue;
            ChoiceGraph::Choice c{a, {}};
            bool inside = true;
            for (const Branch& b : act.kernel) {
                inside = inside && open(b.target);
                c.successors.push_back(b.target);
            }
            if (inside)
                zero.choices[s].push_back(std::move(c));
        }
    }
    std::vector<Mec> traps = maximal_end_components(zero);
    if (traps.empty())
        return value_iteration(ssp, mode, options);

    SspInstance collapsed = ssp;
    std::vector<StateIndex> rep(n);
    for (StateIndex s = 0; s < n; ++s)
        rep[s] = s;
    struct Origin {
        StateIndex state;
        std::size_t action;
    };
    std::vector<std::vector<Origin>> origins(n);
    for (const Mec& trap : traps)
        for (StateIndex s : trap.states)
            rep[s] = trap.states.front();
    for (const Mec& trap : traps) {
        const StateIndex r = trap.states.front();
        std::vector<SspAction> exits;
        for (StateIndex s : trap.states) {
            const auto& kept = trap.actions.at(s);
            for (std::size_t a = 0; a < ssp.actions[s].size(); ++a) {
                if (std::find(kept.begin(), kept.end(), a) != kept.end())
                    continue;
                SspAction exit = ssp.actions[s][a];
                for (Branch& b : exit.kernel)
                    b.target = rep[b.target];
                exits.push_back(std::move(exit));
                origins[r].push_back({s, a});
            }
        }
        collapsed.actions[r] = std::move(exits);
        for (StateIndex s : trap.states)
            if (s != r)
                collapsed.actions[s] = {SspAction{"", 0.0, {{r, 1.0}}}};
    }

    SspSolution sol = value_iteration(collapsed, mode, options);
    for (const Mec& trap : traps) {
        const StateIndex r = trap.states.front();
        for (StateIndex s : trap.states)
            sol.policy[s].reset();
        if (std::isinf(sol.values[r]))
            continue;
        // Re-pick the exit with the original labels so ties stay deterministic.
        std::optional<std::size_t> pick;
        double best = sol.values[r];
        for (std::size_t i = 0; i < collapsed.actions[r].size(); ++i) {
            double q = q_value(collapsed.actions[r][i], sol.values);
            if (std::abs(q - best) <= options.tolerance &&
                (!pick || collapsed.actions[r][i].label < collapsed.actions[r][*pick].label))
                pick = i;
        }
        if (!pick)
            pick = greedy_action(collapsed.actions[r], sol.values, mode, kInfinity);
        const Origin origin = origins[r][*pick];
        sol.policy[origin.state] = origin.action;
        steer_within(ssp, trap, origin.state, sol.policy);
    }
    return sol;
}

ZeroTimeSolver::ZeroTimeSolver(const ValidatedMA& vma) : vma_(&vma)
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
    auto components = strongly_connected_components(adjacency);
    std::vector<std::size_t> component_of(n);
    for (std::size_t i = 0; i < components.size(); ++i)
        for (StateIndex s : components[i])
            component_of[s] = i;

    // Post-order over the condensation puts successors first.
    std::vector<bool> done(components.size(), false);
    std::vector<std::size_t> order;
    std::vector<std::pair<std::size_t, std::size_t>> frames;
    std::vector<std::vector<std::size_t>> dag(components.size());
    for (StateIndex s = 0; s < n; ++s)
        for (StateIndex t : adjacency[s])
            if (component_of[t] != component_of[s])
                dag[component_of[s]].push_back(component_of[t]);
    for (std::size_t root = 0; root < components.size(); ++root) {
        if (done[root])
            continue;
        done[root] = true;
        frames.push_back({root, 0});
        while (!frames.empty()) {
            auto& [c, pos] = frames.back();
            if (pos < dag[c].size()) {
                std::size_t d = dag[c][pos++];
                if (!done[d]) {
                    done[d] = true;
                    frames.push_back({d, 0});
                }
                continue;
            }
            order.push_back(c);
            frames.pop_back();
        }
    }

    for (std::size_t c : order) {
        const auto& states = components[c];
        if (!vma.is_probabilistic(states.front()))
            continue;
        const auto& adj = adjacency[states.front()];
        bool cyclic = states.size() > 1 || std::find(adj.begin(), adj.end(), states.front()) != adj.end();
        if (cyclic) {
            for (StateIndex s : states)
                if (vma.is_reachable(s))
                    throw ZenoError(states, "probabilistic cycle through '" + vma.name(s) + "' is reachable");
        }
        order_.push_back({states, cyclic});
    }
}

void ZeroTimeSolver::solve(std::vector<double>& values, Mode mode) const
{
    auto evaluate = [&](StateIndex s) {
        double best = mode == Mode::Min ? kInfinity : -kInfinity;
        for (const Choice& c : vma_->choices(s)) {
            double q = 0.0;
            for (const Branch& b : c.distribution)
                q += b.probability * values[b.target];
            if (better(q, best, mode))
                best = q;
        }
        return best;
    };
    for (const Component& component : order_) {
        if (!component.cyclic) {
            values[component.states.front()] = evaluate(component.states.front());
            continue;
        }
        // Unreachable zero-time cycle: least fixpoint from below.
        for (StateIndex s : component.states)
            values[s] = 0.0;
        for (std::size_t it = 0;; ++it) {
            double change = 0.0;
            for (StateIndex s : component.states) {
                double next = evaluate(s);
                change = std::max(change, std::abs(next - values[s]));
                values[s] = next;
            }
            if (change <= 1e-15)
                break;
            if (it == 10'000'000)
                throw NotConvergedError(it, change);
        }
    }
}

ValueVector zero_time_reach(const ValidatedMA& vma, const ValueVector& terminal, Mode mode)
{
    if (terminal.size() != vma.num_states())
        throw Error(Errc::InvalidArgument, "terminal vector has wrong size");
    ValueVector values = terminal;
    ZeroTimeSolver(vma).solve(values, mode);
    return values;
}

} // namespace mama
