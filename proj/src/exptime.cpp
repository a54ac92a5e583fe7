#include "mama/exptime.hpp"

namespace mama {

SspInstance build_ssp_et(const ValidatedMA& vma, const GoalSet& goals)
{
    check_goal_set(vma, goals);
    SspInstance ssp = SspInstance::with_states(vma.num_states());
    ssp.initial = vma.initial();
    ssp.goals = goals;
    for (StateIndex s = 0; s < vma.num_states(); ++s) {
        ssp.names[s] = vma.name(s);
        if (goals.contains(s))
            continue;
        const double cost = vma.is_markovian(s) ? 1.0 / vma.exit_rate(s) : 0.0;
        for (const Choice& c : vma.choices(s))
            ssp.actions[s].push_back({c.label, cost, c.distribution});
    }
    return ssp;
}

ExpectedTimeResult expected_time(const ValidatedMA& vma, const GoalSet& goals, Mode mode, double tolerance)
{
    check_goal_set(vma, goals);
    require_non_zeno(vma);
    ValidatedMA absorbed = make_absorbing(vma, goals);
    SspInstance ssp = build_ssp_et(absorbed, goals);
    StateSet finite = almost_sure_reach(ssp.graph(), goals, mode == Mode::Min ? Mode::Max : Mode::Min);
    for (StateIndex s = 0; s < ssp.num_states(); ++s)
        if (!finite.contains(s))
            ssp.infinite.insert(s);
    SolverOptions options;
    options.tolerance = tolerance;
    SspSolution sol = solve_ssp(ssp, mode, options);
    return {std::move(sol.values), std::move(sol.policy), sol.iterations};
}

} // namespace mama
