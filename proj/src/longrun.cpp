#include "mama/longrun.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mama {

namespace {

constexpr std::size_t kRviIterationCap = 10'000'000;

// Damped embedded MDP of one MEC over local indices.
struct LocalMdp {
    struct Action {
        std::size_t choice;
        const std::string* label;
        std::vector<std::pair<std::size_t, double>> kernel;
    };
    std::vector<StateIndex> states;
    std::vector<std::vector<Action>> actions;
    std::vector<double> c1, c2;
};

LocalMdp restrict_to(const ValidatedMA& vma, const Mec& mec, const GoalSet& goals)
{
    LocalMdp mdp;
    mdp.states = mec.states;
    std::vector<std::size_t> local(vma.num_states(), SIZE_MAX);
    for (std::size_t i = 0; i < mec.states.size(); ++i)
        local[mec.states[i]] = i;
    const std::size_t m = mec.states.size();
    mdp.actions.resize(m);
    mdp.c1.assign(m, 0.0);
    mdp.c2.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const StateIndex s = mec.states[i];
        if (vma.is_markovian(s)) {
            mdp.c2[i] = 1.0 / vma.exit_rate(s);
            if (goals.contains(s))
                mdp.c1[i] = mdp.c2[i];
        }
        auto choices = vma.choices(s);
        for (std::size_t c : mec.actions.at(s)) {
            LocalMdp::Action action{c, &choices[c].label, {{i, 0.5}}};
            for (const Branch& b : choices[c].distribution) {
                std::size_t t = local[b.target];
                if (t == SIZE_MAX)
                    throw Error(Errc::InvalidArgument, "kept action leaves the end component");
                if (t == i)
                    action.kernel.front().second += 0.5 * b.probability;
                else
                    action.kernel.push_back({t, 0.5 * b.probability});
            }
            mdp.actions[i].push_back(std::move(action));
        }
    }
    return mdp;
}

bool better(double candidate, double incumbent, Mode mode)
{
    return mode == Mode::Min ? candidate < incumbent : candidate > incumbent;
}

double q_value(const LocalMdp& mdp, std::size_t i, const LocalMdp::Action& a, double k, const std::vector<double>& h)
{
    double q = mdp.c1[i] - k * mdp.c2[i];
    for (const auto& [t, p] : a.kernel)
        q += p * h[t];
    return q;
}

class RelativeValueIteration {
public:
    RelativeValueIteration(const LocalMdp& mdp, Mode mode, double tolerance)
        : mdp_(mdp), mode_(mode), tolerance_(tolerance), h_(mdp.states.size(), 0.0), next_(h_.size())
    {
    }

    // Sign of the optimal gain of c1 - k*c2; +1 also when it is zero within
    // tolerance. With `settle` the iteration runs until the span test holds.
    int sign(double k, bool settle = false)
    {
        const double stop = tolerance_ * std::max(1.0, std::abs(k));
        for (std::size_t it = 0; it < kRviIterationCap; ++it) {
            ++iterations_;
            double lo = kInfinity, hi = -kInfinity;
            for (std::size_t i = 0; i < h_.size(); ++i) {
                double best = mode_ == Mode::Min ? kInfinity : -kInfinity;
                for (const auto& a : mdp_.actions[i]) {
                    double q = q_value(mdp_, i, a, k, h_);
                    if (better(q, best, mode_))
                        best = q;
                }
                next_[i] = best;
                lo = std::min(lo, best - h_[i]);
                hi = std::max(hi, best - h_[i]);
            }
            const double offset = next_[0];
            for (std::size_t i = 0; i < h_.size(); ++i)
                h_[i] = next_[i] - offset;
            if (!settle && lo > 0.0)
                return 1;
            if (!settle && hi < 0.0)
                return -1;
            if (hi - lo <= stop)
                return lo + hi >= 0.0 ? 1 : -1;
        }
        throw NotConvergedError(iterations_, kInfinity);
    }

    const std::vector<double>& bias() const { return h_; }
    std::size_t iterations() const { return iterations_; }

private:
    const LocalMdp& mdp_;
    Mode mode_;
    double tolerance_;
    std::vector<double> h_, next_;
    std::size_t iterations_ = 0;
};

std::size_t smallest_label(const LocalMdp::Action* begin, std::size_t count)
{
    std::size_t pick = 0;
    for (std::size_t j = 1; j < count; ++j)
        if (*begin[j].label < *begin[pick].label)
            pick = j;
    return pick;
}

// Sends every member of `mec` towards `target` along kept choices.
void steer(const ValidatedMA& vma, const Mec& mec, StateIndex target, MaPolicy& policy)
{
    std::set<StateIndex> reached{target};
    bool grew = true;
    while (grew) {
        grew = false;
        std::vector<StateIndex> layer;
        for (StateIndex s : mec.states) {
            if (reached.count(s))
                continue;
            auto choices = vma.choices(s);
            std::optional<std::size_t> pick;
            for (std::size_t c : mec.actions.at(s)) {
                const auto& d = choices[c].distribution;
                bool progress = std::any_of(d.begin(), d.end(), [&](const Branch& b) { return reached.count(b.target) != 0; });
                if (progress && (!pick || choices[c].label < choices[*pick].label))
                    pick = c;
            }
            if (pick) {
                policy[s] = *pick;
                layer.push_back(s);
            }
        }
        for (StateIndex s : layer)
            reached.insert(s);
        grew = !layer.empty();
    }
}

} // namespace

UnichainResult lra_unichain(const ValidatedMA& vma, const Mec& mec, const GoalSet& goals, Mode mode, double tolerance)
{
    if (mec.states.empty())
        throw Error(Errc::EmptyMec, "end component has no states");
    if (!(tolerance > 0.0))
        throw Error(Errc::InvalidArgument, "tolerance must be positive");
    check_goal_set(vma, goals);
    LocalMdp mdp = restrict_to(vma, mec, goals);

    UnichainResult result;
    std::size_t markovian = 0, in_goal = 0;
    for (std::size_t i = 0; i < mdp.states.size(); ++i) {
        if (mdp.c2[i] > 0.0)
            ++markovian;
        if (mdp.c1[i] > 0.0)
            ++in_goal;
    }
    if (markovian == 0 || in_goal == 0 || in_goal == markovian) {
        // Every policy inside the component gives the same fraction.
        result.value = markovian != 0 && in_goal == markovian ? 1.0 : 0.0;
        for (std::size_t i = 0; i < mdp.states.size(); ++i) {
            const auto& acts = mdp.actions[i];
            result.policy[mdp.states[i]] = acts[smallest_label(acts.data(), acts.size())].choice;
        }
        return result;
    }

    RelativeValueIteration rvi(mdp, mode, tolerance);
    double lo = 0.0, hi = 1.0;
    while (hi - lo > tolerance) {
        const double k = 0.5 * (lo + hi);
        if (rvi.sign(k) > 0)
            lo = k;
        else
            hi = k;
    }
    result.value = 0.5 * (lo + hi);
    rvi.sign(result.value, true);

    const auto& h = rvi.bias();
    for (std::size_t i = 0; i < mdp.states.size(); ++i) {
        const auto& acts = mdp.actions[i];
        double best = mode == Mode::Min ? kInfinity : -kInfinity;
        for (const auto& a : acts) {
            double q = q_value(mdp, i, a, result.value, h);
            if (better(q, best, mode))
                best = q;
        }
        std::optional<std::size_t> pick;
        for (std::size_t j = 0; j < acts.size(); ++j) {
            double q = q_value(mdp, i, acts[j], result.value, h);
            if (std::abs(q - best) <= 1e-9 * std::max(1.0, std::abs(best)) &&
                (!pick || *acts[j].label < *acts[*pick].label))
                pick = j;
        }
        result.policy[mdp.states[i]] = acts[*pick].choice;
    }
    result.iterations = rvi.iterations();
    return result;
}

LraQuotient build_ssp_lra(const ValidatedMA& vma, const std::vector<Mec>& mecs, const std::vector<double>& mec_values)
{
    if (mecs.size() != mec_values.size())
        throw Error(Errc::InvalidArgument, "one value per end component is required");
    const std::size_t n = vma.num_states();
    constexpr StateIndex none = SIZE_MAX;
    std::vector<std::size_t> mec_of(n, none);
    for (std::size_t j = 0; j < mecs.size(); ++j)
        for (StateIndex s : mecs[j].states)
            mec_of[s] = j;

    LraQuotient q;
    q.state_of.assign(n, none);
    std::vector<std::string> names;
    std::set<std::string> taken(vma.underlying().names().begin(), vma.underlying().names().end());
    for (StateIndex s = 0; s < n; ++s)
        if (mec_of[s] == none) {
            q.state_of[s] = names.size();
            names.push_back(vma.name(s));
        }
    auto fresh = [&](std::string name) {
        while (taken.count(name))
            name += '\'';
        taken.insert(name);
        return name;
    };
    for (std::size_t j = 0; j < mecs.size(); ++j) {
        q.gates.push_back(names.size());
        names.push_back(fresh("u" + std::to_string(j + 1)));
    }
    for (std::size_t j = 0; j < mecs.size(); ++j) {
        q.sinks.push_back(names.size());
        names.push_back(fresh("q" + std::to_string(j + 1)));
    }
    for (StateIndex s = 0; s < n; ++s)
        if (mec_of[s] != none)
            q.state_of[s] = q.gates[mec_of[s]];

    q.ssp = SspInstance::with_states(names.size());
    q.ssp.names = std::move(names);
    q.ssp.initial = q.state_of[vma.initial()];
    auto retarget = [&](const Distribution& d) {
        std::map<StateIndex, double> merged;
        for (const Branch& b : d)
            merged[q.state_of[b.target]] += b.probability;
        Distribution out;
        for (const auto& [t, p] : merged)
            out.push_back({t, p});
        return out;
    };

    for (StateIndex s = 0; s < n; ++s) {
        if (mec_of[s] != none)
            continue;
        for (const Choice& c : vma.choices(s))
            q.ssp.actions[q.state_of[s]].push_back({c.label, 0.0, retarget(c.distribution)});
    }
    q.origins.resize(mecs.size());
    for (std::size_t j = 0; j < mecs.size(); ++j) {
        auto& gate = q.ssp.actions[q.gates[j]];
        gate.push_back({std::string(kMarkovianAction), 0.0, {{q.sinks[j], 1.0}}});
        q.origins[j].push_back(std::nullopt);
        for (StateIndex s : mecs[j].states) {
            if (!vma.is_probabilistic(s))
                continue;
            auto choices = vma.choices(s);
            const auto& kept = mecs[j].actions.at(s);
            for (std::size_t c = 0; c < choices.size(); ++c) {
                if (std::find(kept.begin(), kept.end(), c) != kept.end())
                    continue;
                gate.push_back({vma.name(s) + "." + choices[c].label, 0.0, retarget(choices[c].distribution)});
                q.origins[j].push_back(std::make_pair(s, c));
            }
        }
        const StateIndex sink = q.sinks[j];
        q.ssp.actions[sink].push_back({std::string(kMarkovianAction), 0.0, {{sink, 1.0}}});
        q.ssp.goals.insert(sink);
        q.ssp.terminal[sink] = mec_values[j];
    }
    return q;
}

LraResult lra(const ValidatedMA& vma, const GoalSet& goals, Mode mode, double tolerance)
{
    check_goal_set(vma, goals);
    require_non_zeno(vma);
    GoalSet markovian_goals(vma.num_states());
    for (StateIndex s : goals.members())
        if (vma.is_markovian(s))
            markovian_goals.insert(s);

    LraResult result;
    result.mecs = mecs(vma);
    std::vector<UnichainResult> local;
    for (const Mec& mec : result.mecs) {
        local.push_back(lra_unichain(vma, mec, markovian_goals, mode, tolerance));
        result.mec_values.push_back(local.back().value);
        result.iterations += local.back().iterations;
    }

    LraQuotient q = build_ssp_lra(vma, result.mecs, result.mec_values);
    SolverOptions options;
    options.tolerance = tolerance;
    SspSolution sol = solve_ssp(q.ssp, mode, options);
    result.iterations += sol.iterations;

    const std::size_t n = vma.num_states();
    result.values.resize(n);
    result.policy.assign(n, 0);
    for (StateIndex s = 0; s < n; ++s) {
        result.values[s] = std::clamp(sol.values[q.state_of[s]], 0.0, 1.0);
        const auto pick = sol.policy[q.state_of[s]];
        if (vma.is_probabilistic(s) && pick && (q.gates.empty() || q.state_of[s] < q.gates.front()))
            result.policy[s] = *pick;
    }
    for (std::size_t j = 0; j < result.mecs.size(); ++j) {
        const Mec& mec = result.mecs[j];
        const auto pick = sol.policy[q.gates[j]];
        const auto origin = pick ? q.origins[j][*pick] : std::nullopt;
        if (!origin) {
            for (const auto& [s, c] : local[j].policy)
                result.policy[s] = c;
            continue;
        }
        result.policy[origin->first] = origin->second;
        steer(vma, mec, origin->first, result.policy);
    }
    return result;
}

} // namespace mama
