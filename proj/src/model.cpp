#include "mama/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace mama {

const char* to_string(Mode mode)
{
    return mode == Mode::Min ? "min" : "max";
}

StateIndex MarkovAutomaton::intern(std::string_view name)
{
    std::string key(name);
    if (auto it = index_.find(key); it != index_.end())
        return it->second;
    StateIndex s = names_.size();
    names_.push_back(key);
    index_.emplace(std::move(key), s);
    prob_.emplace_back();
    markov_.emplace_back();
    return s;
}

std::optional<StateIndex> MarkovAutomaton::find(std::string_view name) const
{
    if (auto it = index_.find(std::string(name)); it != index_.end())
        return it->second;
    return std::nullopt;
}

void MarkovAutomaton::add_prob_transition(StateIndex s, std::string action, Distribution distribution)
{
    prob_.at(s).push_back({std::move(action), std::move(distribution)});
}

void MarkovAutomaton::add_markov_edge(StateIndex s, StateIndex target, double rate)
{
    markov_.at(s).push_back({target, rate});
}

bool structurally_equal(const MarkovAutomaton& a, const MarkovAutomaton& b)
{
    if (a.num_states() != b.num_states() || a.num_states() == 0)
        return a.num_states() == b.num_states();
    std::vector<StateIndex> to_b(a.num_states());
    for (StateIndex s = 0; s < a.num_states(); ++s) {
        auto t = b.find(a.name(s));
        if (!t)
            return false;
        to_b[s] = *t;
    }
    if (to_b[a.initial()] != b.initial())
        return false;
    for (StateIndex s = 0; s < a.num_states(); ++s) {
        const auto& pa = a.prob_transitions(s);
        const auto& pb = b.prob_transitions(to_b[s]);
        if (pa.size() != pb.size())
            return false;
        for (std::size_t i = 0; i < pa.size(); ++i) {
            if (pa[i].action != pb[i].action || pa[i].distribution.size() != pb[i].distribution.size())
                return false;
            for (std::size_t j = 0; j < pa[i].distribution.size(); ++j) {
                const Branch& x = pa[i].distribution[j];
                const Branch& y = pb[i].distribution[j];
                if (to_b[x.target] != y.target || x.probability != y.probability)
                    return false;
            }
        }
        const auto& ma = a.markov_edges(s);
        const auto& mb = b.markov_edges(to_b[s]);
        if (ma.size() != mb.size())
            return false;
        for (std::size_t i = 0; i < ma.size(); ++i)
            if (to_b[ma[i].target] != mb[i].target || ma[i].rate != mb[i].rate)
                return false;
    }
    return true;
}

StateSet StateSet::of(std::size_t universe, std::initializer_list<StateIndex> members)
{
    return of(universe, std::span<const StateIndex>(members.begin(), members.size()));
}

StateSet StateSet::of(std::size_t universe, std::span<const StateIndex> members)
{
    StateSet set(universe);
    for (StateIndex s : members)
        set.insert(s);
    return set;
}

std::size_t StateSet::count() const
{
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::vector<StateIndex> StateSet::members() const
{
    std::vector<StateIndex> out;
    for (StateIndex s = 0; s < bits_.size(); ++s)
        if (bits_[s])
            out.push_back(s);
    return out;
}

std::size_t ValidatedMA::num_markovian() const
{
    return static_cast<std::size_t>(std::count(markovian_.begin(), markovian_.end(), true));
}

std::span<const Branch> ValidatedMA::branch(StateIndex s) const
{
    if (!markovian_.at(s))
        return {};
    return choices_[s].front().distribution;
}

double ValidatedMA::branch_probability(StateIndex s, StateIndex target) const
{
    for (const Branch& b : branch(s))
        if (b.target == target)
            return b.probability;
    return 0.0;
}

namespace {

std::string quoted(const MarkovAutomaton& ma, StateIndex s)
{
    return "'" + ma.name(s) + "'";
}

void check_target(const MarkovAutomaton& ma, StateIndex s, StateIndex target)
{
    if (target >= ma.num_states())
        throw Error(Errc::UnknownState, "state " + quoted(ma, s) + " has a transition to unknown state index " +
                                            std::to_string(target));
}

Distribution merged(const Distribution& dist)
{
    std::map<StateIndex, double> acc;
    double total = 0.0;
    for (const Branch& b : dist) {
        acc[b.target] += b.probability;
        total += b.probability;
    }
    // Already-normalized input is kept bit-identical so validation is idempotent.
    const double scale = std::abs(total - 1.0) > 1e-12 ? total : 1.0;
    Distribution out;
    out.reserve(acc.size());
    for (auto [t, p] : acc)
        out.push_back({t, p / scale});
    return out;
}

} // namespace

ValidatedMA validate(const MarkovAutomaton& ma)
{
    const std::size_t n = ma.num_states();
    if (n == 0)
        throw Error(Errc::EmptyModel, "model has no states");
    if (ma.initial() >= n)
        throw Error(Errc::UnknownState, "initial state index " + std::to_string(ma.initial()) + " out of range");

    for (StateIndex s = 0; s < n; ++s) {
        std::set<std::string_view> labels;
        for (const ProbTransition& t : ma.prob_transitions(s)) {
            if (!labels.insert(t.action).second)
                throw Error(Errc::DuplicateAction, "state " + quoted(ma, s) + " has action '" + t.action + "' twice");
            double sum = 0.0;
            for (const Branch& b : t.distribution) {
                check_target(ma, s, b.target);
                if (!(b.probability > 0.0 && b.probability <= 1.0))
                    throw Error(Errc::DistributionNotNormalized,
                                "state " + quoted(ma, s) + ", action '" + t.action + "': probability " +
                                    std::to_string(b.probability) + " outside (0,1]");
                sum += b.probability;
            }
            if (std::abs(sum - 1.0) > kDistributionTolerance)
                throw Error(Errc::DistributionNotNormalized,
                            "state " + quoted(ma, s) + ", action '" + t.action + "': probabilities sum to " +
                                std::to_string(sum));
        }
        for (const MarkovEdge& e : ma.markov_edges(s)) {
            check_target(ma, s, e.target);
            if (!(e.rate > 0.0) || !std::isfinite(e.rate))
                throw Error(Errc::NonPositiveRate,
                            "state " + quoted(ma, s) + ": rate to " + quoted(ma, e.target) + " is not positive");
        }
    }

    ValidatedMA out;
    out.markovian_.assign(n, false);
    out.exit_rate_.assign(n, 0.0);
    out.rates_.assign(n, {});
    out.choices_.assign(n, {});
    out.ma_ = ma;

    for (StateIndex s = 0; s < n; ++s) {
        auto& prob = out.ma_.prob_transitions(s);
        auto& edges = out.ma_.markov_edges(s);
        if (!prob.empty() && !edges.empty()) {
            edges.clear();
            out.warnings_.push_back("state " + quoted(ma, s) +
                                    ": Markovian transitions removed by maximal progress");
        }
        if (prob.empty() && edges.empty()) {
            edges.push_back({s, 1.0});
            out.warnings_.push_back("state " + quoted(ma, s) + ": deadlock made absorbing");
        }

        if (!prob.empty()) {
            for (ProbTransition& t : prob) {
                t.distribution = merged(t.distribution);
                out.choices_[s].push_back({t.action, t.distribution});
            }
            continue;
        }

        std::map<StateIndex, double> rate;
        for (const MarkovEdge& e : edges)
            rate[e.target] += e.rate;
        edges.clear();
        double exit = 0.0;
        for (auto [t, r] : rate) {
            edges.push_back({t, r});
            exit += r;
        }
        Distribution branch;
        for (const MarkovEdge& e : edges)
            branch.push_back({e.target, e.rate / exit});
        out.markovian_[s] = true;
        out.exit_rate_[s] = exit;
        out.rates_[s] = edges;
        out.choices_[s].push_back({std::string(kMarkovianAction), std::move(branch)});
        out.lambda_max_ = std::max(out.lambda_max_, exit);
    }

    out.reachable_.assign(n, false);
    std::vector<StateIndex> stack{ma.initial()};
    out.reachable_[ma.initial()] = true;
    while (!stack.empty()) {
        StateIndex s = stack.back();
        stack.pop_back();
        for (const Choice& c : out.choices_[s])
            for (const Branch& b : c.distribution)
                if (!out.reachable_[b.target]) {
                    out.reachable_[b.target] = true;
                    stack.push_back(b.target);
                }
    }
    return out;
}

void check_goal_set(const ValidatedMA& vma, const GoalSet& goals)
{
    if (goals.universe() != vma.num_states())
        throw Error(Errc::UnknownState, "goal set is over " + std::to_string(goals.universe()) +
                                            " states, model has " + std::to_string(vma.num_states()));
}

ValidatedMA make_absorbing(const ValidatedMA& vma, const GoalSet& goals)
{
    check_goal_set(vma, goals);
    if (goals.empty())
        return vma;
    MarkovAutomaton ma = vma.underlying();
    for (StateIndex g : goals.members()) {
        ma.prob_transitions(g).clear();
        ma.markov_edges(g).assign(1, {g, 1.0});
    }
    return validate(ma);
}

std::vector<StateIndex> successors(const ValidatedMA& vma, StateIndex s)
{
    std::vector<StateIndex> out;
    for (const Choice& c : vma.choices(s))
        for (const Branch& b : c.distribution)
            out.push_back(b.target);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace mama
