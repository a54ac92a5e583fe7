#include "mama/oracle.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <random>
#include <thread>

namespace mama::oracle {

namespace {

std::vector<double> eliminate(DenseLinearSystem system)
{
    auto& a = system.matrix;
    auto& b = system.rhs;
    const std::size_t n = b.size();
    double scale = 0.0;
    for (const auto& row : a)
        for (double x : row)
            scale = std::max(scale, std::abs(x));
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col]))
                pivot = r;
        if (std::abs(a[pivot][col]) <= 1e-14 * scale || scale == 0.0)
            throw Error(Errc::Singular, "singular linear system");
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0)
                continue;
            for (std::size_t c = col; c < n; ++c)
                a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c)
            s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

} // namespace

std::vector<double> solve(DenseLinearSystem system)
{
    const std::size_t n = system.rhs.size();
    if (system.matrix.size() != n)
        throw Error(Errc::InvalidArgument, "linear system dimensions disagree");
    for (const auto& row : system.matrix)
        if (row.size() != n)
            throw Error(Errc::InvalidArgument, "linear system dimensions disagree");
    std::vector<double> x = eliminate(system);
    // One round of iterative refinement.
    DenseLinearSystem correction{system.matrix, system.rhs};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < n; ++c)
            correction.rhs[i] -= system.matrix[i][c] * x[c];
    std::vector<double> dx = eliminate(std::move(correction));
    for (std::size_t i = 0; i < n; ++i)
        x[i] += dx[i];
    return x;
}

namespace {

struct Chain {
    std::vector<std::vector<std::pair<StateIndex, double>>> next;
    std::vector<double> sojourn;
};

void check_policy(const ValidatedMA& vma, const MaPolicy& policy)
{
    if (policy.size() != vma.num_states())
        throw Error(Errc::InvalidArgument, "policy does not cover the state space");
    for (StateIndex s = 0; s < vma.num_states(); ++s)
        if (policy[s] >= vma.choices(s).size())
            throw Error(Errc::InvalidArgument, "policy picks a disabled choice at " + vma.name(s));
}

Chain induce(const ValidatedMA& vma, const MaPolicy& policy)
{
    check_policy(vma, policy);
    Chain chain;
    const std::size_t n = vma.num_states();
    chain.next.resize(n);
    chain.sojourn.assign(n, 0.0);
    for (StateIndex s = 0; s < n; ++s) {
        if (vma.is_markovian(s)) {
            chain.sojourn[s] = 1.0 / vma.exit_rate(s);
            for (const Branch& b : vma.branch(s))
                chain.next[s].push_back({b.target, b.probability});
        } else {
            for (const Branch& b : vma.choices(s)[policy[s]].distribution)
                chain.next[s].push_back({b.target, b.probability});
        }
    }
    return chain;
}

// States that can reach `targets`, moving only out of states not in `stop`.
std::vector<bool> reaches(const Chain& chain, const std::vector<bool>& targets, const std::vector<bool>& stop)
{
    const std::size_t n = chain.next.size();
    std::vector<std::vector<StateIndex>> reverse(n);
    for (StateIndex s = 0; s < n; ++s)
        if (!stop[s])
            for (const auto& [t, p] : chain.next[s])
                reverse[t].push_back(s);
    std::vector<bool> seen = targets;
    std::vector<StateIndex> queue;
    for (StateIndex s = 0; s < n; ++s)
        if (seen[s])
            queue.push_back(s);
    while (!queue.empty()) {
        StateIndex t = queue.back();
        queue.pop_back();
        for (StateIndex s : reverse[t])
            if (!seen[s]) {
                seen[s] = true;
                queue.push_back(s);
            }
    }
    return seen;
}

std::vector<std::vector<StateIndex>> bottom_classes(const Chain& chain)
{
    const std::size_t n = chain.next.size();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (StateIndex s = 0; s < n; ++s) {
        std::vector<StateIndex> queue{s};
        reach[s][s] = true;
        while (!queue.empty()) {
            StateIndex u = queue.back();
            queue.pop_back();
            for (const auto& [t, p] : chain.next[u])
                if (!reach[s][t]) {
                    reach[s][t] = true;
                    queue.push_back(t);
                }
        }
    }
    std::vector<bool> assigned(n, false);
    std::vector<std::vector<StateIndex>> classes;
    for (StateIndex s = 0; s < n; ++s) {
        if (assigned[s])
            continue;
        bool bottom = true;
        for (StateIndex t = 0; t < n && bottom; ++t)
            if (reach[s][t] && !reach[t][s])
                bottom = false;
        if (!bottom)
            continue;
        std::vector<StateIndex> cls;
        for (StateIndex t = 0; t < n; ++t)
            if (reach[s][t]) {
                cls.push_back(t);
                assigned[t] = true;
            }
        classes.push_back(std::move(cls));
    }
    return classes;
}

// Stationary distribution of the jump chain restricted to a closed class.
std::vector<double> embedded_stationary(const Chain& chain, const std::vector<StateIndex>& cls)
{
    const std::size_t m = cls.size();
    std::map<StateIndex, std::size_t> local;
    for (std::size_t i = 0; i < m; ++i)
        local[cls[i]] = i;
    DenseLinearSystem sys{std::vector<std::vector<double>>(m, std::vector<double>(m, 0.0)), std::vector<double>(m, 0.0)};
    for (std::size_t i = 0; i < m; ++i) {
        sys.matrix[i][i] += 1.0;
        for (const auto& [t, p] : chain.next[cls[i]])
            sys.matrix[local.at(t)][i] -= p;
    }
    for (std::size_t i = 0; i < m; ++i)
        sys.matrix[m - 1][i] = 1.0;
    sys.rhs[m - 1] = 1.0;
    return solve(std::move(sys));
}

void require_ctmc(const ValidatedMA& vma)
{
    if (vma.num_probabilistic() != 0)
        throw Error(Errc::InvalidArgument, "model has probabilistic states");
}

} // namespace

ValueVector et_fixed_policy(const ValidatedMA& vma, const GoalSet& goals, const MaPolicy& policy)
{
    check_goal_set(vma, goals);
    const std::size_t n = vma.num_states();
    Chain chain = induce(vma, policy);
    std::vector<bool> goal(n);
    for (StateIndex s = 0; s < n; ++s)
        goal[s] = goals.contains(s);
    std::vector<bool> hopeful = reaches(chain, goal, goal);
    std::vector<bool> lost(n);
    for (StateIndex s = 0; s < n; ++s)
        lost[s] = !hopeful[s];
    std::vector<bool> doomed = reaches(chain, lost, goal);

    ValueVector h(n, 0.0);
    std::vector<StateIndex> unknown;
    std::vector<std::size_t> index(n, SIZE_MAX);
    for (StateIndex s = 0; s < n; ++s) {
        if (goal[s])
            continue;
        if (doomed[s]) {
            h[s] = kInfinity;
            continue;
        }
        index[s] = unknown.size();
        unknown.push_back(s);
    }
    const std::size_t m = unknown.size();
    if (m == 0)
        return h;
    DenseLinearSystem sys{std::vector<std::vector<double>>(m, std::vector<double>(m, 0.0)), std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
        const StateIndex s = unknown[i];
        sys.matrix[i][i] += 1.0;
        sys.rhs[i] = chain.sojourn[s];
        for (const auto& [t, p] : chain.next[s])
            if (index[t] != SIZE_MAX)
                sys.matrix[i][index[t]] -= p;
    }
    std::vector<double> x = solve(std::move(sys));
    for (std::size_t i = 0; i < m; ++i)
        h[unknown[i]] = x[i];
    return h;
}

ValueVector ctmc_hitting_time(const ValidatedMA& vma, const GoalSet& goals)
{
    require_ctmc(vma);
    return et_fixed_policy(vma, goals, MaPolicy(vma.num_states(), 0));
}

std::vector<double> ctmc_steady_state(const ValidatedMA& vma)
{
    require_ctmc(vma);
    Chain chain = induce(vma, MaPolicy(vma.num_states(), 0));
    auto classes = bottom_classes(chain);
    if (classes.size() != 1)
        throw Error(Errc::NotErgodic, "chain has " + std::to_string(classes.size()) + " closed classes");
    const auto& cls = classes.front();
    std::vector<double> mu = embedded_stationary(chain, cls);
    std::vector<double> pi(vma.num_states(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < cls.size(); ++i) {
        pi[cls[i]] = mu[i] * chain.sojourn[cls[i]];
        total += pi[cls[i]];
    }
    for (double& p : pi)
        p /= total;
    return pi;
}

ValueVector lra_fixed_policy(const ValidatedMA& vma, const GoalSet& goals, const MaPolicy& policy)
{
    check_goal_set(vma, goals);
    const std::size_t n = vma.num_states();
    Chain chain = induce(vma, policy);
    ValueVector value(n, 0.0);
    std::vector<bool> recurrent(n, false);
    for (const auto& cls : bottom_classes(chain)) {
        std::vector<double> mu = embedded_stationary(chain, cls);
        double in_goal = 0.0, total = 0.0;
        for (std::size_t i = 0; i < cls.size(); ++i) {
            const double time = mu[i] * chain.sojourn[cls[i]];
            total += time;
            if (goals.contains(cls[i]))
                in_goal += time;
        }
        if (total <= 0.0)
            throw Error(Errc::ZenoModel, "closed class without Markovian states");
        for (StateIndex s : cls) {
            value[s] = in_goal / total;
            recurrent[s] = true;
        }
    }

    std::vector<StateIndex> transient;
    std::vector<std::size_t> index(n, SIZE_MAX);
    for (StateIndex s = 0; s < n; ++s)
        if (!recurrent[s]) {
            index[s] = transient.size();
            transient.push_back(s);
        }
    const std::size_t m = transient.size();
    if (m == 0)
        return value;
    DenseLinearSystem sys{std::vector<std::vector<double>>(m, std::vector<double>(m, 0.0)), std::vector<double>(m, 0.0)};
    for (std::size_t i = 0; i < m; ++i) {
        sys.matrix[i][i] += 1.0;
        for (const auto& [t, p] : chain.next[transient[i]]) {
            if (recurrent[t])
                sys.rhs[i] += p * value[t];
            else
                sys.matrix[i][index[t]] -= p;
        }
    }
    std::vector<double> x = solve(std::move(sys));
    for (std::size_t i = 0; i < m; ++i)
        value[transient[i]] = x[i];
    return value;
}

void for_each_policy(const ValidatedMA& vma, const GoalSet& goals, bool skip_goals,
                     const std::function<void(const MaPolicy&)>& visit)
{
    const std::size_t n = vma.num_states();
    std::vector<StateIndex> free;
    double count = 1.0;
    for (StateIndex s = 0; s < n; ++s) {
        if (skip_goals && goals.contains(s))
            continue;
        if (vma.choices(s).size() > 1) {
            free.push_back(s);
            count *= static_cast<double>(vma.choices(s).size());
        }
    }
    if (count > 1e6)
        throw Error(Errc::TooManyPolicies, "more than 10^6 stationary policies");
    MaPolicy policy(n, 0);
    while (true) {
        visit(policy);
        std::size_t i = 0;
        for (; i < free.size(); ++i) {
            StateIndex s = free[i];
            if (++policy[s] < vma.choices(s).size())
                break;
            policy[s] = 0;
        }
        if (i == free.size())
            return;
    }
}

ValueVector enumerate_policies(const ValidatedMA& vma, const GoalSet& goals, Objective objective, Mode mode)
{
    check_goal_set(vma, goals);
    ValueVector best(vma.num_states(), mode == Mode::Min ? kInfinity : -kInfinity);
    for_each_policy(vma, goals, objective == Objective::ExpectedTime, [&](const MaPolicy& policy) {
        ValueVector v = objective == Objective::ExpectedTime ? et_fixed_policy(vma, goals, policy)
                                                             : lra_fixed_policy(vma, goals, policy);
        for (StateIndex s = 0; s < v.size(); ++s)
            best[s] = mode == Mode::Min ? std::min(best[s], v[s]) : std::max(best[s], v[s]);
    });
    return best;
}

namespace {

// Markovian states plus an optional GOAL sink, with probabilistic states
// resolved in zero time under a fixed policy.
class ResolvedChain {
public:
    ResolvedChain(const ValidatedMA& vma, const MaPolicy& policy, const GoalSet* absorbing)
        : vma_(vma), policy_(policy), absorbing_(absorbing), memo_(vma.num_states()), state_(vma.num_states(), 0)
    {
    }

    StateIndex goal_sink() const { return vma_.num_states(); }

    const std::map<StateIndex, double>& resolve(StateIndex s)
    {
        if (state_[s] == 2)
            return memo_[s];
        if (state_[s] == 1)
            throw Error(Errc::ZenoModel, "policy cycles through probabilistic states");
        state_[s] = 1;
        std::map<StateIndex, double> out;
        if (absorbing_ && absorbing_->contains(s)) {
            out[goal_sink()] = 1.0;
        } else if (vma_.is_markovian(s)) {
            out[s] = 1.0;
        } else {
            for (const Branch& b : vma_.choices(s)[policy_[s]].distribution)
                for (const auto& [t, p] : resolve(b.target))
                    out[t] += b.probability * p;
        }
        memo_[s] = std::move(out);
        state_[s] = 2;
        return memo_[s];
    }

    // E_m[f(X_h)] for every Markovian m, f given on Markovian states and the sink.
    std::vector<double> expectation(std::vector<double> f, double h)
    {
        const std::size_t n = vma_.num_states();
        std::vector<StateIndex> moving;
        double q = 0.0;
        for (StateIndex m = 0; m < n; ++m)
            if (vma_.is_markovian(m) && !(absorbing_ && absorbing_->contains(m))) {
                moving.push_back(m);
                q = std::max(q, vma_.exit_rate(m));
            }
        if (h == 0.0 || q == 0.0)
            return f;
        std::vector<std::vector<std::pair<StateIndex, double>>> rows(n + 1);
        for (StateIndex m : moving) {
            std::map<StateIndex, double> row;
            const double leave = vma_.exit_rate(m) / q;
            row[m] += 1.0 - leave;
            for (const Branch& b : vma_.branch(m))
                for (const auto& [t, p] : resolve(b.target))
                    row[t] += leave * b.probability * p;
            rows[m].assign(row.begin(), row.end());
        }
        const double qh = q * h;
        std::vector<double> acc(f.size(), 0.0), next = f;
        for (std::size_t k = 0;; ++k) {
            const double w = std::exp(-qh + static_cast<double>(k) * std::log(qh) - std::lgamma(static_cast<double>(k) + 1.0));
            for (std::size_t i = 0; i < f.size(); ++i)
                acc[i] += w * f[i];
            const double ratio = qh / static_cast<double>(k + 1);
            if (ratio < 1.0 && w * ratio / (1.0 - ratio) < 1e-12)
                break;
            for (StateIndex m : moving) {
                double s = 0.0;
                for (const auto& [t, p] : rows[m])
                    s += p * f[t];
                next[m] = s;
            }
            std::swap(f, next);
            for (StateIndex m : moving)
                next[m] = f[m];
        }
        return acc;
    }

private:
    const ValidatedMA& vma_;
    const MaPolicy& policy_;
    const GoalSet* absorbing_;
    std::vector<std::map<StateIndex, double>> memo_;
    std::vector<int> state_;
};

} // namespace

std::vector<double> policy_reach_within(const ValidatedMA& vma, const GoalSet& goals, const MaPolicy& policy, double a,
                                        double b)
{
    check_goal_set(vma, goals);
    check_policy(vma, policy);
    if (!(a >= 0.0) || !(b >= a))
        throw Error(Errc::InvalidArgument, "interval must satisfy 0 <= a <= b");
    const std::size_t n = vma.num_states();

    ResolvedChain absorbed(vma, policy, &goals);
    std::vector<double> f(n + 1, 0.0);
    f[absorbed.goal_sink()] = 1.0;
    std::vector<double> within = absorbed.expectation(f, b - a);
    std::vector<double> w1(n, 0.0);
    for (StateIndex s = 0; s < n; ++s)
        for (const auto& [t, p] : absorbed.resolve(s))
            w1[s] += p * within[t];
    if (a == 0.0)
        return w1;

    ResolvedChain plain(vma, policy, nullptr);
    std::vector<double> g(w1);
    g.push_back(0.0);
    std::vector<double> later = plain.expectation(g, a);
    std::vector<double> out(n, 0.0);
    for (StateIndex s = 0; s < n; ++s)
        for (const auto& [t, p] : plain.resolve(s))
            out[s] += p * later[t];
    return out;
}

std::vector<double> ctmc_transient(const ValidatedMA& vma, const GoalSet& goals, double b)
{
    require_ctmc(vma);
    return policy_reach_within(vma, goals, MaPolicy(vma.num_states(), 0), 0.0, b);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Run {
public:
    Run(const ValidatedMA& vma, const MaPolicy& policy, std::uint64_t seed) : vma_(vma), policy_(policy), rng_(seed) {}

    double operator()(const SimulationQuery& q)
    {
        StateIndex s = vma_.initial();
        double t = 0.0, in_goal = 0.0;
        std::size_t instant = 0;
        while (true) {
            const bool goal = q.goals.contains(s);
            switch (q.kind) {
            case SimulationKind::ExpectedTime:
                if (goal || t >= q.horizon)
                    return t;
                break;
            case SimulationKind::TimedReach:
                if (t > q.b)
                    return 0.0;
                if (goal && t >= q.a)
                    return 1.0;
                break;
            case SimulationKind::LongRunAverage:
                if (t >= q.horizon)
                    return in_goal / q.horizon;
                break;
            }
            if (vma_.is_probabilistic(s)) {
                if (++instant > 1'000'000)
                    throw Error(Errc::ZenoGuardTripped, "more than 10^6 zero-time steps in one run");
                s = pick(vma_.choices(s)[policy_[s]].distribution);
                continue;
            }
            instant = 0;
            const double stay = std::exponential_distribution<double>(vma_.exit_rate(s))(rng_);
            if (q.kind == SimulationKind::TimedReach && goal && t + stay >= q.a)
                return 1.0;
            if (q.kind == SimulationKind::LongRunAverage && goal)
                in_goal += std::min(stay, q.horizon - t);
            t += stay;
            s = pick(vma_.branch(s));
        }
    }

private:
    StateIndex pick(std::span<const Branch> d)
    {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        for (const Branch& b : d) {
            if (u < b.probability)
                return b.target;
            u -= b.probability;
        }
        return d.back().target;
    }

    const ValidatedMA& vma_;
    const MaPolicy& policy_;
    std::mt19937_64 rng_;
};

} // namespace

Estimate simulate(const ValidatedMA& vma, const MaPolicy& policy, const SimulationQuery& query, std::size_t runs,
                  std::uint64_t seed, std::size_t threads)
{
    check_policy(vma, policy);
    check_goal_set(vma, query.goals);
    if (runs == 0)
        throw Error(Errc::InvalidArgument, "at least one run is required");
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, runs);

    std::vector<double> results(runs);
    std::vector<std::exception_ptr> failures(threads);
    auto work = [&](std::size_t worker) {
        try {
            for (std::size_t i = worker; i < runs; i += threads)
                results[i] = Run(vma, policy, splitmix64(splitmix64(seed) ^ i))(query);
        } catch (...) {
            failures[worker] = std::current_exception();
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < threads; ++w)
            pool.emplace_back(work, w);
        work(0);
    }
    for (const auto& f : failures)
        if (f)
            std::rethrow_exception(f);

    Estimate e;
    e.runs = runs;
    double sum = 0.0;
    for (double r : results)
        sum += r;
    e.mean = sum / static_cast<double>(runs);
    if (runs > 1) {
        double sq = 0.0;
        for (double r : results)
            sq += (r - e.mean) * (r - e.mean);
        e.half_width = 1.96 * std::sqrt(sq / static_cast<double>(runs - 1) / static_cast<double>(runs));
    }
    return e;
}

} // namespace mama::oracle
