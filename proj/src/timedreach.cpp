#include "mama/timedreach.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

namespace mama {

DeltaChoice choose_delta(double lambda, double b, double eps)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda) || !(b > 0.0) || !std::isfinite(b))
        throw Error(Errc::InvalidArgument, "rate and horizon must be positive and finite");
    if (!(eps > 0.0 && eps < 1.0))
        throw Error(Errc::InvalidArgument, "epsilon must lie in (0,1)");
    const double x = lambda * lambda * b * b / (2.0 * eps);
    if (!(x <= static_cast<double>(kMaxSteps)))
        throw Error(Errc::StepOverflow, "discretisation needs more than 2^40 steps; relax epsilon");
    // Snap values that are an integer up to rounding noise.
    const double nearest = std::round(x);
    double steps = std::abs(x - nearest) <= 1e-12 * x ? nearest : std::ceil(x);
    DeltaChoice out;
    out.k = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(steps));
    if (out.k > kMaxSteps)
        throw Error(Errc::StepOverflow, "discretisation needs more than 2^40 steps; relax epsilon");
    out.delta = b / static_cast<double>(out.k);
    return out;
}

double discretisation_error(double lambda, double b, std::uint64_t k)
{
    if (k == 0)
        throw Error(Errc::InvalidArgument, "step count must be positive");
    const double kd = static_cast<double>(k);
    return -std::expm1(kd * std::log1p(lambda * b / kd) - lambda * b);
}

DiscretisedMA discretise(const ValidatedMA& vma, double delta)
{
    if (!(delta > 0.0))
        throw Error(Errc::InvalidArgument, "step length must be positive");
    DiscretisedMA dma{vma, delta, {}, {}};
    const std::size_t n = vma.num_states();
    dma.step.resize(n);
    dma.jump.assign(n, 0.0);
    for (StateIndex s = 0; s < n; ++s) {
        if (!vma.is_markovian(s))
            continue;
        const double jump = -std::expm1(-vma.exit_rate(s) * delta);
        dma.jump[s] = jump;
        bool self = false;
        for (const Branch& b : vma.branch(s)) {
            double p = jump * b.probability;
            if (b.target == s) {
                p += std::exp(-vma.exit_rate(s) * delta);
                self = true;
            }
            dma.step[s].push_back({b.target, p});
        }
        if (!self) {
            dma.step[s].push_back({s, std::exp(-vma.exit_rate(s) * delta)});
            std::sort(dma.step[s].begin(), dma.step[s].end(),
                      [](const Branch& x, const Branch& y) { return x.target < y.target; });
        }
    }
    return dma;
}

double effective_lambda(const ValidatedMA& vma)
{
    double lambda = 0.0;
    for (StateIndex s = 0; s < vma.num_states(); ++s)
        if (vma.is_markovian(s) && vma.branch_probability(s, s) < 1.0)
            lambda = std::max(lambda, vma.exit_rate(s));
    return lambda;
}

namespace {

std::size_t thread_count(std::size_t work)
{
    if (work < (1u << 14))
        return 1;
    std::size_t threads = 0;
    if (const char* env = std::getenv("MAMA_THREADS"))
        threads = std::strtoul(env, nullptr, 10);
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    return std::min(threads, work / 4096 + 1);
}

// k steps of the discretised automaton from the Markovian values in `v`.
// `frozen` Markovian states keep their value; `zero_model` decides how
// probabilistic states are resolved between steps.
ValueVector propagate(const DiscretisedMA& dma, const ValidatedMA& zero_model, const StateSet& frozen, ValueVector v,
                      std::uint64_t k, Mode mode)
{
    const ValidatedMA& vma = dma.vma;
    std::vector<StateIndex> movers;
    std::vector<std::size_t> offsets{0};
    std::vector<StateIndex> targets;
    std::vector<double> probs;
    for (StateIndex s = 0; s < vma.num_states(); ++s) {
        if (!vma.is_markovian(s) || frozen.contains(s) || vma.branch_probability(s, s) == 1.0)
            continue;
        movers.push_back(s);
        for (const Branch& b : vma.branch(s)) {
            targets.push_back(b.target);
            probs.push_back(b.probability);
        }
        offsets.push_back(targets.size());
    }

    ZeroTimeSolver zero(zero_model);
    zero.solve(v, mode);
    ValueVector next = v;
    auto sweep = [&](std::size_t from, std::size_t to) {
        for (std::size_t i = from; i < to; ++i) {
            const StateIndex s = movers[i];
            double expected = 0.0;
            for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
                expected += probs[e] * v[targets[e]];
            next[s] = v[s] + dma.jump[s] * (expected - v[s]);
        }
    };
    const std::size_t threads = thread_count(movers.size());
    for (std::uint64_t step = 0; step < k; ++step) {
        if (threads == 1) {
            sweep(0, movers.size());
        } else {
            std::vector<std::jthread> pool;
            const std::size_t chunk = (movers.size() + threads - 1) / threads;
            for (std::size_t t = 0; t < threads; ++t)
                pool.emplace_back(sweep, std::min(movers.size(), t * chunk), std::min(movers.size(), (t + 1) * chunk));
        }
        zero.solve(next, mode);
        std::swap(v, next);
        for (StateIndex s : movers)
            next[s] = v[s];
    }
    return v;
}

ValueVector indicator(const GoalSet& goals)
{
    ValueVector v(goals.universe(), 0.0);
    for (StateIndex g : goals.members())
        v[g] = 1.0;
    return v;
}

} // namespace

ValueVector step_bounded_reach(const DiscretisedMA& dma, const GoalSet& goals, std::uint64_t k, Mode mode)
{
    check_goal_set(dma.vma, goals);
    ValidatedMA absorbed = make_absorbing(dma.vma, goals);
    return propagate(dma, absorbed, goals, indicator(goals), k, mode);
}

BoundedResult timed_reachability(const ValidatedMA& vma, const TimedQuery& query)
{
    check_goal_set(vma, query.goals);
    const double a = query.a, b = query.b;
    if (!(a >= 0.0) || !(b >= a) || !std::isfinite(b))
        throw Error(Errc::InvalidArgument, "interval must satisfy 0 <= a <= b < inf");
    if (!(query.epsilon > 0.0 && query.epsilon < 1.0))
        throw Error(Errc::InvalidArgument, "epsilon must lie in (0,1)");
    require_non_zeno(vma);

    BoundedResult result;
    ValidatedMA absorbed = make_absorbing(vma, query.goals);
    ValueVector w;
    const double horizon = b - a;
    if (horizon == 0.0) {
        w = zero_time_reach(absorbed, indicator(query.goals), query.mode);
    } else {
        const double lambda = effective_lambda(absorbed);
        if (lambda == 0.0) {
            result.k = 1;
            result.delta = horizon;
        } else {
            DeltaChoice choice = choose_delta(lambda, horizon, a > 0.0 ? query.epsilon / 2 : query.epsilon);
            result.k = choice.k;
            result.delta = choice.delta;
            result.error_relaxed = lambda * lambda * horizon * horizon / (2.0 * static_cast<double>(choice.k));
            result.error_exact = discretisation_error(lambda, horizon, choice.k);
        }
        w = step_bounded_reach(discretise(absorbed, result.delta), query.goals, result.k, query.mode);
    }
    const double e1 = std::min(result.error_relaxed, result.error_exact);

    if (a == 0.0) {
        result.lower = w;
        result.upper = w;
        for (double& u : result.upper)
            u = std::min(1.0, u + e1);
        return result;
    }

    // Values after b-a become terminal values at time a on the plain automaton.
    double e2 = 0.0;
    const double lambda = effective_lambda(vma);
    if (lambda == 0.0) {
        result.k_a = 1;
        result.delta_a = a;
    } else {
        DeltaChoice choice = choose_delta(lambda, a, query.epsilon / 4);
        result.k_a = choice.k;
        result.delta_a = choice.delta;
        e2 = std::min(lambda * lambda * a * a / (2.0 * static_cast<double>(choice.k)),
                      discretisation_error(lambda, a, choice.k));
    }
    ValueVector v = propagate(discretise(vma, result.delta_a), vma, StateSet(vma.num_states()), w, result.k_a,
                              query.mode);
    result.lower = v;
    result.upper = v;
    for (StateIndex s = 0; s < v.size(); ++s) {
        result.lower[s] = std::max(0.0, v[s] - e2);
        result.upper[s] = std::min(1.0, v[s] + e1 + e2);
    }
    return result;
}

} // namespace mama
