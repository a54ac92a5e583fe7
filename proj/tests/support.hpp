#pragma once

#include "mama/model.hpp"
#include "mama/parser.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace mama::test {

struct Loaded {
    ValidatedMA vma;
    GoalSet goals;
};

inline Loaded load(std::string_view text)
{
    ParsedModel p = parse(text);
    return {validate(p.ma), p.goals};
}

inline Loaded load_file(const std::string& name)
{
    ParsedModel p = parse_file(std::string(MAMA_MODELS_DIR) + "/" + name);
    return {validate(p.ma), p.goals};
}

inline GoalSet goals_of(const ValidatedMA& vma, std::initializer_list<const char*> names)
{
    GoalSet g(vma.num_states());
    for (const char* n : names)
        g.insert(*vma.underlying().find(n));
    return g;
}

inline StateIndex id(const ValidatedMA& vma, std::string_view name)
{
    return *vma.underlying().find(name);
}

inline constexpr const char* kSample = R"(#INITIAL
s0
#GOALS
s2
#TRANSITIONS
s0 !
* s1 2
s1 alpha
* s3 0.6
* s2 0.4
s2 !
* s1 1
s3 alpha
* s5 1
s3 beta
* s4 1
s4 !
* s2 3
s5 !
* s5 1
)";

inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Distribution over `targets` with random positive weights.
inline Distribution random_distribution(std::mt19937_64& rng, const std::vector<StateIndex>& targets)
{
    Distribution d;
    double total = 0.0;
    for (StateIndex t : targets) {
        double w = uniform(rng, 0.1, 1.0);
        d.push_back({t, w});
        total += w;
    }
    for (Branch& b : d)
        b.probability /= total;
    return d;
}

// Pure CTMC with rates in [0.1, 10]; about one state in eight is a deadlock.
inline MarkovAutomaton random_ctmc(std::mt19937_64& rng, std::size_t n, bool allow_deadlock = true)
{
    MarkovAutomaton ma;
    for (std::size_t i = 0; i < n; ++i)
        ma.intern("c" + std::to_string(i));
    for (std::size_t i = 0; i < n; ++i) {
        if (allow_deadlock && pick(rng, 8) == 0)
            continue;
        std::size_t edges = 1 + pick(rng, 3);
        for (std::size_t e = 0; e < edges; ++e)
            ma.add_markov_edge(i, pick(rng, n), uniform(rng, 0.1, 10.0));
    }
    return ma;
}

// Strongly connected CTMC: a ring plus random chords.
inline MarkovAutomaton random_ergodic_ctmc(std::mt19937_64& rng, std::size_t n)
{
    MarkovAutomaton ma;
    for (std::size_t i = 0; i < n; ++i)
        ma.intern("c" + std::to_string(i));
    for (std::size_t i = 0; i < n; ++i) {
        ma.add_markov_edge(i, (i + 1) % n, uniform(rng, 0.1, 10.0));
        if (pick(rng, 2) == 0)
            ma.add_markov_edge(i, pick(rng, n), uniform(rng, 0.1, 10.0));
    }
    return ma;
}

// Non-Zeno automaton: probabilistic states only move to Markovian states or
// to probabilistic states with a larger index, so no probabilistic cycle exists.
inline MarkovAutomaton random_ma(std::mt19937_64& rng, std::size_t n, std::size_t max_actions = 2)
{
    MarkovAutomaton ma;
    for (std::size_t i = 0; i < n; ++i)
        ma.intern("m" + std::to_string(i));
    std::vector<bool> markovian(n);
    for (std::size_t i = 0; i < n; ++i)
        markovian[i] = i + 1 == n || pick(rng, 2) == 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (markovian[i]) {
            std::size_t edges = 1 + pick(rng, 2);
            for (std::size_t e = 0; e < edges; ++e)
                ma.add_markov_edge(i, pick(rng, n), uniform(rng, 0.1, 10.0));
            continue;
        }
        std::vector<StateIndex> allowed;
        for (std::size_t j = 0; j < n; ++j)
            if (markovian[j] || j > i)
                allowed.push_back(j);
        std::size_t actions = 1 + pick(rng, max_actions);
        for (std::size_t a = 0; a < actions; ++a) {
            std::vector<StateIndex> targets;
            std::size_t k = 1 + pick(rng, 2);
            for (std::size_t b = 0; b < k; ++b) {
                StateIndex t = allowed[pick(rng, allowed.size())];
                if (std::find(targets.begin(), targets.end(), t) == targets.end())
                    targets.push_back(t);
            }
            ma.add_prob_transition(i, "a" + std::to_string(a), random_distribution(rng, targets));
        }
    }
    return ma;
}

inline GoalSet random_goals(std::mt19937_64& rng, std::size_t n)
{
    GoalSet g(n);
    while (g.empty())
        for (std::size_t i = 0; i < n; ++i)
            if (pick(rng, 3) == 0)
                g.insert(i);
    return g;
}

inline bool near(double a, double b, double tol)
{
    if (std::isinf(a) || std::isinf(b))
        return a == b;
    return std::abs(a - b) <= tol;
}

} // namespace mama::test
