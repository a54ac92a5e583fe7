#include "support.hpp"

#include "mama/exptime.hpp"
#include "mama/graph.hpp"
#include "mama/oracle.hpp"

#include <doctest.h>

#include <functional>

using namespace mama;
using namespace mama::test;

TEST_CASE("SSP instance for expected time")
{
    SUBCASE("Markovian state pays its mean sojourn time")
    {
        auto [vma, goals] = load("#INITIAL\ns\n#GOALS\ng\n#TRANSITIONS\ns !\n* g 2\n");
        SspInstance ssp = build_ssp_et(make_absorbing(vma, goals), goals);
        const StateIndex s = id(vma, "s"), g = id(vma, "g");
        REQUIRE(ssp.actions[s].size() == 1);
        CHECK(ssp.actions[s][0].label == kMarkovianAction);
        CHECK(ssp.actions[s][0].cost == 0.5);
        CHECK(ssp.actions[s][0].kernel == Distribution{{g, 1.0}});
        CHECK(ssp.goals.contains(g));
        CHECK(ssp.terminal[g] == 0.0);
        CHECK(ssp.names[s] == "s");
    }
    SUBCASE("probabilistic actions are free and copied verbatim")
    {
        auto [vma, goals] = load("#INITIAL\ns\n#GOALS\ng\n#TRANSITIONS\ns a\n* g 0.3\n* m 0.7\nm !\n* g 1\n");
        SspInstance ssp = build_ssp_et(vma, goals);
        const StateIndex s = id(vma, "s");
        REQUIRE(ssp.actions[s].size() == 1);
        CHECK(ssp.actions[s][0].label == "a");
        CHECK(ssp.actions[s][0].cost == 0.0);
        CHECK(ssp.actions[s][0].kernel == vma.choices(s)[0].distribution);
    }
    SUBCASE("parallel edges")
    {
        auto [vma, goals] = load("#INITIAL\ns\n#GOALS\ng\n#TRANSITIONS\ns !\n* g 1\n* h 2\n* g 3\n");
        SspInstance ssp = build_ssp_et(vma, goals);
        const SspAction& a = ssp.actions[id(vma, "s")][0];
        CHECK(a.cost == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
        for (const Branch& b : a.kernel)
            CHECK(b.probability == doctest::Approx(b.target == id(vma, "g") ? 4.0 / 6.0 : 2.0 / 6.0));
    }
}

TEST_CASE("expected time examples")
{
    SUBCASE("exponential sojourn")
    {
        auto [vma, goals] = load("#INITIAL\ns\n#GOALS\ng\n#TRANSITIONS\ns !\n* g 2\n");
        for (Mode mode : {Mode::Min, Mode::Max})
            CHECK(expected_time(vma, goals, mode).values[id(vma, "s")] == 0.5);
    }
    SUBCASE("choice between immediate and delayed arrival")
    {
        auto [vma, goals] = load("#INITIAL\ns\n#GOALS\ng\n#TRANSITIONS\ns a\n* g 1\ns b\n* m 1\nm !\n* g 1\n");
        ExpectedTimeResult min = expected_time(vma, goals, Mode::Min);
        ExpectedTimeResult max = expected_time(vma, goals, Mode::Max);
        CHECK(min.values[id(vma, "s")] == 0.0);
        CHECK(max.values[id(vma, "s")] == 1.0);
        CHECK(min.policy[id(vma, "s")] == std::optional<std::size_t>(0));
        CHECK(max.policy[id(vma, "s")] == std::optional<std::size_t>(1));
    }
    SUBCASE("Erlang-3")
    {
        auto [vma, goals] = load("#INITIAL\na\n#GOALS\ng\n#TRANSITIONS\na !\n* b 1\nb !\n* c 1\nc !\n* g 1\n");
        double v = expected_time(vma, goals, Mode::Min).values[id(vma, "a")];
        CHECK(std::abs(v - 3.0) <= 1e-12);
        CHECK(std::abs(oracle::ctmc_hitting_time(vma, goals)[id(vma, "a")] - 3.0) <= 1e-12);
    }
    SUBCASE("sample automaton")
    {
        auto [vma, goals] = load(kSample);
        ExpectedTimeResult min = expected_time(vma, goals, Mode::Min);
        CHECK(std::abs(min.values[id(vma, "s0")] - 0.7) <= 1e-10);
        CHECK(expected_time(vma, goals, Mode::Max).values[id(vma, "s0")] == kInfinity);
        CHECK(min.values[id(vma, "s5")] == kInfinity);
        CHECK(min.values[id(vma, "s2")] == 0.0);
    }
    SUBCASE("Zeno model is rejected")
    {
        auto [vma, goals] = load_file("zeno.ma");
        CHECK_THROWS_AS(expected_time(vma, goals, Mode::Min), ZenoError);
    }
    SUBCASE("unknown goal universe")
    {
        auto [vma, goals] = load(kSample);
        CHECK_THROWS_AS(expected_time(vma, GoalSet(2), Mode::Min), Error);
    }
}

TEST_CASE("pure CTMCs agree with the linear-system oracle")
{
    std::mt19937_64 rng(53);
    for (int t = 0; t < 60; ++t) {
        ValidatedMA vma = validate(random_ctmc(rng, 2 + pick(rng, 49)));
        GoalSet g = random_goals(rng, vma.num_states());
        auto expected = oracle::ctmc_hitting_time(vma, g);
        for (Mode mode : {Mode::Min, Mode::Max}) {
            auto got = expected_time(vma, g, mode).values;
            for (StateIndex s = 0; s < vma.num_states(); ++s)
                CHECK(near(got[s], expected[s], 1e-8 * std::max(1.0, expected[s])));
        }
    }
}

TEST_CASE("random automata: ordering, scaling and brute force")
{
    std::mt19937_64 rng(59);
    for (int t = 0; t < 60; ++t) {
        MarkovAutomaton ma = random_ma(rng, 2 + pick(rng, 7));
        ValidatedMA vma = validate(ma);
        GoalSet g = random_goals(rng, vma.num_states());
        auto min = expected_time(vma, g, Mode::Min).values;
        auto max = expected_time(vma, g, Mode::Max).values;
        auto bf_min = oracle::enumerate_policies(vma, g, oracle::Objective::ExpectedTime, Mode::Min);
        auto bf_max = oracle::enumerate_policies(vma, g, oracle::Objective::ExpectedTime, Mode::Max);
        for (StateIndex s = 0; s < vma.num_states(); ++s) {
            CHECK(min[s] <= max[s] + 1e-10 * std::max(1.0, max[s]));
            CHECK(near(min[s], bf_min[s], 1e-8 * std::max(1.0, bf_min[s])));
            CHECK(near(max[s], bf_max[s], 1e-8 * std::max(1.0, bf_max[s])));
        }
        for (double kappa : {0.5, 2.0, 10.0}) {
            MarkovAutomaton scaled = ma;
            for (StateIndex s = 0; s < scaled.num_states(); ++s)
                for (MarkovEdge& e : scaled.markov_edges(s))
                    e.rate *= kappa;
            ValidatedMA svma = validate(scaled);
            auto smin = expected_time(svma, g, Mode::Min).values;
            auto smax = expected_time(svma, g, Mode::Max).values;
            for (StateIndex s = 0; s < vma.num_states(); ++s) {
                CHECK(near(smin[s] * kappa, min[s], 1e-8 * std::max(1.0, min[s])));
                CHECK(near(smax[s] * kappa, max[s], 1e-8 * std::max(1.0, max[s])));
            }
        }
    }
}

TEST_CASE("zero expected time exactly when the goal is reached in zero time")
{
    std::mt19937_64 rng(61);
    for (int t = 0; t < 60; ++t) {
        ValidatedMA vma = validate(random_ma(rng, 2 + pick(rng, 10)));
        GoalSet g = random_goals(rng, vma.num_states());
        for (Mode mode : {Mode::Min, Mode::Max}) {
            ExpectedTimeResult r = expected_time(vma, g, mode);
            // Zero-time reach under the returned policy: follow probabilistic
            // choices only, every branch must end in G.
            std::vector<int> zero(vma.num_states(), -1);
            std::function<bool(StateIndex)> reaches = [&](StateIndex s) -> bool {
                if (g.contains(s))
                    return true;
                if (vma.is_markovian(s) || !r.policy[s])
                    return false;
                if (zero[s] != -1)
                    return zero[s] == 1;
                bool ok = true;
                for (const Branch& b : vma.choices(s)[*r.policy[s]].distribution)
                    ok = ok && reaches(b.target);
                zero[s] = ok;
                return ok;
            };
            for (StateIndex s = 0; s < vma.num_states(); ++s)
                CHECK((r.values[s] == 0.0) == reaches(s));
        }
    }
}
