#include "support.hpp"

#include "mama/longrun.hpp"
#include "mama/oracle.hpp"

#include <doctest.h>

using namespace mama;
using namespace mama::test;

namespace {

Mec whole_model(const ValidatedMA& vma)
{
    auto found = mecs(vma);
    REQUIRE(found.size() == 1);
    REQUIRE(found[0].states.size() == vma.num_states());
    return found[0];
}

GoalSet markovian_states(const ValidatedMA& vma)
{
    GoalSet ms(vma.num_states());
    for (StateIndex s = 0; s < vma.num_states(); ++s)
        if (vma.is_markovian(s))
            ms.insert(s);
    return ms;
}

} // namespace

TEST_CASE("unichain ratio examples")
{
    auto [vma, goals] = load("#INITIAL\ns\n#TRANSITIONS\ns !\n* s 5\n");
    Mec mec = whole_model(vma);
    CHECK(lra_unichain(vma, mec, GoalSet::of(1, {0}), Mode::Max).value == 1.0);
    CHECK(lra_unichain(vma, mec, GoalSet(1), Mode::Min).value == 0.0);

    auto fig = load(kSample);
    auto found = mecs(fig.vma);
    for (Mode mode : {Mode::Min, Mode::Max}) {
        UnichainResult r = lra_unichain(fig.vma, found[0], fig.goals, mode);
        CHECK(std::abs(r.value - 5.0 / 6.0) <= 1e-9);
        CHECK(r.policy.at(id(fig.vma, "s3")) == 1);
        CHECK(std::abs(oracle::lp_ratio(fig.vma, found[0], fig.goals, mode) - 5.0 / 6.0) <= 1e-9);
    }
    CHECK_THROWS_AS(lra_unichain(vma, Mec{}, goals, Mode::Max), Error);
}

TEST_CASE("unichain ratio matches the linear program")
{
    std::mt19937_64 rng(67);
    int checked = 0;
    for (int t = 0; t < 80; ++t) {
        ValidatedMA vma = validate(random_ma(rng, 2 + pick(rng, 10), 3));
        GoalSet g = random_goals(rng, vma.num_states());
        for (const Mec& mec : mecs(vma)) {
            for (Mode mode : {Mode::Min, Mode::Max}) {
                double got = lra_unichain(vma, mec, g, mode).value;
                CHECK(std::abs(got - oracle::lp_ratio(vma, mec, g, mode)) <= 1e-8);
                ++checked;
            }
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("quotient of the sample automaton")
{
    auto [vma, goals] = load(kSample);
    auto found = mecs(vma);
    LraQuotient q = build_ssp_lra(vma, found, {5.0 / 6.0, 0.0});
    const SspInstance& ssp = q.ssp;
    REQUIRE(ssp.num_states() == 5);
    CHECK(ssp.names == std::vector<std::string>{"s0", "u1", "u2", "q1", "q2"});
    CHECK(q.gates == std::vector<StateIndex>{1, 2});
    CHECK(q.sinks == std::vector<StateIndex>{3, 4});
    CHECK(ssp.initial == 0);
    CHECK(ssp.actions[0].size() == 1);
    CHECK(ssp.actions[0][0].kernel == Distribution{{1, 1.0}});
    REQUIRE(ssp.actions[1].size() == 2);
    CHECK(ssp.actions[1][0].label == "!");
    CHECK(ssp.actions[1][0].kernel == Distribution{{3, 1.0}});
    CHECK(ssp.actions[1][1].label == "s3.alpha");
    CHECK(ssp.actions[1][1].kernel == Distribution{{2, 1.0}});
    REQUIRE(ssp.actions[2].size() == 1);
    CHECK(ssp.actions[2][0].kernel == Distribution{{4, 1.0}});
    CHECK(ssp.goals == StateSet::of(5, {3, 4}));
    CHECK(ssp.terminal[3] == 5.0 / 6.0);
    CHECK(ssp.terminal[4] == 0.0);
    for (const auto& acts : ssp.actions)
        for (const SspAction& a : acts)
            CHECK(a.cost == 0.0);
    CHECK(q.origins[0][1] == std::make_optional(std::make_pair(id(vma, "s3"), std::size_t{0})));
    CHECK_NOTHROW(ssp.check());
}

TEST_CASE("single end component quotient")
{
    std::mt19937_64 rng(71);
    ValidatedMA vma = validate(random_ergodic_ctmc(rng, 6));
    auto found = mecs(vma);
    REQUIRE(found.size() == 1);
    LraQuotient q = build_ssp_lra(vma, found, {0.375});
    CHECK(q.ssp.num_states() == 2);
    SspSolution sol = solve_ssp(q.ssp, Mode::Max);
    for (StateIndex s = 0; s < vma.num_states(); ++s)
        CHECK(sol.values[q.state_of[s]] == 0.375);
}

TEST_CASE("unreachable end component does not influence the initial value")
{
    auto [vma, goals] = load("#INITIAL\na\n#TRANSITIONS\na !\n* a 1\nb !\n* b 2\n");
    auto found = mecs(vma);
    REQUIRE(found.size() == 2);
    for (Mode mode : {Mode::Min, Mode::Max}) {
        LraQuotient q1 = build_ssp_lra(vma, found, {0.3, 0.7});
        LraQuotient q2 = build_ssp_lra(vma, found, {0.3, 0.1});
        double v1 = solve_ssp(q1.ssp, mode).values[q1.ssp.initial];
        double v2 = solve_ssp(q2.ssp, mode).values[q2.ssp.initial];
        CHECK(v1 == 0.3);
        CHECK(v1 == v2);
    }
}

TEST_CASE("long-run average of the sample automaton")
{
    auto [vma, goals] = load(kSample);
    LraResult max = lra(vma, goals, Mode::Max);
    LraResult min = lra(vma, goals, Mode::Min);
    CHECK(std::abs(max.values[id(vma, "s0")] - 5.0 / 6.0) <= 1e-9);
    CHECK(min.values[id(vma, "s0")] == 0.0);
    CHECK(max.values[id(vma, "s5")] == 0.0);
    CHECK(max.policy[id(vma, "s3")] == 1);
    CHECK(min.policy[id(vma, "s3")] == 0);
    CHECK(max.mecs.size() == 2);
    CHECK(std::abs(max.mec_values[0] - 5.0 / 6.0) <= 1e-9);
    auto bf_max = oracle::enumerate_policies(vma, goals, oracle::Objective::LongRunAverage, Mode::Max);
    auto bf_min = oracle::enumerate_policies(vma, goals, oracle::Objective::LongRunAverage, Mode::Min);
    CHECK(std::abs(bf_max[id(vma, "s0")] - 5.0 / 6.0) <= 1e-9);
    CHECK(bf_min[id(vma, "s0")] == doctest::Approx(0.0));
}

TEST_CASE("ergodic CTMCs agree with the steady-state distribution")
{
    std::mt19937_64 rng(73);
    for (int t = 0; t < 20; ++t) {
        ValidatedMA vma = validate(random_ergodic_ctmc(rng, 20));
        GoalSet g = random_goals(rng, 20);
        auto pi = oracle::ctmc_steady_state(vma);
        double expected = 0.0;
        for (StateIndex s : g.members())
            expected += pi[s];
        for (Mode mode : {Mode::Min, Mode::Max}) {
            LraResult r = lra(vma, g, mode);
            for (double v : r.values)
                CHECK(std::abs(v - expected) <= 1e-8);
            CHECK(std::abs(lra_unichain(vma, whole_model(vma), g, mode).value - r.values[0]) <= 2e-10);
        }
    }
}

TEST_CASE("trivial goal sets")
{
    std::mt19937_64 rng(79);
    for (int t = 0; t < 30; ++t) {
        ValidatedMA vma = validate(random_ma(rng, 2 + pick(rng, 10)));
        GoalSet all = markovian_states(vma);
        for (StateIndex s = 0; s < vma.num_states(); ++s)
            if (pick(rng, 2) == 0)
                all.insert(s);
        for (Mode mode : {Mode::Min, Mode::Max}) {
            for (double v : lra(vma, GoalSet(vma.num_states()), mode).values)
                CHECK(v == 0.0);
            for (double v : lra(vma, all, mode).values)
                CHECK(std::abs(v - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("random automata: bounds, complements, pass-through states and brute force")
{
    std::mt19937_64 rng(83);
    for (int t = 0; t < 60; ++t) {
        ValidatedMA vma = validate(random_ma(rng, 2 + pick(rng, 7)));
        const std::size_t n = vma.num_states();
        GoalSet g = random_goals(rng, n);
        LraResult min = lra(vma, g, Mode::Min);
        LraResult max = lra(vma, g, Mode::Max);
        auto bf_min = oracle::enumerate_policies(vma, g, oracle::Objective::LongRunAverage, Mode::Min);
        auto bf_max = oracle::enumerate_policies(vma, g, oracle::Objective::LongRunAverage, Mode::Max);

        GoalSet rest = markovian_states(vma);
        for (StateIndex s : g.members())
            rest.erase(s);
        LraResult rest_max = lra(vma, rest, Mode::Max);

        GoalSet with_ps = g;
        for (StateIndex s = 0; s < n; ++s)
            if (vma.is_probabilistic(s))
                with_ps.insert(s);
        LraResult ps_max = lra(vma, with_ps, Mode::Max);

        auto witness_min = oracle::lra_fixed_policy(vma, g, min.policy);
        auto witness_max = oracle::lra_fixed_policy(vma, g, max.policy);

        for (StateIndex s = 0; s < n; ++s) {
            CHECK(min.values[s] >= 0.0);
            CHECK(max.values[s] <= 1.0);
            CHECK(min.values[s] <= max.values[s]);
            CHECK(std::abs(min.values[s] - bf_min[s]) <= 1e-6);
            CHECK(std::abs(max.values[s] - bf_max[s]) <= 1e-6);
            CHECK(std::abs(min.values[s] + rest_max.values[s] - 1.0) <= 1e-8);
            CHECK(std::abs(ps_max.values[s] - max.values[s]) <= 1e-12);
            CHECK(std::abs(witness_min[s] - min.values[s]) <= 1e-6);
            CHECK(std::abs(witness_max[s] - max.values[s]) <= 1e-6);
        }

        oracle::for_each_policy(vma, g, false, [&](const MaPolicy& pol) {
            auto in = oracle::lra_fixed_policy(vma, g, pol);
            auto out = oracle::lra_fixed_policy(vma, rest, pol);
            for (StateIndex s = 0; s < n; ++s)
                CHECK(std::abs(in[s] + out[s] - 1.0) <= 1e-9);
        });
    }
}

TEST_CASE("Zeno model is rejected")
{
    auto [vma, goals] = load_file("zeno.ma");
    CHECK_THROWS_AS(lra(vma, goals, Mode::Max), ZenoError);
}
