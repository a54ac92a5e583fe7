#include "support.hpp"

#include "mama/longrun.hpp"
#include "mama/oracle.hpp"

#include <doctest.h>

using namespace mama;
using namespace mama::test;
using namespace mama::oracle;

namespace {

MaPolicy sample_policy(const ValidatedMA& vma, const char* at_s3)
{
    MaPolicy p(vma.num_states(), 0);
    p[id(vma, "s3")] = std::string(at_s3) == "alpha" ? 0 : 1;
    return p;
}

} // namespace

TEST_CASE("dense solver")
{
    std::mt19937_64 rng(109);
    for (int t = 0; t < 50; ++t) {
        std::size_t n = 1 + pick(rng, 40);
        DenseLinearSystem sys;
        sys.matrix.assign(n, std::vector<double>(n));
        sys.rhs.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j)
                sys.matrix[i][j] = uniform(rng, -1, 1);
            sys.matrix[i][i] += n * 0.5;
            sys.rhs[i] = uniform(rng, -10, 10);
        }
        auto x = solve(sys);
        double rhs_norm = 0.0, residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = -sys.rhs[i];
            for (std::size_t j = 0; j < n; ++j)
                r += sys.matrix[i][j] * x[j];
            residual = std::max(residual, std::abs(r));
            rhs_norm = std::max(rhs_norm, std::abs(sys.rhs[i]));
        }
        CHECK(residual <= 1e-10 * rhs_norm);
    }
    CHECK_THROWS_AS(solve({{{1, 2}, {2, 4}}, {1, 2}}), Error);
}

TEST_CASE("CTMC hitting times")
{
    auto erlang = load("#INITIAL\na\n#GOALS\ng\n#TRANSITIONS\na !\n* b 1\nb !\n* c 1\nc !\n* g 1\n");
    CHECK(std::abs(ctmc_hitting_time(erlang.vma, erlang.goals)[0] - 3.0) <= 1e-14);
    auto exp2 = load("#INITIAL\ns\n#GOALS\ng\n#TRANSITIONS\ns !\n* g 2\nt !\n* t 1\n");
    auto h = ctmc_hitting_time(exp2.vma, exp2.goals);
    CHECK(h[id(exp2.vma, "s")] == 0.5);
    CHECK(h[id(exp2.vma, "g")] == 0.0);
    CHECK(h[id(exp2.vma, "t")] == kInfinity);
    auto fig = load(kSample);
    CHECK_THROWS_AS(ctmc_hitting_time(fig.vma, fig.goals), Error);
}

TEST_CASE("steady state")
{
    SUBCASE("two states")
    {
        const double alpha = 3, beta = 0.7;
        auto [vma, goals] =
            load("#INITIAL\nx\n#TRANSITIONS\nx !\n* y " + std::to_string(alpha) + "\ny !\n* x " + std::to_string(beta) + "\n");
        auto pi = ctmc_steady_state(vma);
        CHECK(std::abs(pi[0] - beta / (alpha + beta)) <= 1e-12);
        CHECK(std::abs(pi[1] - alpha / (alpha + beta)) <= 1e-12);
        CHECK(std::abs(pi[0] * alpha - pi[1] * beta) <= 1e-12);
    }
    SUBCASE("symmetric ring")
    {
        MarkovAutomaton ma;
        for (int i = 0; i < 7; ++i)
            ma.intern("r" + std::to_string(i));
        for (StateIndex i = 0; i < 7; ++i)
            ma.add_markov_edge(i, (i + 1) % 7, 1.0);
        for (double p : ctmc_steady_state(validate(ma)))
            CHECK(std::abs(p - 1.0 / 7) <= 1e-14);
    }
    SUBCASE("generator residual on random ergodic chains")
    {
        std::mt19937_64 rng(113);
        for (int t = 0; t < 20; ++t) {
            ValidatedMA vma = validate(random_ergodic_ctmc(rng, 2 + pick(rng, 30)));
            auto pi = ctmc_steady_state(vma);
            const std::size_t n = vma.num_states();
            std::vector<double> flow(n, 0.0);
            for (StateIndex s = 0; s < n; ++s) {
                flow[s] -= pi[s] * vma.exit_rate(s);
                for (const MarkovEdge& e : vma.rates(s))
                    flow[e.target] += pi[s] * e.rate;
            }
            for (double f : flow)
                CHECK(std::abs(f) <= 1e-12);
        }
    }
    SUBCASE("embedded chain of the sample end component")
    {
        // mu P = mu with sum 1 over (s1, s2, s3, s4) under beta.
        DenseLinearSystem sys;
        sys.matrix = {{1, -1, 0, 0}, {-0.4, 1, 0, -1}, {-0.6, 0, 1, 0}, {1, 1, 1, 1}};
        sys.rhs = {0, 0, 0, 1};
        auto mu = solve(sys);
        CHECK(std::abs(mu[0] - 0.3125) <= 1e-15);
        CHECK(std::abs(mu[1] - 0.3125) <= 1e-15);
        CHECK(std::abs(mu[2] - 0.1875) <= 1e-15);
        CHECK(std::abs(mu[3] - 0.1875) <= 1e-15);
    }
    SUBCASE("several closed classes")
    {
        auto [vma, goals] = load("#INITIAL\na\n#TRANSITIONS\na !\n* a 1\nb !\n* b 1\n");
        CHECK_THROWS_AS(ctmc_steady_state(vma), Error);
    }
}

TEST_CASE("long-run average under a fixed policy")
{
    auto [vma, goals] = load(kSample);
    auto beta = lra_fixed_policy(vma, goals, sample_policy(vma, "beta"));
    for (const char* s : {"s0", "s1", "s2", "s3", "s4"})
        CHECK(std::abs(beta[id(vma, s)] - 5.0 / 6.0) <= 1e-12);
    CHECK(beta[id(vma, "s5")] == 0.0);
    auto alpha = lra_fixed_policy(vma, goals, sample_policy(vma, "alpha"));
    CHECK(alpha[id(vma, "s0")] == doctest::Approx(0.0));
    GoalSet ms(vma.num_states());
    for (StateIndex s = 0; s < vma.num_states(); ++s)
        if (vma.is_markovian(s))
            ms.insert(s);
    for (double v : lra_fixed_policy(vma, ms, sample_policy(vma, "alpha")))
        CHECK(std::abs(v - 1.0) <= 1e-12);
}

TEST_CASE("policy enumeration")
{
    auto [vma, goals] = load(kSample);
    auto max = enumerate_policies(vma, goals, Objective::LongRunAverage, Mode::Max);
    auto min = enumerate_policies(vma, goals, Objective::LongRunAverage, Mode::Min);
    CHECK(std::abs(max[id(vma, "s0")] - 5.0 / 6.0) <= 1e-12);
    CHECK(min[id(vma, "s0")] == doctest::Approx(0.0));

    auto choice = load("#INITIAL\ns\n#GOALS\ng\n#TRANSITIONS\ns a\n* g 1\ns b\n* m 1\nm !\n* g 1\n");
    CHECK(enumerate_policies(choice.vma, choice.goals, Objective::ExpectedTime, Mode::Min)[0] == 0.0);
    CHECK(enumerate_policies(choice.vma, choice.goals, Objective::ExpectedTime, Mode::Max)[0] == 1.0);

    std::mt19937_64 rng(127);
    ValidatedMA ctmc = validate(random_ctmc(rng, 12));
    GoalSet g = random_goals(rng, 12);
    std::size_t count = 0;
    for_each_policy(ctmc, g, true, [&](const MaPolicy&) { ++count; });
    CHECK(count == 1);
    auto direct = ctmc_hitting_time(ctmc, g);
    auto enumerated = enumerate_policies(ctmc, g, Objective::ExpectedTime, Mode::Max);
    for (StateIndex s = 0; s < 12; ++s)
        CHECK(near(direct[s], enumerated[s], 1e-12 * std::max(1.0, direct[s])));

    std::string text = "#INITIAL\np0\n#TRANSITIONS\nm !\n* m 1\n";
    for (int i = 0; i < 21; ++i)
        text += "p" + std::to_string(i) + " a\n* m 1\np" + std::to_string(i) + " b\n* m 1\n";
    auto big = load(text);
    CHECK_THROWS_AS(enumerate_policies(big.vma, big.goals, Objective::ExpectedTime, Mode::Min), Error);
}

TEST_CASE("linear programs")
{
    auto single = load("#INITIAL\ns\n#GOALS\ns\n#TRANSITIONS\ns !\n* s 1\n");
    CHECK(std::abs(lp_ratio(single.vma, mecs(single.vma)[0], single.goals, Mode::Max) - 1.0) <= 1e-12);

    auto fig = load(kSample);
    CHECK(std::abs(lp_ratio(fig.vma, mecs(fig.vma)[0], fig.goals, Mode::Min) - 5.0 / 6.0) <= 1e-9);

    SspInstance ssp = SspInstance::with_states(3);
    ssp.names = {"a", "b", "g"};
    ssp.goals.insert(2);
    ssp.terminal[2] = 1.0;
    ssp.actions[0] = {{"x", 1.0, {{1, 0.5}, {2, 0.5}}}, {"y", 3.0, {{2, 1.0}}}};
    ssp.actions[1] = {{"x", 2.0, {{0, 0.25}, {2, 0.75}}}};
    for (Mode mode : {Mode::Min, Mode::Max}) {
        auto lp = lp_ssp(ssp, mode);
        auto vi = solve_ssp(ssp, mode).values;
        for (StateIndex s = 0; s < 3; ++s)
            CHECK(std::abs(lp[s] - vi[s]) <= 1e-8);
    }
    // a = 1 + 0.5 b + 0.5, b = 2 + 0.25 a + 0.75 under x.
    double a = (1.5 + 0.5 * 2.75) / (1 - 0.125);
    CHECK(std::abs(lp_ssp(ssp, Mode::Min)[0] - a) <= 1e-9);
    CHECK(std::abs(lp_ssp(ssp, Mode::Max)[0] - 4.0) <= 1e-9);
}

TEST_CASE("transient reachability")
{
    auto exp1 = load("#INITIAL\ns\n#GOALS\ng\n#TRANSITIONS\ns !\n* g 1\n");
    CHECK(std::abs(ctmc_transient(exp1.vma, exp1.goals, 1)[0] - (1 - std::exp(-1.0))) <= 1e-11);
    auto erlang = load_file("erlang2.ma");
    CHECK(std::abs(ctmc_transient(erlang.vma, erlang.goals, 1)[id(erlang.vma, "s0")] - (1 - 2 * std::exp(-1.0))) <=
          1e-11);
    auto at_zero = ctmc_transient(erlang.vma, erlang.goals, 0);
    for (StateIndex s = 0; s < erlang.vma.num_states(); ++s)
        CHECK(at_zero[s] == (erlang.goals.contains(s) ? 1.0 : 0.0));
    auto exp = load_file("exponential.ma");
    MaPolicy none(exp.vma.num_states(), 0);
    CHECK(std::abs(policy_reach_within(exp.vma, exp.goals, none, 1, 4)[id(exp.vma, "s")] -
                   (std::exp(-1.0) - std::exp(-4.0))) <= 1e-11);
    CHECK(std::abs(policy_reach_within(exp1.vma, exp1.goals, MaPolicy(2, 0), 0, 1)[0] - (1 - std::exp(-1.0))) <=
          1e-11);
}

TEST_CASE("simulation")
{
    auto exp2 = load("#INITIAL\ns\n#GOALS\ng\n#TRANSITIONS\ns !\n* g 2\n");
    MaPolicy trivial(2, 0);
    SimulationQuery et{SimulationKind::ExpectedTime, exp2.goals};
    Estimate e = simulate(exp2.vma, trivial, et, 100000, 2);
    CHECK(e.runs == 100000);
    CHECK(e.contains(0.5));
    CHECK(e.half_width < 0.01);

    auto exp1 = load("#INITIAL\ns\n#GOALS\ng\n#TRANSITIONS\ns !\n* g 1\n");
    SimulationQuery tb{SimulationKind::TimedReach, exp1.goals, 0, 1};
    CHECK(simulate(exp1.vma, trivial, tb, 100000, 2).contains(0.6321206));

    auto fig = load(kSample);
    SimulationQuery longrun{SimulationKind::LongRunAverage, fig.goals};
    longrun.horizon = 1e4;
    CHECK(simulate(fig.vma, sample_policy(fig.vma, "beta"), longrun, 200, 3).contains(5.0 / 6.0));

    Estimate one = simulate(fig.vma, sample_policy(fig.vma, "beta"), longrun, 64, 7, 1);
    Estimate four = simulate(fig.vma, sample_policy(fig.vma, "beta"), longrun, 64, 7, 4);
    CHECK(one.mean == four.mean);
    CHECK(one.half_width == four.half_width);

    auto zeno = load_file("zeno.ma");
    SimulationQuery forever{SimulationKind::ExpectedTime, GoalSet(zeno.vma.num_states())};
    CHECK_THROWS_AS(simulate(zeno.vma, MaPolicy(2, 0), forever, 1, 1), Error);
}
