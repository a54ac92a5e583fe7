#include "mama/cli.hpp"

#include "mama/exptime.hpp"
#include "mama/longrun.hpp"
#include "mama/oracle.hpp"
#include "mama/parser.hpp"
#include "mama/timedreach.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ostream>

namespace mama::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::size_t kVerifyLimit = 10;

struct Options {
    std::string model;
    std::string query;
    std::string mode = "max";
    std::vector<std::string> goals;
    double from = 0.0;
    std::optional<double> to;
    double epsilon = 1e-3;
    double tolerance = 1e-10;
    std::string output = "text";
    bool policy = false;
    bool verify = false;
    bool stats = false;
};

// One solved query in one mode.
struct Outcome {
    Mode mode;
    ValueVector values;
    ValueVector upper; // timed reachability only
    std::vector<std::optional<std::string>> policy;
    std::size_t iterations = 0;
};

std::string number(double x)
{
    if (std::isinf(x))
        return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

Json json_number(double x)
{
    if (std::isinf(x))
        return "inf";
    return x;
}

class VerifyFailure : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool close(double expected, double actual, double tol)
{
    if (std::isinf(expected) || std::isinf(actual))
        return expected == actual;
    return std::abs(expected - actual) <= tol * std::max(1.0, std::abs(expected));
}

void verify(const ValidatedMA& vma, const GoalSet& goals, const Options& opt, const std::vector<Outcome>& outcomes,
            std::ostream& err)
{
    if (vma.num_states() > kVerifyLimit) {
        err << "verify: skipped, the model has " << vma.num_states() << " states (limit " << kVerifyLimit << ")\n";
        return;
    }
    for (const Outcome& o : outcomes) {
        if (opt.query == "tbr") {
            const bool deterministic = vma.num_probabilistic() == 0;
            ValueVector best(vma.num_states(), o.mode == Mode::Max ? 0.0 : 1.0);
            oracle::for_each_policy(vma, goals, false, [&](const MaPolicy& p) {
                auto v = oracle::policy_reach_within(vma, goals, p, opt.from, *opt.to);
                for (StateIndex s = 0; s < v.size(); ++s)
                    best[s] = o.mode == Mode::Max ? std::max(best[s], v[s]) : std::min(best[s], v[s]);
            });
            for (StateIndex s = 0; s < vma.num_states(); ++s) {
                // Stationary policies are not optimal for timed objectives, so
                // only the side they bound is checked unless there is no choice.
                bool ok = true;
                if (o.mode == Mode::Max || deterministic)
                    ok = ok && best[s] <= o.upper[s] + 1e-9;
                if (o.mode == Mode::Min || deterministic)
                    ok = ok && best[s] >= o.values[s] - 1e-9;
                if (!ok)
                    throw VerifyFailure("state " + vma.name(s) + ": oracle " + number(best[s]) + " outside [" +
                                        number(o.values[s]) + ", " + number(o.upper[s]) + "]");
            }
            continue;
        }
        const auto objective = opt.query == "et" ? oracle::Objective::ExpectedTime : oracle::Objective::LongRunAverage;
        ValueVector expected = oracle::enumerate_policies(vma, goals, objective, o.mode);
        for (StateIndex s = 0; s < vma.num_states(); ++s)
            if (!close(expected[s], o.values[s], 1e-6))
                throw VerifyFailure("state " + vma.name(s) + ": oracle " + number(expected[s]) + ", solver " +
                                    number(o.values[s]));
    }
    err << "verify: passed\n";
}

std::vector<Outcome> solve(const ValidatedMA& vma, const GoalSet& goals, const Options& opt, Json& stats)
{
    std::vector<Mode> modes;
    if (opt.mode != "max")
        modes.push_back(Mode::Min);
    if (opt.mode != "min")
        modes.push_back(Mode::Max);

    std::vector<Outcome> outcomes;
    for (Mode mode : modes) {
        Outcome o{mode, {}, {}, std::vector<std::optional<std::string>>(vma.num_states()), 0};
        if (opt.query == "et") {
            ExpectedTimeResult r = expected_time(vma, goals, mode, opt.tolerance);
            o.values = std::move(r.values);
            o.iterations = r.iterations;
            for (StateIndex s = 0; s < vma.num_states(); ++s)
                if (vma.is_probabilistic(s) && r.policy[s])
                    o.policy[s] = vma.choices(s)[*r.policy[s]].label;
        } else if (opt.query == "lra") {
            LraResult r = lra(vma, goals, mode, opt.tolerance);
            o.values = std::move(r.values);
            o.iterations = r.iterations;
            for (StateIndex s = 0; s < vma.num_states(); ++s)
                if (vma.is_probabilistic(s))
                    o.policy[s] = vma.choices(s)[r.policy[s]].label;
        } else {
            TimedQuery q{goals, opt.from, *opt.to, opt.epsilon, mode};
            BoundedResult r = timed_reachability(vma, q);
            o.values = std::move(r.lower);
            o.upper = std::move(r.upper);
            o.iterations = r.k + r.k_a;
            stats["delta"] = r.delta;
            stats["k"] = r.k;
            if (opt.from > 0.0) {
                stats["delta_a"] = r.delta_a;
                stats["k_a"] = r.k_a;
            }
            stats["error_bound"] = std::min(r.error_relaxed, r.error_exact);
        }
        outcomes.push_back(std::move(o));
    }
    return outcomes;
}

void print_text(const ValidatedMA& vma, const Options& opt, const std::vector<Outcome>& outcomes, const Json& stats,
                std::ostream& out)
{
    const bool both = outcomes.size() == 2;
    const bool timed = opt.query == "tbr";
    for (StateIndex s = 0; s < vma.num_states(); ++s) {
        out << vma.name(s);
        if (timed) {
            for (const Outcome& o : outcomes) {
                if (both)
                    out << " [" << number(o.values[s]) << ", " << number(o.upper[s]) << "]";
                else
                    out << ' ' << number(o.values[s]) << ' ' << number(o.upper[s]);
            }
        } else if (both) {
            out << " [" << number(outcomes[0].values[s]) << ", " << number(outcomes[1].values[s]) << "]";
        } else {
            out << ' ' << number(outcomes[0].values[s]);
        }
        out << '\n';
    }
    if (opt.policy)
        for (const Outcome& o : outcomes) {
            out << (both ? std::string("policy (") + to_string(o.mode) + "):\n" : std::string("policy:\n"));
            for (StateIndex s = 0; s < vma.num_states(); ++s)
                if (o.policy[s])
                    out << "  " << vma.name(s) << ' ' << *o.policy[s] << '\n';
        }
    if (opt.stats) {
        out << "stats:\n";
        for (const auto& [key, value] : stats.items())
            out << "  " << key << ' ' << (value.is_number_float() ? number(value.get<double>()) : value.dump()) << '\n';
    }
}

void print_json(const ValidatedMA& vma, const Options& opt, const std::vector<Outcome>& outcomes, const Json& stats,
                std::ostream& out)
{
    const bool both = outcomes.size() == 2;
    auto per_state = [&](auto value_of) {
        Json obj = Json::object();
        for (StateIndex s = 0; s < vma.num_states(); ++s) {
            if (both)
                obj[vma.name(s)] = Json::array({value_of(outcomes[0], s), value_of(outcomes[1], s)});
            else
                obj[vma.name(s)] = value_of(outcomes[0], s);
        }
        return obj;
    };
    Json doc;
    doc["query"] = opt.query;
    doc["mode"] = opt.mode;
    doc["values"] = per_state([](const Outcome& o, StateIndex s) { return json_number(o.values[s]); });
    if (opt.query == "tbr") {
        doc["bounds"]["lower"] = per_state([](const Outcome& o, StateIndex s) { return json_number(o.values[s]); });
        doc["bounds"]["upper"] = per_state([](const Outcome& o, StateIndex s) { return json_number(o.upper[s]); });
    }
    if (opt.policy) {
        auto table = [&](const Outcome& o) {
            Json obj = Json::object();
            for (StateIndex s = 0; s < vma.num_states(); ++s)
                if (o.policy[s])
                    obj[vma.name(s)] = *o.policy[s];
            return obj;
        };
        if (both)
            doc["policy"] = {{"min", table(outcomes[0])}, {"max", table(outcomes[1])}};
        else
            doc["policy"] = table(outcomes[0]);
    }
    if (opt.stats)
        doc["stats"] = stats;
    out << doc.dump(2) << '\n';
}

int execute(const Options& opt, std::ostream& out, std::ostream& err)
{
    const auto started = std::chrono::steady_clock::now();
    ParsedModel parsed;
    std::optional<ValidatedMA> model;
    try {
        parsed = parse_file(opt.model);
        model = validate(parsed.ma);
    } catch (const Error& e) {
        err << opt.model << ':';
        if (e.line() != 0)
            err << e.line() << ':';
        err << ' ' << e.what() << '\n';
        return kModelError;
    }
    const ValidatedMA& vma = *model;
    for (const std::string& w : vma.warnings())
        err << "warning: " << w << '\n';

    GoalSet goals = parsed.goals;
    if (!opt.goals.empty()) {
        goals = GoalSet(vma.num_states());
        for (const std::string& name : opt.goals) {
            auto s = vma.underlying().find(name);
            if (!s) {
                err << "error: unknown goal state '" << name << "'\n";
                return kModelError;
            }
            goals.insert(*s);
        }
    }

    Json stats;
    stats["states"] = vma.num_states();
    stats["markovian"] = vma.num_markovian();
    stats["probabilistic"] = vma.num_probabilistic();
    stats["lambda"] = vma.lambda_max();
    stats["mecs"] = mecs(vma).size();
    std::vector<Outcome> outcomes;
    try {
        outcomes = solve(vma, goals, opt, stats);
    } catch (const ZenoError& e) {
        err << "error: Zeno model: " << e.what() << "\nwitness:";
        for (StateIndex s : e.witness())
            err << ' ' << vma.name(s);
        err << '\n';
        return kZeno;
    } catch (const NotConvergedError& e) {
        err << "error: " << e.what() << '\n';
        return kNotConverged;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.code() == Errc::StepOverflow ? kNotConverged : kUsage;
    }
    std::size_t iterations = 0;
    for (const Outcome& o : outcomes)
        iterations += o.iterations;
    stats["iterations"] = iterations;
    stats["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (opt.output == "json")
        print_json(vma, opt, outcomes, stats, out);
    else
        print_text(vma, opt, outcomes, stats, out);

    if (opt.verify) {
        try {
            verify(vma, goals, opt, outcomes, err);
        } catch (const VerifyFailure& e) {
            err << "verify: failed at " << e.what() << '\n';
            return kVerifyFailed;
        } catch (const Error& e) {
            err << "verify: skipped, " << e.what() << '\n';
        }
    }
    return kOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app("Quantitative analysis of Markov automata", "mama");
    app.require_subcommand(1);
    Options opt;
    CLI::App* cmd = app.add_subcommand("run", "Evaluate a query on a model file");
    cmd->add_option("model", opt.model, "Model file")->required();
    cmd->add_option("--query", opt.query, "et, lra or tbr")->required()->check(CLI::IsMember({"et", "lra", "tbr"}));
    cmd->add_option("--mode", opt.mode, "min, max or both")->check(CLI::IsMember({"min", "max", "both"}));
    cmd->add_option("--goal", opt.goals, "Goal states (replaces the #GOALS section)");
    cmd->add_option("--from", opt.from, "Interval start for tbr")->check(CLI::NonNegativeNumber);
    cmd->add_option("--to", opt.to, "Interval end for tbr")->check(CLI::NonNegativeNumber);
    cmd->add_option("--epsilon", opt.epsilon, "Accuracy of tbr brackets");
    cmd->add_option("--tol", opt.tolerance, "Tolerance of the iterative solvers")->check(CLI::PositiveNumber);
    cmd->add_option("--output", opt.output, "text or json")->check(CLI::IsMember({"text", "json"}));
    cmd->add_flag("--policy", opt.policy, "Print an optimal policy");
    cmd->add_flag("--verify", opt.verify, "Cross-check against the reference engines (small models)");
    cmd->add_flag("--stats", opt.stats, "Print model and solver statistics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }
    if (opt.query == "tbr" && !opt.to) {
        err << "error: --query tbr needs --to\n";
        return kUsage;
    }
    if (opt.query == "tbr" && opt.policy) {
        err << "error: --policy is not available for tbr (optimal timed policies depend on time)\n";
        return kUsage;
    }
    if (opt.query != "tbr" && (opt.to || opt.from != 0.0)) {
        err << "error: --from/--to only apply to tbr\n";
        return kUsage;
    }
    return execute(opt, out, err);
}

} // namespace mama::cli
