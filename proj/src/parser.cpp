#include "mama/parser.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace mama {

namespace {

enum class Section { None, Initial, Goals, Transitions };

std::vector<std::string_view> tokenize(std::string_view line)
{
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t')
            ++j;
        if (j > i)
            tokens.push_back(line.substr(i, j - i));
        i = j;
    }
    return tokens;
}

std::optional<double> parse_number(std::string_view token)
{
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

struct Block {
    StateIndex state = 0;
    std::string label;
    std::size_t line = 0;
    Distribution branches;
};

class Reader {
public:
    ParsedModel run(std::string_view text)
    {
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string_view::npos)
                end = text.size();
            std::string_view line = text.substr(pos, end - pos);
            ++line_no;
            if (auto c = line.find('%'); c != std::string_view::npos)
                line = line.substr(0, c);
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);
            handle_line(tokenize(line), line_no);
            if (end == text.size())
                break;
            pos = end + 1;
        }
        close_block();

        if (!seen_.count(Section::Initial) || !initial_)
            throw Error(Errc::SyntaxError, "missing #INITIAL state", line_no);
        if (!seen_.count(Section::Transitions))
            throw Error(Errc::SyntaxError, "missing #TRANSITIONS section", line_no);

        finish_actions();
        ma_.set_initial(*initial_);
        GoalSet goals(ma_.num_states());
        for (StateIndex g : goal_list_)
            goals.insert(g);
        return {std::move(ma_), std::move(goals)};
    }

private:
    StateIndex state(std::string_view id, std::size_t line)
    {
        if (!is_state_id(id))
            throw Error(Errc::SyntaxError, "invalid state identifier '" + std::string(id) + "'", line);
        return ma_.intern(id);
    }

    void handle_line(const std::vector<std::string_view>& tokens, std::size_t line)
    {
        if (tokens.empty())
            return;
        if (tokens[0].front() == '#') {
            close_block();
            if (tokens.size() != 1)
                throw Error(Errc::SyntaxError, "unexpected text after section header", line);
            Section next = Section::None;
            if (tokens[0] == "#INITIAL")
                next = Section::Initial;
            else if (tokens[0] == "#GOALS")
                next = Section::Goals;
            else if (tokens[0] == "#TRANSITIONS")
                next = Section::Transitions;
            else
                throw Error(Errc::UnknownSection, "unknown section '" + std::string(tokens[0]) + "'", line);
            if (!seen_.insert(next).second)
                throw Error(Errc::SyntaxError, "section " + std::string(tokens[0]) + " appears twice", line);
            section_ = next;
            return;
        }

        switch (section_) {
        case Section::None:
            throw Error(Errc::SyntaxError, "content before the first section header", line);
        case Section::Initial:
            for (std::string_view id : tokens) {
                if (initial_)
                    throw Error(Errc::SyntaxError, "#INITIAL takes exactly one state", line);
                initial_ = state(id, line);
            }
            return;
        case Section::Goals:
            for (std::string_view id : tokens)
                goal_list_.push_back(state(id, line));
            return;
        case Section::Transitions:
            transition_line(tokens, line);
            return;
        }
    }

    void transition_line(const std::vector<std::string_view>& tokens, std::size_t line)
    {
        if (tokens[0] == "*") {
            if (!block_)
                throw Error(Errc::SyntaxError, "branch line outside of a transition block", line);
            if (tokens.size() != 3)
                throw Error(Errc::SyntaxError, "expected '* <state-id> <number>'", line);
            StateIndex target = state(tokens[1], line);
            auto value = parse_number(tokens[2]);
            if (!value)
                throw Error(Errc::SyntaxError, "malformed number '" + std::string(tokens[2]) + "'", line);
            if (block_->label == kMarkovianAction) {
                if (*value <= 0.0)
                    throw Error(Errc::SyntaxError, "rate must be positive", line);
            } else if (*value <= 0.0 || *value > 1.0) {
                throw Error(Errc::SyntaxError, "probability must be in (0,1]", line);
            }
            block_->branches.push_back({target, *value});
            return;
        }

        close_block();
        if (tokens.size() != 2)
            throw Error(Errc::SyntaxError, "expected '<state-id> <label>'", line);
        Block block;
        block.state = state(tokens[0], line);
        block.label = std::string(tokens[1]);
        block.line = line;
        if (block.label == kMarkovianAction && !markov_blocks_.insert(block.state).second)
            throw Error(Errc::DuplicateMarkovianBlock,
                        "state '" + std::string(tokens[0]) + "' has more than one Markovian block", line);
        block_ = std::move(block);
    }

    void close_block()
    {
        if (!block_)
            return;
        Block block = std::move(*block_);
        block_.reset();
        if (block.label == kMarkovianAction) {
            for (const Branch& b : block.branches)
                ma_.add_markov_edge(block.state, b.target, b.probability);
            return;
        }
        double sum = 0.0;
        for (const Branch& b : block.branches)
            sum += b.probability;
        if (std::abs(sum - 1.0) > kDistributionTolerance) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", sum);
            throw Error(Errc::DistributionNotNormalized,
                        "probabilities of action '" + block.label + "' sum to " + buf, block.line);
        }
        labeled_.push_back(std::move(block));
    }

    // Repeated `tau` blocks of one state become tau1..taun; any other
    // repeated label is an error.
    void finish_actions()
    {
        std::map<StateIndex, std::size_t> tau_count;
        for (const Block& b : labeled_)
            if (b.label == "tau")
                ++tau_count[b.state];
        std::map<StateIndex, std::size_t> tau_seen;
        std::set<std::pair<StateIndex, std::string>> used;
        for (Block& b : labeled_) {
            if (b.label == "tau" && tau_count[b.state] > 1)
                b.label = "tau" + std::to_string(++tau_seen[b.state]);
            if (!used.emplace(b.state, b.label).second)
                throw Error(Errc::DuplicateAction,
                            "state '" + ma_.name(b.state) + "' has action '" + b.label + "' twice", b.line);
            ma_.add_prob_transition(b.state, b.label, std::move(b.branches));
        }
    }

    MarkovAutomaton ma_;
    Section section_ = Section::None;
    std::set<Section> seen_;
    std::optional<StateIndex> initial_;
    std::vector<StateIndex> goal_list_;
    std::optional<Block> block_;
    std::vector<Block> labeled_;
    std::set<StateIndex> markov_blocks_;
};

void put_number(std::string& out, double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
}

} // namespace

bool is_state_id(std::string_view id)
{
    if (id.empty())
        return false;
    for (char c : id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                  c == '.' || c == ',' || c == '(' || c == ')' || c == '-';
        if (!ok)
            return false;
    }
    return true;
}

ParsedModel parse(std::string_view text)
{
    return Reader().run(text);
}

std::string serialize(const MarkovAutomaton& ma, const GoalSet& goals)
{
    std::string out = "#INITIAL\n";
    out += ma.name(ma.initial());
    out += '\n';
    if (!goals.empty()) {
        out += "#GOALS\n";
        bool first = true;
        for (StateIndex g : goals.members()) {
            if (!first)
                out += ' ';
            out += ma.name(g);
            first = false;
        }
        out += '\n';
    }
    out += "#TRANSITIONS\n";
    for (StateIndex s = 0; s < ma.num_states(); ++s) {
        const auto& edges = ma.markov_edges(s);
        const auto& prob = ma.prob_transitions(s);
        if (!edges.empty() || prob.empty()) {
            out += ma.name(s);
            out += " !\n";
            for (const MarkovEdge& e : edges) {
                out += "* " + ma.name(e.target) + ' ';
                put_number(out, e.rate);
                out += '\n';
            }
        }
        for (const ProbTransition& t : prob) {
            out += ma.name(s) + ' ' + t.action + '\n';
            for (const Branch& b : t.distribution) {
                out += "* " + ma.name(b.target) + ' ';
                put_number(out, b.probability);
                out += '\n';
            }
        }
    }
    return out;
}

ParsedModel parse_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::SyntaxError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

} // namespace mama
