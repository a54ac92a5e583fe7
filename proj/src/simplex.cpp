#include "mama/oracle.hpp"

#include <algorithm>
#include <map>

namespace mama::oracle {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr std::size_t kMaxLpVariables = 200;

// maximize c.x subject to rows, x >= 0 unless marked free.
struct LinearProgram {
    struct Row {
        std::vector<double> coeffs;
        char sense; // '<', '>' or '='
        double rhs;
    };
    std::size_t vars = 0;
    std::vector<double> objective;
    std::vector<bool> free;
    std::vector<Row> rows;
};

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : t_(rows, std::vector<double>(cols + 1, 0.0)), basis_(rows) {}

    double& at(std::size_t r, std::size_t c) { return t_[r][c]; }
    double& rhs(std::size_t r) { return t_[r].back(); }
    std::size_t rows() const { return t_.size(); }
    std::size_t cols() const { return t_.empty() ? 0 : t_[0].size() - 1; }
    std::vector<std::size_t>& basis() { return basis_; }

    void pivot(std::size_t r, std::size_t c)
    {
        const double p = t_[r][c];
        for (double& x : t_[r])
            x /= p;
        for (std::size_t i = 0; i < rows(); ++i) {
            if (i == r || t_[i][c] == 0.0)
                continue;
            const double f = t_[i][c];
            for (std::size_t j = 0; j <= cols(); ++j)
                t_[i][j] -= f * t_[r][j];
        }
        basis_[r] = c;
    }

    // Primal simplex with Bland's rule; columns flagged in `blocked` never enter.
    void maximize(const std::vector<double>& cost, const std::vector<bool>& blocked)
    {
        while (true) {
            std::optional<std::size_t> entering;
            for (std::size_t j = 0; j < cols() && !entering; ++j) {
                if (blocked[j] || std::find(basis_.begin(), basis_.end(), j) != basis_.end())
                    continue;
                double reduced = cost[j];
                for (std::size_t i = 0; i < rows(); ++i)
                    reduced -= cost[basis_[i]] * t_[i][j];
                if (reduced > kPivotEps)
                    entering = j;
            }
            if (!entering)
                return;
            std::optional<std::size_t> leaving;
            double best = 0.0;
            for (std::size_t i = 0; i < rows(); ++i) {
                if (t_[i][*entering] <= kPivotEps)
                    continue;
                const double ratio = t_[i].back() / t_[i][*entering];
                if (!leaving || ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis_[i] < basis_[*leaving])) {
                    leaving = i;
                    best = ratio;
                }
            }
            if (!leaving)
                throw Error(Errc::Unbounded, "linear program is unbounded");
            pivot(*leaving, *entering);
        }
    }

    void drop_row(std::size_t r)
    {
        t_.erase(t_.begin() + static_cast<std::ptrdiff_t>(r));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    }

private:
    std::vector<std::vector<double>> t_;
    std::vector<std::size_t> basis_;
};

std::vector<double> solve_lp(const LinearProgram& lp)
{
    // Columns: split variables, then one slack per inequality, then artificials.
    std::vector<std::size_t> pos(lp.vars), neg(lp.vars, SIZE_MAX);
    std::size_t cols = 0;
    for (std::size_t v = 0; v < lp.vars; ++v) {
        pos[v] = cols++;
        if (lp.free[v])
            neg[v] = cols++;
    }
    const std::size_t m = lp.rows.size();
    std::vector<std::size_t> slack(m, SIZE_MAX), artificial(m, SIZE_MAX);
    for (std::size_t r = 0; r < m; ++r)
        if (lp.rows[r].sense != '=')
            slack[r] = cols++;
    const std::size_t structural = cols;
    for (std::size_t r = 0; r < m; ++r)
        artificial[r] = cols++;

    Tableau tab(m, cols);
    for (std::size_t r = 0; r < m; ++r) {
        const auto& row = lp.rows[r];
        const double sign = row.rhs < 0.0 ? -1.0 : 1.0;
        for (std::size_t v = 0; v < lp.vars; ++v) {
            tab.at(r, pos[v]) = sign * row.coeffs[v];
            if (neg[v] != SIZE_MAX)
                tab.at(r, neg[v]) = -sign * row.coeffs[v];
        }
        if (slack[r] != SIZE_MAX)
            tab.at(r, slack[r]) = sign * (row.sense == '<' ? 1.0 : -1.0);
        tab.at(r, artificial[r]) = 1.0;
        tab.rhs(r) = sign * row.rhs;
        tab.basis()[r] = artificial[r];
    }

    std::vector<double> phase1(cols, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        phase1[artificial[r]] = -1.0;
    std::vector<bool> blocked(cols, false);
    tab.maximize(phase1, blocked);
    double infeasibility = 0.0;
    for (std::size_t r = 0; r < tab.rows(); ++r)
        if (tab.basis()[r] >= structural)
            infeasibility += tab.rhs(r);
    if (infeasibility > 1e-8)
        throw Error(Errc::Infeasible, "linear program is infeasible");

    // Drive artificials out of the basis; rows where that fails are redundant.
    for (std::size_t r = tab.rows(); r-- > 0;) {
        if (tab.basis()[r] < structural)
            continue;
        std::optional<std::size_t> col;
        for (std::size_t j = 0; j < structural && !col; ++j)
            if (std::abs(tab.at(r, j)) > 1e-9)
                col = j;
        if (col)
            tab.pivot(r, *col);
        else
            tab.drop_row(r);
    }
    for (std::size_t j = structural; j < cols; ++j)
        blocked[j] = true;

    std::vector<double> phase2(cols, 0.0);
    for (std::size_t v = 0; v < lp.vars; ++v) {
        phase2[pos[v]] = lp.objective[v];
        if (neg[v] != SIZE_MAX)
            phase2[neg[v]] = -lp.objective[v];
    }
    tab.maximize(phase2, blocked);

    std::vector<double> column(cols, 0.0);
    for (std::size_t r = 0; r < tab.rows(); ++r)
        column[tab.basis()[r]] = tab.rhs(r);
    std::vector<double> x(lp.vars);
    for (std::size_t v = 0; v < lp.vars; ++v)
        x[v] = column[pos[v]] - (neg[v] != SIZE_MAX ? column[neg[v]] : 0.0);
    return x;
}

} // namespace

double lp_ratio(const ValidatedMA& vma, const Mec& mec, const GoalSet& goals, Mode mode)
{
    check_goal_set(vma, goals);
    const std::size_t m = mec.states.size();
    if (m == 0)
        throw Error(Errc::EmptyMec, "end component has no states");
    if (m + 1 > kMaxLpVariables)
        throw Error(Errc::InvalidArgument, "ratio program exceeds the variable limit");
    std::map<StateIndex, std::size_t> local;
    for (std::size_t i = 0; i < m; ++i)
        local[mec.states[i]] = i;

    // Variables x_0..x_{m-1} and k, all free.
    LinearProgram lp;
    lp.vars = m + 1;
    lp.free.assign(m + 1, true);
    lp.objective.assign(m + 1, 0.0);
    lp.objective[m] = mode == Mode::Min ? 1.0 : -1.0;
    for (std::size_t i = 0; i < m; ++i) {
        const StateIndex s = mec.states[i];
        double c1 = 0.0, c2 = 0.0;
        if (vma.is_markovian(s)) {
            c2 = 1.0 / vma.exit_rate(s);
            if (goals.contains(s))
                c1 = c2;
        }
        auto choices = vma.choices(s);
        for (std::size_t c : mec.actions.at(s)) {
            LinearProgram::Row row{std::vector<double>(m + 1, 0.0), mode == Mode::Min ? '<' : '>', c1};
            row.coeffs[i] += 1.0;
            for (const Branch& b : choices[c].distribution)
                row.coeffs[local.at(b.target)] -= b.probability;
            row.coeffs[m] = c2;
            lp.rows.push_back(std::move(row));
        }
    }
    return solve_lp(lp)[m];
}

ValueVector lp_ssp(const SspInstance& ssp, Mode mode)
{
    ssp.check();
    const std::size_t n = ssp.num_states();
    ValueVector out(n, 0.0);
    std::vector<std::size_t> var(n, SIZE_MAX);
    std::size_t vars = 0;
    for (StateIndex s = 0; s < n; ++s) {
        if (ssp.goals.contains(s))
            out[s] = ssp.terminal[s];
        else if (ssp.infinite.contains(s))
            out[s] = kInfinity;
        else
            var[s] = vars++;
    }
    if (vars > kMaxLpVariables)
        throw Error(Errc::InvalidArgument, "SSP program exceeds the variable limit");
    if (vars == 0)
        return out;

    LinearProgram lp;
    lp.vars = vars;
    lp.free.assign(vars, false);
    lp.objective.assign(vars, mode == Mode::Min ? 1.0 : -1.0);
    for (StateIndex s = 0; s < n; ++s) {
        if (var[s] == SIZE_MAX)
            continue;
        for (const SspAction& a : ssp.actions[s]) {
            LinearProgram::Row row{std::vector<double>(vars, 0.0), mode == Mode::Min ? '<' : '>', a.cost};
            row.coeffs[var[s]] += 1.0;
            bool unbounded = false;
            for (const Branch& b : a.kernel) {
                if (var[b.target] != SIZE_MAX)
                    row.coeffs[var[b.target]] -= b.probability;
                else if (ssp.goals.contains(b.target))
                    row.rhs += b.probability * ssp.terminal[b.target];
                else
                    unbounded = true;
            }
            if (!unbounded)
                lp.rows.push_back(std::move(row));
        }
    }
    std::vector<double> x = solve_lp(lp);
    for (StateIndex s = 0; s < n; ++s)
        if (var[s] != SIZE_MAX)
            out[s] = x[var[s]];
    return out;
}

} // namespace mama::oracle
