#include "swapgrid/oracle.hpp"

#include "swapgrid/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace swapgrid::oracle
{

using conic::AffineExpr;

RelaxedResult solve_centralized_relaxed(const grid::Grid& grid, const fleet::Scenario& s,
                                        const conic::ConicSolver& solver)
{
    fleet::check_capacity(s);
    const auto d = fleet::distances(s.evs, s.stations);
    const auto mask = fleet::reachability(s, d);
    const auto loads = fleet::station_loads(s);
    const int A = s.num_evs();
    const int N = s.num_stations();

    // w_j in [r (M_j - m_j), r M_j] is implied by u_j <= m_j, so the price
    // builder with zero prices gives exactly the OPF part.
    opf::OpfProblem opf =
        opf::build_opf(grid, opf::LinearPrice{std::vector<double>(static_cast<std::size_t>(N), 0.0)}, s.r_mw, loads);
    conic::ConicProblem& p = opf.problem;

    Eigen::MatrixXi var = Eigen::MatrixXi::Constant(A, N, -1);
    std::vector<AffineExpr> rows(static_cast<std::size_t>(A), AffineExpr(-1.0));
    std::vector<AffineExpr> cols(static_cast<std::size_t>(N));
    for (int a = 0; a < A; ++a)
    {
        for (int j = 0; j < N; ++j)
        {
            if (!mask(a, j))
            {
                continue;
            }
            const int v = p.add_variable("u_" + std::to_string(a) + "_" + std::to_string(j), 0.0, 1.0);
            var(a, j) = v;
            p.add_cost(v, s.alpha_per_km * d(a, j));
            rows[static_cast<std::size_t>(a)].add(v, 1.0);
            cols[static_cast<std::size_t>(j)].add(v, 1.0);
        }
    }
    for (auto& row : rows)
    {
        p.add_equality(std::move(row));
    }
    const double base = grid.base_mva;
    for (int j = 0; j < N; ++j)
    {
        const auto& st = s.stations[static_cast<std::size_t>(j)];
        const int uj = p.add_variable("uagg_" + std::to_string(j), 0.0, static_cast<double>(st.available));
        cols[static_cast<std::size_t>(j)].add(uj, -1.0);
        p.add_equality(std::move(cols[static_cast<std::size_t>(j)]));
        // w_j (pu) = (r (M_j - m_j) + r u_j) / base
        p.add_equality(AffineExpr(-loads[static_cast<std::size_t>(j)].base_mw / base)
                           .add(opf.layout.w[static_cast<std::size_t>(j)], 1.0)
                           .add(uj, -s.r_mw / base));
    }

    const conic::ConicResult res = solver.solve(p);
    RelaxedResult out;
    out.flow = opf::extract_solution(grid, opf, res);
    out.assignment.u = fleet::Matrix::Zero(A, N);
    for (int a = 0; a < A; ++a)
    {
        for (int j = 0; j < N; ++j)
        {
            if (var(a, j) >= 0)
            {
                out.assignment.u(a, j) = std::clamp(res.x[static_cast<std::size_t>(var(a, j))], 0.0, 1.0);
            }
        }
    }
    out.objective = res.objective;
    return out;
}

double assignment_objective(const grid::Grid& grid, const fleet::Scenario& s, const fleet::Matrix& d,
                            const fleet::Matrix& u, opf::PowerFlowSolution* flow)
{
    const auto sol = opf::solve_opf(grid, opf::Fixed{fleet::aggregate(u)}, s.r_mw, fleet::station_loads(s));
    if (flow)
    {
        *flow = sol;
    }
    return sol.objective_value + fleet::travel_cost(s, d, u);
}

namespace
{

/// Rectangular min-cost assignment (rows <= cols) by the Hungarian method
/// with potentials. Returns the column of each row.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost)
{
    const int n = static_cast<int>(cost.size());
    const int m = n == 0 ? 0 : static_cast<int>(cost[0].size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> v(static_cast<std::size_t>(m + 1), 0.0);
    std::vector<int> match(static_cast<std::size_t>(m + 1), 0);
    std::vector<int> way(static_cast<std::size_t>(m + 1), 0);
    for (int i = 1; i <= n; ++i)
    {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
        std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
        do
        {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j)
            {
                if (used[static_cast<std::size_t>(j)])
                {
                    continue;
                }
                const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                   u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)])
                {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta)
                {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j)
            {
                if (used[static_cast<std::size_t>(j)])
                {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                }
                else
                {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do
        {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j)
    {
        if (match[static_cast<std::size_t>(j)] > 0)
        {
            row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
        }
    }
    return row_to_col;
}

/// Visits every vector n with sum n = total and 0 <= n_j <= limit_j in
/// lexicographic order.
void for_each_composition(const std::vector<int>& limit, int total, const std::function<void(const std::vector<int>&)>& fn)
{
    const int N = static_cast<int>(limit.size());
    std::vector<int> suffix(static_cast<std::size_t>(N + 1), 0);
    for (int j = N - 1; j >= 0; --j)
    {
        suffix[static_cast<std::size_t>(j)] = suffix[static_cast<std::size_t>(j + 1)] + limit[static_cast<std::size_t>(j)];
    }
    std::vector<int> cur(static_cast<std::size_t>(N), 0);
    std::function<void(int, int)> rec = [&](int j, int left) {
        if (j == N)
        {
            if (left == 0)
            {
                fn(cur);
            }
            return;
        }
        const int hi = std::min(limit[static_cast<std::size_t>(j)], left);
        const int lo = std::max(0, left - suffix[static_cast<std::size_t>(j + 1)]);
        for (int k = lo; k <= hi; ++k)
        {
            cur[static_cast<std::size_t>(j)] = k;
            rec(j + 1, left - k);
        }
    };
    rec(0, total);
}

} // namespace

bool min_cost_assignment(const fleet::Scenario& s, const fleet::Matrix& d, const std::vector<int>& counts,
                         std::vector<int>& choice, double& cost)
{
    const int A = s.num_evs();
    std::vector<int> slot_station;
    for (std::size_t j = 0; j < counts.size(); ++j)
    {
        slot_station.insert(slot_station.end(), static_cast<std::size_t>(counts[j]), static_cast<int>(j));
    }
    if (static_cast<int>(slot_station.size()) != A)
    {
        return false;
    }
    // Unreachable pairs get a cost larger than any feasible assignment.
    const double forbidden = 1.0 + s.alpha_per_km * (d.size() > 0 ? d.maxCoeff() : 0.0) * (A + 1) + 1e6;
    std::vector<std::vector<double>> c(static_cast<std::size_t>(A), std::vector<double>(static_cast<std::size_t>(A)));
    for (int a = 0; a < A; ++a)
    {
        const double range = s.evs[static_cast<std::size_t>(a)].range();
        for (int k = 0; k < A; ++k)
        {
            const int j = slot_station[static_cast<std::size_t>(k)];
            c[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] =
                d(a, j) <= range ? s.alpha_per_km * d(a, j) : forbidden;
        }
    }
    const auto match = hungarian(c);
    choice.assign(static_cast<std::size_t>(A), -1);
    cost = 0.0;
    for (int a = 0; a < A; ++a)
    {
        const int j = slot_station[static_cast<std::size_t>(match[static_cast<std::size_t>(a)])];
        if (!(d(a, j) <= s.evs[static_cast<std::size_t>(a)].range()))
        {
            return false;
        }
        choice[static_cast<std::size_t>(a)] = j;
        cost += s.alpha_per_km * d(a, j);
    }
    return true;
}

EnumerationResult enumerate_binary(const grid::Grid& grid, const fleet::Scenario& s, long cap,
                                   const conic::ConicSolver& solver)
{
    fleet::check_capacity(s);
    const auto d = fleet::distances(s.evs, s.stations);
    const auto mask = fleet::reachability(s, d);
    const int A = s.num_evs();
    const int N = s.num_stations();
    const auto loads = fleet::station_loads(s);

    std::vector<int> limit(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j)
    {
        limit[static_cast<std::size_t>(j)] =
            std::min(s.stations[static_cast<std::size_t>(j)].available, static_cast<int>(mask.col(j).count()));
    }
    long vectors = 0;
    for_each_composition(limit, A, [&vectors](const std::vector<int>&) { ++vectors; });
    if (vectors > cap)
    {
        throw Error(ErrorKind::TooLarge, "enumeration needs " + std::to_string(vectors) +
                                             " aggregate vectors, cap is " + std::to_string(cap));
    }

    EnumerationResult out;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_choice;
    for_each_composition(limit, A, [&](const std::vector<int>& counts) {
        ++out.assignments_seen;
        std::vector<int> choice;
        double travel = 0.0;
        if (!min_cost_assignment(s, d, counts, choice, travel))
        {
            return;
        }
        std::vector<double> agg(counts.begin(), counts.end());
        opf::PowerFlowSolution flow;
        try
        {
            flow = opf::solve_opf(grid, opf::build_opf(grid, opf::Fixed{agg}, s.r_mw, loads), solver);
        }
        catch (const Error& e)
        {
            if (e.kind() == ErrorKind::Infeasible)
            {
                ++out.opf_solves;
                return;
            }
            throw;
        }
        ++out.opf_solves;
        const double total = flow.objective_value + travel;
        if (total < best)
        {
            best = total;
            best_choice = choice;
            out.flow = flow;
        }
    });
    if (best_choice.empty() && A > 0)
    {
        throw Error(ErrorKind::CapacityInfeasible, "no feasible binary assignment");
    }
    out.objective = A > 0 ? best : 0.0;
    out.best.mode = fleet::Mode::Binary;
    out.best.u = fleet::Matrix::Zero(A, N);
    for (int a = 0; a < A; ++a)
    {
        out.best.u(a, best_choice[static_cast<std::size_t>(a)]) = 1.0;
    }
    return out;
}

RoundingGap rounding_gap(const grid::Grid& grid, const fleet::Scenario& s, const fleet::Assignment& relaxed,
                         const EnumerationResult& best)
{
    const auto d = fleet::distances(s.evs, s.stations);
    RoundingGap gap;
    gap.rounded = fleet::discretize(relaxed, s, d);
    gap.rounded_objective = assignment_objective(grid, s, d, gap.rounded.u);
    gap.best_objective = best.objective;
    gap.gap = (gap.rounded_objective - gap.best_objective) / std::abs(gap.best_objective);
    return gap;
}

RoundingGap rounding_gap(const grid::Grid& grid, const fleet::Scenario& s, const fleet::Assignment& relaxed, long cap)
{
    return rounding_gap(grid, s, relaxed, enumerate_binary(grid, s, cap));
}

} // namespace swapgrid::oracle
