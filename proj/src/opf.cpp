#include "swapgrid/opf.hpp"

#include "swapgrid/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace swapgrid::opf
{

using conic::AffineExpr;
using conic::ConicProblem;

namespace
{

std::string bus_tag(int id)
{
    return std::to_string(id);
}

void check_size(std::size_t got, std::size_t want, const char* what)
{
    if (got != want)
    {
        throw Error(ErrorKind::InvalidArgument, std::string("coupling: ") + what + " has " + std::to_string(got) +
                                                    " entries, expected " + std::to_string(want));
    }
}

} // namespace

OpfProblem build_opf(const grid::Grid& grid, const Coupling& coupling, double r_mw,
                     const std::vector<StationLoad>& stations)
{
    OpfProblem out;
    out.stations = stations;
    ConicProblem& p = out.problem;
    OpfLayout& lay = out.layout;
    const int n = grid.num_buses();
    const int e = grid.num_lines();
    const double base = grid.base_mva;
    const int root = grid.index_of(grid.root);

    std::unordered_map<int, int> station_at; // bus index -> station slot
    for (std::size_t k = 0; k < stations.size(); ++k)
    {
        const int bi = grid.index_of(stations[k].bus);
        if (!grid.buses[static_cast<std::size_t>(bi)].station_id)
        {
            throw Error(ErrorKind::InvalidArgument, "bus " + bus_tag(stations[k].bus) + " has no station");
        }
        if (!station_at.emplace(bi, static_cast<int>(k)).second)
        {
            throw Error(ErrorKind::InvalidArgument, "two stations at bus " + bus_tag(stations[k].bus));
        }
    }

    lay.v.assign(static_cast<std::size_t>(n), -1);
    lay.pg.assign(static_cast<std::size_t>(n), -1);
    lay.qg.assign(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i)
    {
        const auto& b = grid.buses[static_cast<std::size_t>(i)];
        const std::string tag = bus_tag(b.id);
        if (i == root)
        {
            lay.v[static_cast<std::size_t>(i)] = p.add_variable("v_" + tag, grid.v_root, grid.v_root);
        }
        else
        {
            lay.v[static_cast<std::size_t>(i)] = p.add_variable("v_" + tag, b.v_min, b.v_max);
        }
        if (b.generator)
        {
            const auto& g = *b.generator;
            const int pg = p.add_variable("pg_" + tag, g.p_min, g.p_max);
            const int qg = p.add_variable("qg_" + tag, g.q_min, g.q_max);
            lay.pg[static_cast<std::size_t>(i)] = pg;
            lay.qg[static_cast<std::size_t>(i)] = qg;
            p.add_cost(pg, g.cost_linear);
            if (g.cost_quadratic > 0.0)
            {
                const int t = p.add_variable("pg2_" + tag);
                p.add_quadratic_epigraph({AffineExpr().add(pg, 1.0)}, t);
                p.add_cost(t, g.cost_quadratic);
            }
        }
    }

    lay.P.resize(static_cast<std::size_t>(e));
    lay.Q.resize(static_cast<std::size_t>(e));
    lay.l.resize(static_cast<std::size_t>(e));
    std::vector<int> upstream(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<int>> downstream(static_cast<std::size_t>(n));
    for (int k = 0; k < e; ++k)
    {
        const auto& ln = grid.lines[static_cast<std::size_t>(k)];
        const std::string tag = bus_tag(ln.from) + "_" + bus_tag(ln.to);
        lay.P[static_cast<std::size_t>(k)] = p.add_variable("P_" + tag);
        lay.Q[static_cast<std::size_t>(k)] = p.add_variable("Q_" + tag);
        lay.l[static_cast<std::size_t>(k)] = p.add_variable("l_" + tag, 0.0);
        upstream[static_cast<std::size_t>(grid.index_of(ln.to))] = k;
        downstream[static_cast<std::size_t>(grid.index_of(ln.from))].push_back(k);
    }

    lay.w.resize(stations.size());
    for (std::size_t k = 0; k < stations.size(); ++k)
    {
        lay.w[k] = p.add_variable("w_" + bus_tag(stations[k].bus));
    }

    // Station coupling. w is in pu; prices and penalties are stated in MW.
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, Fixed>)
            {
                check_size(c.u.size(), stations.size(), "u");
                for (std::size_t k = 0; k < stations.size(); ++k)
                {
                    const double load = station_load_mw(stations[k], r_mw, c.u[k]) / base;
                    p.set_bounds(lay.w[k], load, load);
                }
            }
            else if constexpr (std::is_same_v<T, LinearPrice>)
            {
                check_size(c.lambda.size(), stations.size(), "lambda");
                for (std::size_t k = 0; k < stations.size(); ++k)
                {
                    p.set_bounds(lay.w[k], stations[k].base_mw / base, stations[k].rated_mw / base);
                    p.add_cost(lay.w[k], c.lambda[k] * base);
                }
            }
            else
            {
                check_size(c.lambda.size(), stations.size(), "lambda");
                check_size(c.targets.size(), stations.size(), "targets");
                if (!(c.rho > 0.0))
                {
                    throw Error(ErrorKind::InvalidArgument, "coupling: rho must be positive");
                }
                for (std::size_t k = 0; k < stations.size(); ++k)
                {
                    const double target = station_load_mw(stations[k], r_mw, c.targets[k]) / base;
                    // lambda (w - target) in $, with w in pu
                    p.add_cost(lay.w[k], c.lambda[k] * base);
                    p.add_cost_constant(-c.lambda[k] * base * target);
                    const int s = p.add_variable("pen_" + bus_tag(stations[k].bus));
                    p.add_quadratic_epigraph({AffineExpr(-target).add(lay.w[k], 1.0)}, s);
                    p.add_cost(s, 0.5 * c.rho * base * base);
                }
            }
        },
        coupling);

    // Power balance at every bus: upstream flow minus losses plus injection
    // equals the sum of downstream flows.
    for (int i = 0; i < n; ++i)
    {
        const auto& b = grid.buses[static_cast<std::size_t>(i)];
        AffineExpr pb(-b.p_bg);
        AffineExpr qb(-b.q_bg);
        if (const int k = upstream[static_cast<std::size_t>(i)]; k >= 0)
        {
            const auto& ln = grid.lines[static_cast<std::size_t>(k)];
            pb.add(lay.P[static_cast<std::size_t>(k)], 1.0).add(lay.l[static_cast<std::size_t>(k)], -ln.r);
            qb.add(lay.Q[static_cast<std::size_t>(k)], 1.0).add(lay.l[static_cast<std::size_t>(k)], -ln.x);
        }
        for (int k : downstream[static_cast<std::size_t>(i)])
        {
            pb.add(lay.P[static_cast<std::size_t>(k)], -1.0);
            qb.add(lay.Q[static_cast<std::size_t>(k)], -1.0);
        }
        if (lay.pg[static_cast<std::size_t>(i)] >= 0)
        {
            pb.add(lay.pg[static_cast<std::size_t>(i)], 1.0);
            qb.add(lay.qg[static_cast<std::size_t>(i)], 1.0);
        }
        if (const auto it = station_at.find(i); it != station_at.end())
        {
            pb.add(lay.w[static_cast<std::size_t>(it->second)], -1.0);
        }
        p.add_equality(std::move(pb));
        p.add_equality(std::move(qb));
    }

    for (int k = 0; k < e; ++k)
    {
        const auto& ln = grid.lines[static_cast<std::size_t>(k)];
        const int vf = lay.v[static_cast<std::size_t>(grid.index_of(ln.from))];
        const int vt = lay.v[static_cast<std::size_t>(grid.index_of(ln.to))];
        const int P = lay.P[static_cast<std::size_t>(k)];
        const int Q = lay.Q[static_cast<std::size_t>(k)];
        const int l = lay.l[static_cast<std::size_t>(k)];
        // v_to = v_from - 2 (r P + x Q) + |z|^2 l
        p.add_equality(AffineExpr()
                           .add(vt, 1.0)
                           .add(vf, -1.0)
                           .add(P, 2.0 * ln.r)
                           .add(Q, 2.0 * ln.x)
                           .add(l, -(ln.r * ln.r + ln.x * ln.x)));
        // v_from l >= P^2 + Q^2  <=>  || (2P, 2Q, v_from - l) || <= v_from + l
        p.add_second_order({AffineExpr().add(vf, 1.0).add(l, 1.0), AffineExpr().add(P, 2.0), AffineExpr().add(Q, 2.0),
                            AffineExpr().add(vf, 1.0).add(l, -1.0)});
        p.add_second_order({AffineExpr(ln.s_max), AffineExpr().add(P, 1.0), AffineExpr().add(Q, 1.0)});
    }
    return out;
}

PowerFlowSolution extract_solution(const grid::Grid& grid, const OpfProblem& opf, const conic::ConicResult& res)
{
    if (res.status == conic::SolveStatus::Infeasible)
    {
        throw Error(ErrorKind::Infeasible, "OPF infeasible: " + res.message);
    }
    if (res.status != conic::SolveStatus::Optimal)
    {
        std::ostringstream msg;
        msg << "OPF solve failed (" << conic::to_string(res.status) << ") after " << res.iterations
            << " iterations (" << res.message << "): pres=" << res.primal_residual << " dres=" << res.dual_residual << " gap=" << res.gap;
        throw Error(ErrorKind::NumericalFailure, msg.str());
    }
    const OpfLayout& lay = opf.layout;
    const auto pick = [&res](const std::vector<int>& idx) {
        std::vector<double> out(idx.size(), 0.0);
        for (std::size_t i = 0; i < idx.size(); ++i)
        {
            if (idx[i] >= 0)
            {
                out[i] = res.x[static_cast<std::size_t>(idx[i])];
            }
        }
        return out;
    };
    PowerFlowSolution sol;
    sol.v = pick(lay.v);
    sol.l = pick(lay.l);
    sol.P = pick(lay.P);
    sol.Q = pick(lay.Q);
    sol.pg = pick(lay.pg);
    sol.qg = pick(lay.qg);
    sol.w = pick(lay.w);
    for (double& w : sol.w)
    {
        w *= grid.base_mva;
    }
    sol.objective_value = res.objective;
    sol.generation_cost = generation_cost(grid, sol);
    sol.solver_iterations = res.iterations;
    return sol;
}

PowerFlowSolution solve_opf(const grid::Grid& grid, const OpfProblem& opf, const conic::ConicSolver& solver)
{
    return extract_solution(grid, opf, solver.solve(opf.problem));
}

PowerFlowSolution solve_opf(const grid::Grid& grid, const Coupling& coupling, double r_mw,
                            const std::vector<StationLoad>& stations)
{
    return solve_opf(grid, build_opf(grid, coupling, r_mw, stations), conic::InteriorPointSolver{});
}

ExactnessReport exactness_residuals(const grid::Grid& grid, const PowerFlowSolution& sol, double tolerance)
{
    if (sol.l.size() != grid.lines.size() || sol.v.size() != grid.buses.size())
    {
        throw Error(ErrorKind::InvalidArgument, "solution does not match the grid");
    }
    ExactnessReport rep;
    double scale = 0.0;
    for (std::size_t k = 0; k < grid.lines.size(); ++k)
    {
        const double v = sol.v[static_cast<std::size_t>(grid.index_of(grid.lines[k].from))];
        const double vl = v * sol.l[k];
        rep.residual.push_back(vl - (sol.P[k] * sol.P[k] + sol.Q[k] * sol.Q[k]));
        scale = std::max(scale, std::abs(vl));
    }
    scale = std::max(scale, 1e-12);
    for (double r : rep.residual)
    {
        rep.relative_residual.push_back(r / scale);
        rep.max_relative = std::max(rep.max_relative, r / scale);
    }
    rep.exact = rep.max_relative <= tolerance;
    return rep;
}

double generation_cost(const grid::Grid& grid, const PowerFlowSolution& sol)
{
    double cost = 0.0;
    for (std::size_t i = 0; i < grid.buses.size(); ++i)
    {
        if (grid.buses[i].generator)
        {
            cost += grid.buses[i].generator->cost(sol.pg.at(i));
        }
    }
    return cost;
}

double max_violation(const grid::Grid& grid, const PowerFlowSolution& sol, const std::vector<StationLoad>& stations)
{
    const int n = grid.num_buses();
    const double base = grid.base_mva;
    double worst = 0.0;
    auto note = [&worst](double v) { worst = std::max(worst, v); };

    std::vector<double> pnet(static_cast<std::size_t>(n));
    std::vector<double> qnet(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
    {
        const auto& b = grid.buses[static_cast<std::size_t>(i)];
        pnet[static_cast<std::size_t>(i)] = sol.pg[static_cast<std::size_t>(i)] - b.p_bg;
        qnet[static_cast<std::size_t>(i)] = sol.qg[static_cast<std::size_t>(i)] - b.q_bg;
        if (b.generator)
        {
            const auto& g = *b.generator;
            note(g.p_min - sol.pg[static_cast<std::size_t>(i)]);
            note(sol.pg[static_cast<std::size_t>(i)] - g.p_max);
            note(g.q_min - sol.qg[static_cast<std::size_t>(i)]);
            note(sol.qg[static_cast<std::size_t>(i)] - g.q_max);
        }
        if (grid.buses[static_cast<std::size_t>(i)].id == grid.root)
        {
            note(std::abs(sol.v[static_cast<std::size_t>(i)] - grid.v_root));
        }
        else
        {
            note(b.v_min - sol.v[static_cast<std::size_t>(i)]);
            note(sol.v[static_cast<std::size_t>(i)] - b.v_max);
        }
    }
    for (std::size_t k = 0; k < stations.size(); ++k)
    {
        pnet[static_cast<std::size_t>(grid.index_of(stations[k].bus))] -= sol.w[k] / base;
    }
    std::vector<double> balance_p = pnet;
    std::vector<double> balance_q = qnet;
    for (std::size_t k = 0; k < grid.lines.size(); ++k)
    {
        const auto& ln = grid.lines[k];
        const auto f = static_cast<std::size_t>(grid.index_of(ln.from));
        const auto t = static_cast<std::size_t>(grid.index_of(ln.to));
        balance_p[t] += sol.P[k] - ln.r * sol.l[k];
        balance_q[t] += sol.Q[k] - ln.x * sol.l[k];
        balance_p[f] -= sol.P[k];
        balance_q[f] -= sol.Q[k];
        note(std::abs(sol.v[t] - sol.v[f] + 2.0 * (ln.r * sol.P[k] + ln.x * sol.Q[k]) -
                      (ln.r * ln.r + ln.x * ln.x) * sol.l[k]));
        note(sol.P[k] * sol.P[k] + sol.Q[k] * sol.Q[k] - sol.v[f] * sol.l[k]);
        note(std::hypot(sol.P[k], sol.Q[k]) - ln.s_max);
        note(-sol.l[k]);
    }
    for (int i = 0; i < n; ++i)
    {
        note(std::abs(balance_p[static_cast<std::size_t>(i)]));
        note(std::abs(balance_q[static_cast<std::size_t>(i)]));
    }
    return worst;
}

} // namespace swapgrid::opf
