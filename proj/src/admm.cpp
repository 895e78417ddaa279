#include "swapgrid/admm.hpp"

#include "swapgrid/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace swapgrid::admm
{

void lambda_step(std::vector<double>& lambda, double rho, const std::vector<double>& w,
                 const std::vector<opf::StationLoad>& loads, double r_mw, const std::vector<double>& uj)
{
    for (size_t j = 0; j < lambda.size(); ++j)
        lambda[j] += rho * (w[j] - opf::station_load_mw(loads[j], r_mw, uj[j]));
}

double consensus_residual(const std::vector<double>& w, const std::vector<opf::StationLoad>& loads, double r_mw,
                          const std::vector<double>& uj)
{
    double res = 0.0;
    for (size_t j = 0; j < w.size(); ++j)
        res = std::max(res, std::abs(w[j] - opf::station_load_mw(loads[j], r_mw, uj[j])));
    return res;
}

std::pair<fleet::Assignment, std::vector<double>> initialize(const fleet::Scenario& s, const fleet::Matrix& d)
{
    fleet::Assignment u{fleet::Matrix::Zero(s.num_evs(), s.num_stations()), fleet::Mode::Binary};
    for (int a = 0; a < s.num_evs(); ++a)
    {
        auto reach = fleet::feasible_stations(s.evs[a].range(), d.row(a));
        int best = reach.front();
        for (int j : reach)
            if (d(a, j) < d(a, best))
                best = j;
        u.u(a, best) = 1.0;
    }
    return {std::move(u), std::vector<double>(s.num_stations(), 0.0)};
}

Utility::Utility(const grid::Grid& grid, std::vector<opf::StationLoad> loads, double r_mw, double rho,
                 const conic::ConicSolver& solver)
    : grid_(grid), loads_(std::move(loads)), r_mw_(r_mw), rho_(rho), solver_(solver),
      lambda_(loads_.size(), 0.0)
{
}

const std::vector<double>& Utility::x_update(const std::vector<double>& uj)
{
    opf::QuadraticPenalty pen{lambda_, rho_, uj};
    auto problem = opf::build_opf(grid_, pen, r_mw_, loads_);
    flow_ = opf::solve_opf(grid_, problem, solver_);
    return flow_.w;
}

void Utility::lambda_update(const std::vector<double>& uj)
{
    lambda_step(lambda_, rho_, flow_.w, loads_, r_mw_, uj);
}

Operator::Operator(const fleet::Scenario& s, double rho, const conic::ConicSolver& solver)
    : s_(s), d_(fleet::distances(s.evs, s.stations)), loads_(fleet::station_loads(s)), rho_(rho), solver_(solver)
{
}

std::vector<double> Operator::start()
{
    fleet::check_capacity(s_);
    auto [u, lambda] = initialize(s_, d_);
    u_ = std::move(u);
    lambda_ = std::move(lambda);
    return fleet::aggregate(u_.u);
}

std::vector<double> Operator::step(const std::vector<double>& w)
{
    u_ = fleet::u_update(s_, d_, w, lambda_, rho_, solver_);
    auto uj = fleet::aggregate(u_.u);
    lambda_step(lambda_, rho_, w, loads_, s_.r_mw, uj);
    return uj;
}

double Operator::travel_cost() const
{
    return fleet::travel_cost(s_, d_, u_.u);
}

Monitor::Monitor(const AdmmParams& params, double r_mw)
    : eps_primal_(params.eps_primal > 0.0 ? params.eps_primal : 1e-4 * r_mw), eps_obj_(params.eps_obj),
      best_residual_(std::numeric_limits<double>::infinity())
{
}

bool Monitor::observe(AdmmRecord record, const opf::PowerFlowSolution& flow, const fleet::Assignment& u)
{
    double prev = trace_.records.empty() ? std::numeric_limits<double>::quiet_NaN() : trace_.records.back().objective;
    if (record.residual < best_residual_)
    {
        best_residual_ = record.residual;
        best_flow_ = flow;
        best_u_ = u;
        best_objective_ = record.objective;
    }
    last_flow_ = flow;
    last_u_ = u;
    bool stop = false;
    if (std::isfinite(prev) && record.residual <= eps_primal_)
    {
        double change = std::abs(record.objective - prev) / std::max(std::abs(prev), 1e-12);
        stop = change <= eps_obj_;
    }
    trace_.records.push_back(std::move(record));
    converged_ = stop;
    return stop;
}

AdmmResult Monitor::finish(std::vector<int> station_buses, int iterations) &&
{
    AdmmResult out;
    trace_.station_buses = std::move(station_buses);
    out.converged = converged_;
    out.iterations = iterations;
    if (converged_)
    {
        out.flow = std::move(last_flow_);
        out.assignment = std::move(last_u_);
        out.residual = trace_.records.back().residual;
        out.objective = trace_.records.back().objective;
    }
    else
    {
        out.flow = std::move(best_flow_);
        out.assignment = std::move(best_u_);
        out.residual = best_residual_;
        out.objective = best_objective_;
    }
    out.trace = std::move(trace_);
    return out;
}

AdmmResult run_admm(const grid::Grid& grid, const fleet::Scenario& s, const AdmmParams& params,
                    const conic::ConicSolver& solver)
{
    if (!(params.rho > 0.0))
        throw Error(ErrorKind::InvalidArgument, "rho must be positive");
    if (params.max_iters < 1)
        throw Error(ErrorKind::InvalidArgument, "max_iters must be at least 1");
    fleet::check_against_grid(s, grid);

    Operator op(s, params.rho, solver);
    Utility util(grid, op.loads(), s.r_mw, params.rho, solver);
    Monitor monitor(params, s.r_mw);

    std::vector<int> buses;
    for (const auto& st : s.stations)
        buses.push_back(st.bus);

    auto uj = op.start();
    int n = 0;
    while (n < params.max_iters)
    {
        const auto& w = util.x_update(uj);
        uj = op.step(w);
        util.lambda_update(uj);
        ++n;

        AdmmRecord rec;
        rec.iter = n;
        rec.lambda = op.lambda();
        rec.w = util.flow().w;
        rec.uj = uj;
        rec.residual = consensus_residual(rec.w, op.loads(), s.r_mw, uj);
        rec.objective = util.flow().generation_cost + op.travel_cost();
        if (monitor.observe(std::move(rec), util.flow(), op.assignment()))
            break;
    }
    return std::move(monitor).finish(std::move(buses), n);
}

void write_trace_csv(const AdmmTrace& trace, std::ostream& out)
{
    out << "iter";
    for (const char* prefix : {"lambda_", "w_", "uj_"})
        for (int b : trace.station_buses)
            out << ',' << prefix << b;
    out << ",residual,objective\n";
    auto old = out.precision(17);
    for (const auto& r : trace.records)
    {
        out << r.iter;
        for (const auto* v : {&r.lambda, &r.w, &r.uj})
            for (double x : *v)
                out << ',' << x;
        out << ',' << r.residual << ',' << r.objective << '\n';
    }
    out.precision(old);
}

} // namespace swapgrid::admm
