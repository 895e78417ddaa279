#include "swapgrid/dualdecomp.hpp"

#include "swapgrid/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace swapgrid::dual
{

double step_size(double rho0, int n)
{
    return rho0 / std::sqrt(static_cast<double>(n) + 1.0);
}

Utility::Utility(const grid::Grid& grid, std::vector<opf::StationLoad> loads, double r_mw, int window,
                 const conic::ConicSolver& solver)
    : grid_(grid), loads_(std::move(loads)), r_mw_(r_mw), window_(static_cast<std::size_t>(std::max(window, 1))),
      solver_(solver)
{
}

const std::vector<double>& Utility::respond(const std::vector<double>& lambda)
{
    auto problem = opf::build_opf(grid_, opf::LinearPrice{lambda}, r_mw_, loads_);
    flow_ = opf::solve_opf(grid_, problem, solver_);
    recent_w_.push_back(flow_.w);
    if (recent_w_.size() > window_)
    {
        recent_w_.pop_front();
    }
    return flow_.w;
}

std::vector<double> Utility::average_w() const
{
    std::vector<double> avg(loads_.size(), 0.0);
    for (const auto& w : recent_w_)
    {
        for (std::size_t j = 0; j < avg.size(); ++j)
        {
            avg[j] += w[j];
        }
    }
    for (double& v : avg)
    {
        v /= static_cast<double>(std::max<std::size_t>(recent_w_.size(), 1));
    }
    return avg;
}

opf::PowerFlowSolution Utility::dispatch_average() const
{
    const auto w = average_w();
    std::vector<double> u(w.size());
    for (std::size_t j = 0; j < w.size(); ++j)
    {
        u[j] = (w[j] - loads_[j].base_mw) / r_mw_;
    }
    auto problem = opf::build_opf(grid_, opf::Fixed{u}, r_mw_, loads_);
    return opf::solve_opf(grid_, problem, solver_);
}

EvAgent::EvAgent(const fleet::Ev& ev, const std::vector<fleet::Station>& stations, double alpha, double r_mw)
    : d_(fleet::distances({ev}, stations).row(0)), range_(ev.range()), alpha_(alpha), r_mw_(r_mw)
{
}

int EvAgent::respond(const std::vector<double>& lambda, const std::vector<double>& mu) const
{
    return fleet::ev_best_response(range_, d_, lambda, mu, alpha_, r_mw_);
}

double EvAgent::value(const std::vector<double>& lambda, const std::vector<double>& mu) const
{
    const int j = respond(lambda, mu);
    const auto k = static_cast<std::size_t>(j);
    return alpha_ * d_[j] - r_mw_ * lambda[k] + mu[k];
}

Operator::Operator(const fleet::Scenario& s, const DualParams& params)
    : s_(s), params_(params), loads_(fleet::station_loads(s)), lambda_(s.stations.size(), 0.0),
      mu_(s.stations.size(), 0.0)
{
}

std::vector<double> Operator::update(int n, const std::vector<double>& w, const std::vector<int>& choices)
{
    std::vector<double> uj(s_.stations.size(), 0.0);
    for (int j : choices)
    {
        uj[static_cast<std::size_t>(j)] += 1.0;
    }
    recent_choices_.push_back(choices);
    if (recent_choices_.size() > static_cast<std::size_t>(std::max(params_.window, 1)))
    {
        recent_choices_.pop_front();
    }
    const double step1 = step_size(params_.rho1, n);
    const double step2 = step_size(params_.rho2, n);
    for (std::size_t j = 0; j < uj.size(); ++j)
    {
        lambda_[j] += step1 * (w[j] - opf::station_load_mw(loads_[j], s_.r_mw, uj[j]));
        mu_[j] = std::max(0.0, mu_[j] + step2 * (uj[j] - s_.stations[j].available));
    }
    return uj;
}

fleet::Assignment Operator::average_assignment() const
{
    fleet::Assignment out{fleet::Matrix::Zero(s_.num_evs(), s_.num_stations()), fleet::Mode::Relaxed};
    if (recent_choices_.empty())
    {
        return out;
    }
    const double weight = 1.0 / static_cast<double>(recent_choices_.size());
    for (const auto& choices : recent_choices_)
    {
        for (std::size_t a = 0; a < choices.size(); ++a)
        {
            out.u(static_cast<Eigen::Index>(a), choices[a]) += weight;
        }
    }
    repair_capacity(out.u);
    fleet::purify(out.u, fleet::distances(s_.evs, s_.stations));
    return out;
}

void Operator::repair_capacity(fleet::Matrix& u) const
{
    // The window average can overfill a station by a fraction of an EV.
    // Shift the excess to reachable stations with room, cheapest detour first.
    const auto d = fleet::distances(s_.evs, s_.stations);
    auto load = fleet::aggregate(u);
    for (int j = 0; j < s_.num_stations(); ++j)
    {
        double excess = load[static_cast<std::size_t>(j)] - s_.stations[static_cast<std::size_t>(j)].available;
        while (excess > 1e-12)
        {
            int best_a = -1;
            int best_k = -1;
            double best_cost = std::numeric_limits<double>::infinity();
            for (int a = 0; a < s_.num_evs(); ++a)
            {
                if (u(a, j) <= 0.0)
                {
                    continue;
                }
                for (int k : fleet::feasible_stations(s_.evs[static_cast<std::size_t>(a)].range(), d.row(a)))
                {
                    const double room = s_.stations[static_cast<std::size_t>(k)].available - load[static_cast<std::size_t>(k)];
                    if (k != j && room > 1e-12 && d(a, k) - d(a, j) < best_cost)
                    {
                        best_cost = d(a, k) - d(a, j);
                        best_a = a;
                        best_k = k;
                    }
                }
            }
            if (best_a < 0)
            {
                break;
            }
            const auto k = static_cast<std::size_t>(best_k);
            const double moved =
                std::min({excess, u(best_a, j), s_.stations[k].available - load[k]});
            u(best_a, j) -= moved;
            u(best_a, best_k) += moved;
            load[static_cast<std::size_t>(j)] -= moved;
            load[k] += moved;
            excess -= moved;
        }
    }
}

double Operator::price_constant(const std::vector<double>& lambda, const std::vector<double>& mu) const
{
    double c = 0.0;
    for (std::size_t j = 0; j < lambda.size(); ++j)
    {
        c -= lambda[j] * loads_[j].base_mw + mu[j] * s_.stations[j].available;
    }
    return c;
}

Monitor::Monitor(const DualParams& params, double r_mw)
    : params_(params), eps_primal_(params.eps_primal > 0.0 ? params.eps_primal : 0.02 * r_mw),
      best_(-std::numeric_limits<double>::infinity())
{
}

bool Monitor::observe(DualRecord record)
{
    best_ = std::max(best_, record.dual_value);
    const int span = std::max(params_.stall_span, 1);
    trace_.records.push_back(std::move(record));
    const auto n = static_cast<int>(trace_.records.size());
    double sum = 0.0;
    const int from = std::max(0, n - span);
    for (int i = from; i < n; ++i)
    {
        sum += trace_.records[static_cast<std::size_t>(i)].dual_value;
    }
    smoothed_.push_back(sum / (n - from));
    // Wait for a full averaging window before testing for a stall.
    if (n < std::max(params_.window, 2 * span))
    {
        return false;
    }
    const double now = smoothed_.back();
    const double before = smoothed_[static_cast<std::size_t>(n - 1 - span)];
    if (std::abs(now - before) > params_.eps_obj * std::max(std::abs(now), 1e-12))
    {
        return false;
    }
    // Window averages of the load mismatch and of the capacity slack; the
    // latter against the latest mu for complementary slackness.
    const int k = std::min(n, std::max(params_.window, 1));
    const auto& last = trace_.records.back();
    std::vector<double> mismatch(last.viol_w.size(), 0.0);
    std::vector<double> slack(last.viol_cap.size(), 0.0);
    for (int i = n - k; i < n; ++i)
    {
        const auto& r = trace_.records[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < mismatch.size(); ++j)
        {
            mismatch[j] += r.viol_w[j] / k;
            slack[j] += r.viol_cap[j] / k;
        }
    }
    double worst = 0.0;
    double cs = 0.0;
    for (std::size_t j = 0; j < mismatch.size(); ++j)
    {
        worst = std::max(worst, std::abs(mismatch[j]));
        cs = std::max(cs, std::abs(last.mu[j] * slack[j]));
    }
    converged_ = worst <= eps_primal_ && cs <= params_.eps_cs;
    return converged_;
}

DualTrace Monitor::take_trace(std::vector<int> station_buses)
{
    trace_.station_buses = std::move(station_buses);
    return std::move(trace_);
}

DualResult finish(const fleet::Scenario& s, const Utility& util, const Operator& op, Monitor& monitor,
                  int iterations)
{
    DualResult out;
    out.converged = monitor.converged();
    out.iterations = iterations;
    out.dual_value = monitor.best_value();
    out.flow = util.dispatch_average();
    out.assignment = op.average_assignment();
    const auto d = fleet::distances(s.evs, s.stations);
    out.objective = out.flow.generation_cost + fleet::travel_cost(s, d, out.assignment.u);
    const auto ubar = fleet::aggregate(out.assignment.u);
    const auto wbar = util.average_w();
    // Prices of the last completed round; the stopping rule judged these.
    const auto& last = monitor.last();
    out.lambda = last.lambda;
    out.mu = last.mu;
    for (std::size_t j = 0; j < ubar.size(); ++j)
    {
        out.residual = std::max(out.residual, std::abs(wbar[j] - opf::station_load_mw(op.loads()[j], s.r_mw, ubar[j])));
        out.complementarity =
            std::max(out.complementarity, std::abs(out.mu[j] * (ubar[j] - s.stations[j].available)));
    }
    std::vector<int> buses;
    for (const auto& st : s.stations)
    {
        buses.push_back(st.bus);
    }
    out.trace = monitor.take_trace(std::move(buses));
    return out;
}

double dual_value(const grid::Grid& grid, const fleet::Scenario& s, const std::vector<double>& lambda,
                  const std::vector<double>& mu, const conic::ConicSolver& solver)
{
    if (lambda.size() != s.stations.size() || mu.size() != s.stations.size())
    {
        throw Error(ErrorKind::InvalidArgument, "dual_value: lambda and mu need one entry per station");
    }
    Utility util(grid, fleet::station_loads(s), s.r_mw, 1, solver);
    util.respond(lambda);
    double value = util.value();
    for (const auto& ev : s.evs)
    {
        value += EvAgent(ev, s.stations, s.alpha_per_km, s.r_mw).value(lambda, mu);
    }
    Operator op(s, DualParams{});
    return value + op.price_constant(lambda, mu);
}

DualResult run_dual(const grid::Grid& grid, const fleet::Scenario& s, const DualParams& params,
                    const conic::ConicSolver& solver)
{
    if (!(params.rho1 > 0.0) || !(params.rho2 > 0.0))
    {
        throw Error(ErrorKind::InvalidArgument, "step scales must be positive");
    }
    if (params.max_iters < 1)
    {
        throw Error(ErrorKind::InvalidArgument, "max_iters must be at least 1");
    }
    fleet::check_against_grid(s, grid);
    fleet::check_capacity(s);

    Operator op(s, params);
    Utility util(grid, op.loads(), s.r_mw, params.window, solver);
    std::vector<EvAgent> evs;
    evs.reserve(s.evs.size());
    for (const auto& ev : s.evs)
    {
        evs.emplace_back(ev, s.stations, s.alpha_per_km, s.r_mw);
    }
    Monitor monitor(params, s.r_mw);

    int n = 0;
    std::vector<int> choices(s.evs.size());
    while (n < params.max_iters)
    {
        const std::vector<double> lambda = op.lambda();
        const std::vector<double> mu = op.mu();
        const auto& w = util.respond(lambda);
        double value = util.value() + op.price_constant(lambda, mu);
        for (std::size_t a = 0; a < evs.size(); ++a)
        {
            choices[a] = evs[a].respond(lambda, mu);
            value += evs[a].value(lambda, mu);
        }
        const auto uj = op.update(n, w, choices);

        DualRecord rec;
        rec.iter = n;
        rec.lambda = lambda;
        rec.mu = mu;
        rec.uj = uj;
        rec.w = w;
        rec.dual_value = value;
        for (std::size_t j = 0; j < uj.size(); ++j)
        {
            rec.viol_w.push_back(w[j] - opf::station_load_mw(op.loads()[j], s.r_mw, uj[j]));
            rec.viol_cap.push_back(uj[j] - s.stations[j].available);
        }
        ++n;
        if (monitor.observe(std::move(rec)))
        {
            break;
        }
    }
    return finish(s, util, op, monitor, n);
}

void write_trace_csv(const DualTrace& trace, std::ostream& out)
{
    out << "iter";
    for (const char* prefix : {"lambda_", "mu_", "uj_"})
    {
        for (int b : trace.station_buses)
        {
            out << ',' << prefix << b;
        }
    }
    out << ",dualvalue";
    for (const char* prefix : {"viol_w_", "viol_cap_"})
    {
        for (int b : trace.station_buses)
        {
            out << ',' << prefix << b;
        }
    }
    out << '\n';
    const auto old = out.precision(17);
    for (const auto& r : trace.records)
    {
        out << r.iter;
        for (const auto* v : {&r.lambda, &r.mu, &r.uj})
        {
            for (double x : *v)
            {
                out << ',' << x;
            }
        }
        out << ',' << r.dual_value;
        for (const auto* v : {&r.viol_w, &r.viol_cap})
        {
            for (double x : *v)
            {
                out << ',' << x;
            }
        }
        out << '\n';
    }
    out.precision(old);
}

} // namespace swapgrid::dual
