#pragma once

// ADMM between the utility company (x-update on the OPF with the augmented
// penalty) and the station operator (u-update and multiplier step).

#include "swapgrid/fleet.hpp"
#include "swapgrid/grid.hpp"
#include "swapgrid/opf.hpp"

#include <iosfwd>
#include <vector>

namespace swapgrid::admm
{

struct AdmmParams
{
    double rho = 1.0;        // $/MW^2
    int max_iters = 500;
    double eps_primal = 0.0; // MW; 0 means 1e-4 * r
    double eps_obj = 1e-6;
};

struct AdmmRecord
{
    int iter = 0;
    std::vector<double> lambda; // after the update of this iteration, $/MW
    std::vector<double> w;      // MW
    std::vector<double> uj;     // aggregate assignment
    double residual = 0.0;      // max_j |w_j - r (M_j - m_j + u_j)|, MW
    double objective = 0.0;     // f(x) + g(u), $
};

struct AdmmTrace
{
    std::vector<int> station_buses;
    std::vector<AdmmRecord> records;
};

struct AdmmResult
{
    opf::PowerFlowSolution flow;
    fleet::Assignment assignment;
    AdmmTrace trace;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
    double objective = 0.0;
};

/// lambda_j += rho (w_j - r (M_j - m_j + u_j)).
void lambda_step(std::vector<double>& lambda, double rho, const std::vector<double>& w,
                 const std::vector<opf::StationLoad>& loads, double r_mw, const std::vector<double>& uj);

/// max_j |w_j - r (M_j - m_j + u_j)|.
double consensus_residual(const std::vector<double>& w, const std::vector<opf::StationLoad>& loads, double r_mw,
                          const std::vector<double>& uj);

/// u(0) = nearest reachable station for every EV (capacity ignored, lowest
/// index on ties); lambda(0) = 0.
std::pair<fleet::Assignment, std::vector<double>> initialize(const fleet::Scenario& s, const fleet::Matrix& d);

/// Utility side: owns the feeder; sees only aggregates u_j and the station
/// loads it meters. Keeps its own copy of lambda, advanced with the same
/// rule as the operator's.
class Utility
{
public:
    Utility(const grid::Grid& grid, std::vector<opf::StationLoad> loads, double r_mw, double rho,
            const conic::ConicSolver& solver);

    /// x-update for aggregates u_j(n) and the current lambda(n); returns w(n+1).
    const std::vector<double>& x_update(const std::vector<double>& uj);
    /// Mirrors the operator's multiplier step once u_j(n+1) is known.
    void lambda_update(const std::vector<double>& uj);

    const opf::PowerFlowSolution& flow() const { return flow_; }
    const std::vector<double>& lambda() const { return lambda_; }

private:
    const grid::Grid& grid_;
    std::vector<opf::StationLoad> loads_;
    double r_mw_;
    double rho_;
    const conic::ConicSolver& solver_;
    std::vector<double> lambda_;
    opf::PowerFlowSolution flow_;
};

/// Station-operator side: owns the fleet data and the assignment.
class Operator
{
public:
    Operator(const fleet::Scenario& s, double rho, const conic::ConicSolver& solver);

    /// Initial assignment; returns the aggregates u_j(0).
    std::vector<double> start();
    /// u-update with w(n+1) and lambda(n), then the multiplier step; returns
    /// u_j(n+1).
    std::vector<double> step(const std::vector<double>& w);

    const fleet::Assignment& assignment() const { return u_; }
    const std::vector<double>& lambda() const { return lambda_; }
    const std::vector<opf::StationLoad>& loads() const { return loads_; }
    double travel_cost() const;

private:
    const fleet::Scenario& s_;
    fleet::Matrix d_;
    std::vector<opf::StationLoad> loads_;
    double rho_;
    const conic::ConicSolver& solver_;
    fleet::Assignment u_;
    std::vector<double> lambda_;
};

/// Observes one iteration and decides when to stop; tracks the best-residual
/// iterate for the non-convergent case.
class Monitor
{
public:
    Monitor(const AdmmParams& params, double r_mw);

    /// Returns true when the stopping rule holds.
    bool observe(AdmmRecord record, const opf::PowerFlowSolution& flow, const fleet::Assignment& u);

    AdmmResult finish(std::vector<int> station_buses, int iterations) &&;

private:
    double eps_primal_;
    double eps_obj_;
    AdmmTrace trace_;
    bool converged_ = false;
    double best_residual_;
    opf::PowerFlowSolution best_flow_;
    fleet::Assignment best_u_;
    double best_objective_ = 0.0;
    opf::PowerFlowSolution last_flow_;
    fleet::Assignment last_u_;
};

AdmmResult run_admm(const grid::Grid& grid, const fleet::Scenario& s, const AdmmParams& params = {},
                    const conic::ConicSolver& solver = conic::InteriorPointSolver{});

/// iter, lambda_<bus>..., w_<bus>..., uj_<bus>..., residual, objective
void write_trace_csv(const AdmmTrace& trace, std::ostream& out);

} // namespace swapgrid::admm
