#pragma once

// Dual decomposition: the operator prices station load (lambda) and battery
// capacity (mu); the utility answers with its station loads, each EV with
// its cheapest station. Prices move along projected subgradients with
// diminishing steps; primal estimates come from averaging late iterates.

#include "swapgrid/fleet.hpp"
#include "swapgrid/grid.hpp"
#include "swapgrid/opf.hpp"

#include <deque>
#include <iosfwd>
#include <vector>

namespace swapgrid::dual
{

struct DualParams
{
    double rho1 = 50.0; // lambda step scale, ($/MW) per MW
    double rho2 = 0.1;  // mu step scale
    int max_iters = 5000;
    double eps_obj = 1e-6;
    double eps_primal = 0.0; // MW, on the averaged mismatch; 0 means 0.02 * r
    double eps_cs = 1e-4;    // $, on max_j |mu_j (u_bar_j - m_j)|
    int window = 200;    // iterates averaged for the primal estimate
    int stall_span = 20; // dual-value smoothing and comparison span
};

/// Step scale at iteration n (0-based): rho0 / sqrt(n + 1).
double step_size(double rho0, int n);

struct DualRecord
{
    int iter = 0;
    std::vector<double> lambda; // prices used in this iteration, $/MW
    std::vector<double> mu;     // $
    std::vector<double> uj;     // aggregate of the EV best responses
    std::vector<double> w;      // utility response, MW
    double dual_value = 0.0;    // $
    std::vector<double> viol_w;  // w_j - r (M_j - m_j + u_j), MW
    std::vector<double> viol_cap; // u_j - m_j
};

struct DualTrace
{
    std::vector<int> station_buses;
    std::vector<DualRecord> records;
};

struct DualResult
{
    opf::PowerFlowSolution flow;   // OPF at the averaged station loads
    fleet::Assignment assignment;  // averaged EV choices
    DualTrace trace;
    bool converged = false;
    int iterations = 0;
    double dual_value = 0.0;       // best dual value seen, $
    double objective = 0.0;        // recovered primal objective f + g, $
    double residual = 0.0;         // max_j |w_bar_j - r (M_j - m_j + u_bar_j)|, MW
    double complementarity = 0.0;  // max_j |mu_j (u_bar_j - m_j)|, last-round mu
    std::vector<double> lambda;    // prices of the last round
    std::vector<double> mu;
};

/// D(lambda, mu) = V(lambda) + sum_a min_j (alpha d_aj - r lambda_j + mu_j)
///                 - sum_j (lambda_j r (M_j - m_j) + mu_j m_j),
/// V(lambda) the OPF value with w priced at lambda.
double dual_value(const grid::Grid& grid, const fleet::Scenario& s, const std::vector<double>& lambda,
                  const std::vector<double>& mu, const conic::ConicSolver& solver = conic::InteriorPointSolver{});

/// Utility side: answers a price vector with its station loads and keeps a
/// window of its recent answers for the final dispatch.
class Utility
{
public:
    Utility(const grid::Grid& grid, std::vector<opf::StationLoad> loads, double r_mw, int window,
            const conic::ConicSolver& solver);

    const std::vector<double>& respond(const std::vector<double>& lambda);
    /// V(lambda) of the last answer.
    double value() const { return flow_.objective_value; }
    const opf::PowerFlowSolution& flow() const { return flow_; }

    std::vector<double> average_w() const;
    /// OPF with w fixed at the window average.
    opf::PowerFlowSolution dispatch_average() const;

private:
    const grid::Grid& grid_;
    std::vector<opf::StationLoad> loads_;
    double r_mw_;
    std::size_t window_;
    const conic::ConicSolver& solver_;
    opf::PowerFlowSolution flow_;
    std::deque<std::vector<double>> recent_w_;
};

/// One EV: knows its own position and range and the public station
/// positions; answers (lambda, mu) with the index of its cheapest station.
class EvAgent
{
public:
    EvAgent(const fleet::Ev& ev, const std::vector<fleet::Station>& stations, double alpha, double r_mw);

    int respond(const std::vector<double>& lambda, const std::vector<double>& mu) const;
    /// min_j alpha d_j - r lambda_j + mu_j.
    double value(const std::vector<double>& lambda, const std::vector<double>& mu) const;

private:
    Eigen::RowVectorXd d_;
    double range_;
    double alpha_;
    double r_mw_;
};

/// Operator side: owns the prices, the station capacities and the window of
/// recent EV choices.
class Operator
{
public:
    Operator(const fleet::Scenario& s, const DualParams& params);

    const std::vector<double>& lambda() const { return lambda_; }
    const std::vector<double>& mu() const { return mu_; }
    const std::vector<opf::StationLoad>& loads() const { return loads_; }

    /// Records iteration n's answers and takes the projected subgradient
    /// step; returns the aggregates u_j(n).
    std::vector<double> update(int n, const std::vector<double>& w, const std::vector<int>& choices);

    /// Window average of the EV choices, with any capacity overshoot moved
    /// to stations that have room.
    fleet::Assignment average_assignment() const;
    /// -sum_j (lambda_j r (M_j - m_j) + mu_j m_j).
    double price_constant(const std::vector<double>& lambda, const std::vector<double>& mu) const;

private:
    const fleet::Scenario& s_;
    DualParams params_;
    std::vector<opf::StationLoad> loads_;
    std::vector<double> lambda_;
    std::vector<double> mu_;
    std::deque<std::vector<int>> recent_choices_;

    void repair_capacity(fleet::Matrix& u) const;
};

/// Stopping rule: the smoothed dual value has stalled, the window averages
/// of w and u_j agree and mu is complementary to the averaged capacity slack. Keeps the best dual value seen.
class Monitor
{
public:
    Monitor(const DualParams& params, double r_mw);
    /// Returns true when the rule holds.
    bool observe(DualRecord record);
    DualTrace take_trace(std::vector<int> station_buses);
    bool converged() const { return converged_; }
    double best_value() const { return best_; }
    const DualRecord& last() const { return trace_.records.back(); }

private:
    DualParams params_;
    double eps_primal_;
    DualTrace trace_;
    std::vector<double> smoothed_;
    double best_;
    bool converged_ = false;
};

/// Assembles the result once the loop has stopped.
DualResult finish(const fleet::Scenario& s, const Utility& util, const Operator& op, Monitor& monitor,
                  int iterations);

DualResult run_dual(const grid::Grid& grid, const fleet::Scenario& s, const DualParams& params = {},
                    const conic::ConicSolver& solver = conic::InteriorPointSolver{});

/// iter, lambda_<bus>..., mu_<bus>..., uj_<bus>..., dualvalue, viol_<bus>...
void write_trace_csv(const DualTrace& trace, std::ostream& out);

} // namespace swapgrid::dual
