#pragma once

// Second-order cone relaxation of the branch-flow OPF on a radial feeder,
// with the station loads coupled in one of three ways.

#include "swapgrid/conic.hpp"
#include "swapgrid/grid.hpp"

#include <variant>
#include <vector>

namespace swapgrid::opf
{

inline constexpr double kFeasTol = 1e-7;
inline constexpr double kExactTol = 1e-5;

/// What the utility knows about one station bus: the metered load of the
/// batteries already charging, r (M_j - m_j), and the rated load r M_j.
struct StationLoad
{
    int bus = 0;
    double base_mw = 0.0;
    double rated_mw = 0.0;
};

/// r (M_j - m_j + u_j). Every module evaluates the station load through this
/// helper so direct and message-passing runs share the same arithmetic.
inline double station_load_mw(const StationLoad& s, double r_mw, double u_aggregate)
{
    return s.base_mw + r_mw * u_aggregate;
}

/// w_j fixed to r (M_j - m_j + u_j).
struct Fixed
{
    std::vector<double> u;
};

/// Adds sum_j lambda_j w_j ($, w in MW); w_j is kept in [r (M_j - m_j), r M_j].
struct LinearPrice
{
    std::vector<double> lambda;
};

/// Adds sum_j lambda_j e_j + rho/2 e_j^2 with e_j = w_j - r (M_j - m_j + t_j).
struct QuadraticPenalty
{
    std::vector<double> lambda;
    double rho = 1.0;
    std::vector<double> targets;
};

using Coupling = std::variant<Fixed, LinearPrice, QuadraticPenalty>;

/// Variable indices into the conic problem (-1 where absent).
struct OpfLayout
{
    std::vector<int> v;  // per bus index
    std::vector<int> pg; // per bus index
    std::vector<int> qg;
    std::vector<int> P; // per line
    std::vector<int> Q;
    std::vector<int> l;
    std::vector<int> w; // per station
};

struct OpfProblem
{
    conic::ConicProblem problem;
    OpfLayout layout;
    std::vector<StationLoad> stations;
};

struct PowerFlowSolution
{
    std::vector<double> v; // pu^2 per bus index
    std::vector<double> l; // pu^2 per line
    std::vector<double> P; // pu per line
    std::vector<double> Q;
    std::vector<double> pg; // pu per bus index (0 without a generator)
    std::vector<double> qg;
    std::vector<double> w; // MW per station
    double objective_value = 0.0; // $, including price/penalty terms
    double generation_cost = 0.0; // $
    int solver_iterations = 0;
};

/// stations: one entry per station in coupling order. Station buses must be
/// station buses of the grid.
OpfProblem build_opf(const grid::Grid& grid, const Coupling& coupling, double r_mw,
                     const std::vector<StationLoad>& stations);

/// Reads a solver result back into grid quantities. Throws Error(Infeasible)
/// or Error(NumericalFailure) unless the result is optimal.
PowerFlowSolution extract_solution(const grid::Grid& grid, const OpfProblem& opf, const conic::ConicResult& res);

/// Throws Error(Infeasible) or Error(NumericalFailure).
PowerFlowSolution solve_opf(const grid::Grid& grid, const OpfProblem& opf, const conic::ConicSolver& solver);

/// Convenience: build + solve with the default interior-point solver.
PowerFlowSolution solve_opf(const grid::Grid& grid, const Coupling& coupling, double r_mw,
                            const std::vector<StationLoad>& stations);

struct ExactnessReport
{
    std::vector<double> residual;          // v_from l - |S|^2 per line
    std::vector<double> relative_residual; // divided by the largest v_from l on the feeder
    double max_relative = 0.0;
    bool exact = true;
};

ExactnessReport exactness_residuals(const grid::Grid& grid, const PowerFlowSolution& sol,
                                    double tolerance = kExactTol);

/// sum_j f_j(p_j^g) in $.
double generation_cost(const grid::Grid& grid, const PowerFlowSolution& sol);

/// Largest violation (pu) of the balance, voltage-drop, bound and cone
/// constraints of the relaxation, with station loads taken from sol.w.
double max_violation(const grid::Grid& grid, const PowerFlowSolution& sol, const std::vector<StationLoad>& stations);

} // namespace swapgrid::opf
