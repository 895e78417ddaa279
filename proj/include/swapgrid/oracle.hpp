#pragma once

// Ground truth at desk scale: the joint relaxation solved in one piece, and
// exhaustive search over binary assignments.

#include "swapgrid/fleet.hpp"
#include "swapgrid/grid.hpp"
#include "swapgrid/opf.hpp"

#include <vector>

namespace swapgrid::oracle
{

struct RelaxedResult
{
    opf::PowerFlowSolution flow;
    fleet::Assignment assignment;
    double objective = 0.0; // generation cost + travel cost, $
};

/// Joint conic solve over (x, u) with w_j = r (M_j - m_j + u_j).
RelaxedResult solve_centralized_relaxed(const grid::Grid& grid, const fleet::Scenario& s,
                                        const conic::ConicSolver& solver = conic::InteriorPointSolver{});

/// Objective f(x) + g(u) of a given (binary or relaxed) assignment: the OPF
/// for the implied station loads plus the travel cost.
double assignment_objective(const grid::Grid& grid, const fleet::Scenario& s, const fleet::Matrix& d,
                            const fleet::Matrix& u, opf::PowerFlowSolution* flow = nullptr);

/// Minimum travel cost sum_a alpha d_a,choice(a) over binary assignments with
/// exactly counts[j] EVs at station j (reachability respected). Returns
/// false when no such assignment exists.
bool min_cost_assignment(const fleet::Scenario& s, const fleet::Matrix& d, const std::vector<int>& counts,
                         std::vector<int>& choice, double& cost);

struct EnumerationResult
{
    fleet::Assignment best;
    double objective = 0.0;
    opf::PowerFlowSolution flow;
    long opf_solves = 0;       // distinct aggregate vectors solved
    long assignments_seen = 0; // capacity-feasible aggregate vectors visited
};

inline constexpr long kDefaultEnumerationCap = 100000;

/// Exhaustive search over binary assignments. Assignments are grouped by
/// their aggregate vector (the OPF depends on u only through u_j); for each
/// aggregate the cheapest assignment is found exactly, so the result is the
/// optimum over all binary assignments. Throws TooLarge when more than `cap`
/// aggregate vectors would need an OPF solve, CapacityInfeasible when no
/// binary assignment exists.
EnumerationResult enumerate_binary(const grid::Grid& grid, const fleet::Scenario& s,
                                   long cap = kDefaultEnumerationCap,
                                   const conic::ConicSolver& solver = conic::InteriorPointSolver{});

struct RoundingGap
{
    double rounded_objective = 0.0;
    double best_objective = 0.0;
    double gap = 0.0; // (rounded - best) / best
    fleet::Assignment rounded;
};

RoundingGap rounding_gap(const grid::Grid& grid, const fleet::Scenario& s, const fleet::Assignment& relaxed,
                         const EnumerationResult& best);
RoundingGap rounding_gap(const grid::Grid& grid, const fleet::Scenario& s, const fleet::Assignment& relaxed,
                         long cap = kDefaultEnumerationCap);

} // namespace swapgrid::oracle
