#pragma once

// EVs, stations, and the station-assignment polytope
//   u_aj in [0,1], u_aj = 0 out of range, rows sum to 1, columns sum <= m_j.

#include "swapgrid/conic.hpp"
#include "swapgrid/opf.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace swapgrid::fleet
{

inline constexpr const char* kScenarioFormat = "swapgrid-scenario/1";
inline constexpr double kBinaryTol = 1e-6;

struct Ev
{
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    double gamma = 0.0;  // km per unit of charge
    double charge = 0.0; // remaining charge

    double range() const { return gamma * charge; }
};

struct Station
{
    int id = 0;
    int bus = 0;
    double x = 0.0;
    double y = 0.0;
    int total = 0;     // M_j
    int available = 0; // m_j
};

struct Scenario
{
    double r_mw = 0.01;
    double alpha_per_km = 0.02;
    std::vector<Ev> evs;
    std::vector<Station> stations;
    std::uint64_t seed = 0;

    int num_evs() const { return static_cast<int>(evs.size()); }
    int num_stations() const { return static_cast<int>(stations.size()); }
};

Scenario scenario_from_json(const nlohmann::json& doc);
Scenario load_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);
nlohmann::json to_json(const Scenario& s);

/// Checks that every station sits on a station bus of the grid and that every
/// EV reaches at least one station. Throws Error.
void check_against_grid(const Scenario& s, const grid::Grid& g);

/// What the utility sees of each station (bus, r (M - m), r M).
std::vector<opf::StationLoad> station_loads(const Scenario& s);

using Matrix = Eigen::MatrixXd;

enum class Mode
{
    Relaxed,
    Binary,
};

struct Assignment
{
    Matrix u; // A x N_w
    Mode mode = Mode::Relaxed;
};

/// d_aj, Euclidean, km.
Matrix distances(const std::vector<Ev>& evs, const std::vector<Station>& stations);

/// {j : d_aj <= range}, ascending. Throws Error(EvUnreachable) when empty.
std::vector<int> feasible_stations(double range, const Eigen::Ref<const Eigen::RowVectorXd>& d_row);

/// A x N_w mask of reachable (EV, station) pairs. Throws EvUnreachable.
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> reachability(const Scenario& s, const Matrix& d);

/// Throws Error(CapacityInfeasible) when sum_j m_j < A.
void check_capacity(const Scenario& s);

/// Minimizer over the polytope of
///   alpha sum d_aj u_aj + sum_j lambda_j e_j + rho/2 e_j^2,
///   e_j = w_j - r (M_j - m_j + u_j),  w and lambda per station (MW, $/MW).
Assignment u_update(const Scenario& s, const Matrix& d, const std::vector<double>& w,
                    const std::vector<double>& lambda, double rho,
                    const conic::ConicSolver& solver = conic::InteriorPointSolver{});

/// Index of argmin_j {alpha d_aj - r lambda_j + mu_j} over reachable stations,
/// lowest index on ties. Throws EvUnreachable.
int ev_best_response(double range, const Eigen::Ref<const Eigen::RowVectorXd>& d_row, const std::vector<double>& lambda,
                     const std::vector<double>& mu, double alpha, double r_mw);

/// u_j = sum_a u_aj.
std::vector<double> aggregate(const Matrix& u);

/// Number of rows whose largest entry is below 1 - tol.
int count_critical(const Matrix& u, double tol = kBinaryTol);

/// Largest violation of the polytope constraints (bounds, reachability, rows,
/// capacities).
double polytope_violation(const Scenario& s, const Matrix& d, const Matrix& u);

/// Sets each row's largest entry to 1 (lowest index on ties), then repairs
/// over-full stations greedily. Throws CapacityInfeasible.
Assignment discretize(const Assignment& relaxed, const Scenario& s, const Matrix& d);

/// Samples each row from its distribution, then repairs capacity as in
/// discretize. Reproducible for a given seed.
Assignment randomized_round(const Assignment& relaxed, const Scenario& s, const Matrix& d, std::uint64_t seed);

/// Moves EVs out of over-full stations: repeatedly takes, among EVs at an
/// over-full station, the one whose move to its next reachable station with
/// slack costs the least extra distance. `choice` holds station indices.
void repair_capacity(std::vector<int>& choice, const Scenario& s, const Matrix& d);

/// Moves a relaxed assignment to a vertex of the assignment polytope with the
/// same station totals and no higher travel cost: cancels cycles among the
/// fractional entries until their support is a forest, which leaves at most
/// N_w - 1 fractional rows.
void purify(Matrix& u, const Matrix& d, double tol = kBinaryTol);

/// alpha sum_a d_a,choice(a) for a binary matrix or alpha <d, u> in general.
double travel_cost(const Scenario& s, const Matrix& d, const Matrix& u);

} // namespace swapgrid::fleet
