#pragma once

// Reproducible synthetic feeders and EV scenarios. All draws come from
// mt19937_64 through explicit bit manipulation, so files are identical
// across standard libraries for a given seed.

#include "swapgrid/fleet.hpp"
#include "swapgrid/grid.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace swapgrid::generate
{

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double unit(std::mt19937_64& rng);
double uniform(std::mt19937_64& rng, double lo, double hi);
/// Uniform integer in [lo, hi].
int uniform_int(std::mt19937_64& rng, int lo, int hi);

/// Random radial feeder with buses 0..n-1 rooted at 0. The root carries the
/// expensive supply (0.3 p^2 + 30 p, 4 MW); one or two cheaper distributed
/// generators (0.1 p^2 + 20 p, 2.5 MW) sit downstream. Station buses get
/// station ids 0..stations-1.
grid::Grid random_feeder(int buses, int stations, std::uint64_t seed);

/// 56-bus radial stand-in for the feeder used in the numerical study:
/// buses 1..56 rooted at 1, generators at 1, 4, 26, 34 and stations at 5,
/// 16, 31, 43. Topology, impedances and loads are synthetic.
grid::Grid standin_feeder56();

enum class MPolicy
{
    Ample,  // m_j = A
    Scarce, // uneven shares A/2, A/10, A/4, A/4 (cycled and rescaled beyond 4 stations)
};

MPolicy parse_policy(const std::string& text);

struct ScenarioOptions
{
    int evs = 400;
    int stations = 4;
    double area_km = 4.0;
    std::uint64_t seed = 1;
    MPolicy policy = MPolicy::Ample;
    double r_mw = 0.01;
    double alpha_per_km = 0.02;
};

/// Stations on the first `stations` station buses of the grid, laid out on a
/// regular lattice of the square area ((1,1),(3,1),(1,3),(3,3) for four
/// stations in 4 km); EVs uniform in the area, all stations in range;
/// M_j = m_j.
fleet::Scenario generate_scenario(const grid::Grid& grid, const ScenarioOptions& opt);

struct Fixture
{
    std::string name;
    grid::Grid grid;
    fleet::Scenario scenario;
};

/// Small randomized instance: 6-15 buses, N_w in {2,3,4}, A in [a_min, a_max].
/// Some EVs have a short range; odd seeds get binding capacities, even
/// seeds ample ones. M_j exceeds m_j by a few batteries. Draws whose
/// relaxed problem is infeasible are replaced by the next draw.
Fixture random_fixture(std::uint64_t seed, int a_min = 5, int a_max = 30);

/// Fixed 6-bus, 3-station fixture with A EVs (binding capacities when
/// `binding`).
Fixture six_bus_fixture(int evs, bool binding, std::uint64_t seed = 7);

} // namespace swapgrid::generate
