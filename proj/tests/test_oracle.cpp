#include "swapgrid/error.hpp"
#include "swapgrid/generate.hpp"
#include "swapgrid/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace swapgrid;
using fleet::Matrix;

namespace
{

// Plain search over every reachable binary assignment, one OPF per
// assignment; only usable for a handful of EVs.
double brute_force_binary(const generate::Fixture& fx)
{
    const auto& s = fx.scenario;
    const auto d = fleet::distances(s.evs, s.stations);
    const auto mask = fleet::reachability(s, d);
    const int A = s.num_evs();
    const int N = s.num_stations();
    std::vector<int> choice(static_cast<std::size_t>(A), 0);
    double best = std::numeric_limits<double>::infinity();
    for (;;)
    {
        bool ok = true;
        std::vector<int> count(static_cast<std::size_t>(N), 0);
        for (int a = 0; a < A && ok; ++a)
        {
            ok = mask(a, choice[static_cast<std::size_t>(a)]);
            ++count[static_cast<std::size_t>(choice[static_cast<std::size_t>(a)])];
        }
        for (int j = 0; j < N && ok; ++j)
        {
            ok = count[static_cast<std::size_t>(j)] <= s.stations[static_cast<std::size_t>(j)].available;
        }
        if (ok)
        {
            Matrix u = Matrix::Zero(A, N);
            for (int a = 0; a < A; ++a)
            {
                u(a, choice[static_cast<std::size_t>(a)]) = 1.0;
            }
            best = std::min(best, oracle::assignment_objective(fx.grid, s, d, u));
        }
        int a = 0;
        while (a < A && ++choice[static_cast<std::size_t>(a)] == N)
        {
            choice[static_cast<std::size_t>(a)] = 0;
            ++a;
        }
        if (a == A)
        {
            return best;
        }
    }
}

} // namespace

TEST_CASE("enumeration matches plain search on tiny instances")
{
    for (std::uint64_t seed : {1, 2, 3, 4})
    {
        const auto fx = generate::random_fixture(seed, 5, 6);
        if (std::pow(fx.scenario.num_stations(), fx.scenario.num_evs()) > 5000)
        {
            continue;
        }
        const auto e = oracle::enumerate_binary(fx.grid, fx.scenario);
        CHECK(e.objective == doctest::Approx(brute_force_binary(fx)).epsilon(1e-9));
        CHECK(fleet::count_critical(e.best.u) == 0);
        CHECK(e.best.mode == fleet::Mode::Binary);
    }
}

TEST_CASE("minimum-cost assignment for given counts")
{
    const auto fx = generate::six_bus_fixture(5, false);
    const auto& s = fx.scenario;
    const auto d = fleet::distances(s.evs, s.stations);
    const std::vector<int> counts{2, 2, 1};
    std::vector<int> choice;
    double cost = 0.0;
    REQUIRE(oracle::min_cost_assignment(s, d, counts, choice, cost));
    // Compare with every assignment that has these counts.
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> c(5, 0);
    for (int code = 0; code < 243; ++code)
    {
        int x = code;
        std::vector<int> n(3, 0);
        bool ok = true;
        double v = 0.0;
        for (int a = 0; a < 5; ++a)
        {
            c[static_cast<std::size_t>(a)] = x % 3;
            x /= 3;
            ++n[static_cast<std::size_t>(c[static_cast<std::size_t>(a)])];
            ok = ok && d(a, c[static_cast<std::size_t>(a)]) <= s.evs[static_cast<std::size_t>(a)].range();
            v += s.alpha_per_km * d(a, c[static_cast<std::size_t>(a)]);
        }
        if (ok && n == counts)
        {
            best = std::min(best, v);
        }
    }
    CHECK(cost == doctest::Approx(best).epsilon(1e-12));
    CHECK(!oracle::min_cost_assignment(s, d, {5, 1, 0}, choice, cost));
}

TEST_CASE("relaxation is a lower bound and the optimum is exact")
{
    for (std::uint64_t seed = 1; seed <= 6; ++seed)
    {
        const auto fx = generate::random_fixture(seed, 5, 12);
        const auto rel = oracle::solve_centralized_relaxed(fx.grid, fx.scenario);
        const auto bin = oracle::enumerate_binary(fx.grid, fx.scenario);
        CHECK(rel.objective <= bin.objective * (1.0 + 1e-6));
        CHECK(opf::exactness_residuals(fx.grid, rel.flow).exact);
        const auto d = fleet::distances(fx.scenario.evs, fx.scenario.stations);
        CHECK(fleet::polytope_violation(fx.scenario, d, rel.assignment.u) < 1e-6);
        // The objective is reproduced by evaluating the assignment.
        CHECK(oracle::assignment_objective(fx.grid, fx.scenario, d, rel.assignment.u) ==
              doctest::Approx(rel.objective).epsilon(1e-6));
    }
}

TEST_CASE("relaxed optimum obeys the critical-EV bound")
{
    for (std::uint64_t seed = 1; seed <= 30; ++seed)
    {
        const auto fx = generate::random_fixture(seed);
        const int n = fx.scenario.num_stations();
        const auto rel = oracle::solve_centralized_relaxed(fx.grid, fx.scenario);
        CHECK(fleet::count_critical(rel.assignment.u) <= n * (n - 1) / 2);
    }
}

TEST_CASE("rounding gap is zero for a binary relaxed optimum")
{
    const auto fx = generate::six_bus_fixture(8, false);
    const auto best = oracle::enumerate_binary(fx.grid, fx.scenario);
    const auto gap = oracle::rounding_gap(fx.grid, fx.scenario, best.best, best);
    CHECK(gap.gap == doctest::Approx(0.0));
    CHECK(gap.rounded.u == best.best.u);
}

TEST_CASE("enumeration refuses oversized instances")
{
    const auto fx = generate::six_bus_fixture(12, false);
    try
    {
        oracle::enumerate_binary(fx.grid, fx.scenario, 3);
        FAIL("expected an error");
    }
    catch (const Error& e)
    {
        CHECK(e.kind() == ErrorKind::TooLarge);
    }
}
