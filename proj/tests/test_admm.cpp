#include "swapgrid/admm.hpp"
#include "swapgrid/error.hpp"
#include "swapgrid/generate.hpp"
#include "swapgrid/oracle.hpp"
#include "swapgrid/report.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace swapgrid;

TEST_CASE("multiplier step and residual")
{
    const std::vector<opf::StationLoad> loads{{2, 0.02, 0.1}, {4, 0.0, 0.05}};
    std::vector<double> lambda{1.0, -1.0};
    const std::vector<double> w{0.05, 0.03};
    const std::vector<double> uj{2.0, 4.0};
    // e = (0.05 - 0.04, 0.03 - 0.04)
    admm::lambda_step(lambda, 10.0, w, loads, 0.01, uj);
    CHECK(lambda[0] == doctest::Approx(1.1));
    CHECK(lambda[1] == doctest::Approx(-1.1));
    CHECK(admm::consensus_residual(w, loads, 0.01, uj) == doctest::Approx(0.01));
}

TEST_CASE("initial point sends every EV to its nearest station")
{
    const auto fx = generate::random_fixture(4);
    const auto d = fleet::distances(fx.scenario.evs, fx.scenario.stations);
    const auto [u, lambda] = admm::initialize(fx.scenario, d);
    CHECK(fleet::count_critical(u.u) == 0);
    for (double l : lambda)
    {
        CHECK(l == 0.0);
    }
    for (int a = 0; a < fx.scenario.num_evs(); ++a)
    {
        int j = 0;
        u.u.row(a).maxCoeff(&j);
        for (int k : fleet::feasible_stations(fx.scenario.evs[static_cast<std::size_t>(a)].range(), d.row(a)))
        {
            CHECK(d(a, j) <= d(a, k));
        }
    }
}

TEST_CASE("ADMM reaches the centralized optimum on the six-bus fixtures")
{
    for (bool binding : {false, true})
    {
        const auto fx = generate::six_bus_fixture(12, binding);
        const auto central = oracle::solve_centralized_relaxed(fx.grid, fx.scenario);
        const auto r = admm::run_admm(fx.grid, fx.scenario);
        CHECK(r.converged);
        CHECK(r.iterations <= 500);
        CHECK(r.residual < 1e-4 * fx.scenario.r_mw);
        CHECK(std::abs(r.objective - central.objective) / central.objective <= 1e-3);
        CHECK(opf::exactness_residuals(fx.grid, r.flow).exact);
        const auto d = fleet::distances(fx.scenario.evs, fx.scenario.stations);
        CHECK(fleet::polytope_violation(fx.scenario, d, r.assignment.u) < 1e-6);

        // Trace: one record per iteration, residual matches the last record.
        REQUIRE(static_cast<int>(r.trace.records.size()) == r.iterations);
        CHECK(r.trace.records.back().iter == r.iterations);
    }
}

TEST_CASE("non-convergence returns the best-residual iterate")
{
    const auto fx = generate::six_bus_fixture(12, true);
    admm::AdmmParams p;
    p.max_iters = 3;
    const auto r = admm::run_admm(fx.grid, fx.scenario, p);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    double best = 1e300;
    for (const auto& rec : r.trace.records)
    {
        best = std::min(best, rec.residual);
    }
    CHECK(r.residual == best);
}

TEST_CASE("trace CSV has one column per station quantity")
{
    const auto fx = generate::six_bus_fixture(6, false);
    admm::AdmmParams p;
    p.max_iters = 5;
    const auto r = admm::run_admm(fx.grid, fx.scenario, p);
    std::stringstream ss;
    admm::write_trace_csv(r.trace, ss);
    const auto table = report::read_csv(ss);
    CHECK(table.rows.size() == r.trace.records.size());
    CHECK(table.column("iter") == 0);
    for (int b : fx.grid.station_buses())
    {
        CHECK(table.column("lambda_" + std::to_string(b)) >= 0);
        CHECK(table.column("w_" + std::to_string(b)) >= 0);
        CHECK(table.column("uj_" + std::to_string(b)) >= 0);
    }
    const int res = table.column("residual");
    REQUIRE(res >= 0);
    CHECK(table.rows.back()[static_cast<std::size_t>(res)] ==
          doctest::Approx(r.trace.records.back().residual));
}
