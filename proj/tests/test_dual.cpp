#include "swapgrid/dualdecomp.hpp"
#include "swapgrid/error.hpp"
#include "swapgrid/generate.hpp"
#include "swapgrid/oracle.hpp"
#include "swapgrid/report.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace swapgrid;

TEST_CASE("diminishing step")
{
    CHECK(dual::step_size(2.0, 0) == doctest::Approx(2.0));
    CHECK(dual::step_size(2.0, 3) == doctest::Approx(1.0));
}

TEST_CASE("weak duality: every price pair bounds the relaxed optimum from below")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lam(-60.0, 20.0);
    std::uniform_real_distribution<double> mu(0.0, 0.2);
    for (std::uint64_t seed : {1, 2, 3})
    {
        const auto fx = generate::random_fixture(seed);
        const auto central = oracle::solve_centralized_relaxed(fx.grid, fx.scenario);
        const auto n = static_cast<std::size_t>(fx.scenario.num_stations());
        for (int trial = 0; trial < 10; ++trial)
        {
            std::vector<double> l(n);
            std::vector<double> m(n);
            for (std::size_t j = 0; j < n; ++j)
            {
                l[j] = lam(rng);
                m[j] = mu(rng);
            }
            CHECK(dual::dual_value(fx.grid, fx.scenario, l, m) <= central.objective + 1e-6);
        }
    }
}

TEST_CASE("EV agent agrees with the fleet best response")
{
    const auto fx = generate::random_fixture(8);
    const auto& s = fx.scenario;
    const auto d = fleet::distances(s.evs, s.stations);
    const std::vector<double> lambda(static_cast<std::size_t>(s.num_stations()), -20.0);
    std::vector<double> mu(static_cast<std::size_t>(s.num_stations()), 0.0);
    mu[0] = 0.05;
    for (int a = 0; a < s.num_evs(); ++a)
    {
        const dual::EvAgent ev(s.evs[static_cast<std::size_t>(a)], s.stations, s.alpha_per_km, s.r_mw);
        const int j = ev.respond(lambda, mu);
        CHECK(j == fleet::ev_best_response(s.evs[static_cast<std::size_t>(a)].range(), d.row(a), lambda, mu,
                                           s.alpha_per_km, s.r_mw));
        CHECK(ev.value(lambda, mu) ==
              doctest::Approx(s.alpha_per_km * d(a, j) - s.r_mw * lambda[static_cast<std::size_t>(j)] +
                              mu[static_cast<std::size_t>(j)]));
    }
}

TEST_CASE("operator takes projected subgradient steps")
{
    const auto fx = generate::six_bus_fixture(4, true);
    dual::DualParams p;
    p.rho1 = 4.0;
    p.rho2 = 1.0;
    dual::Operator op(fx.scenario, p);
    const auto n = static_cast<std::size_t>(fx.scenario.num_stations());
    const std::vector<double> w(n, 0.0);
    const std::vector<int> choices(4, 0);
    const auto uj = op.update(0, w, choices);
    CHECK(uj[0] == 4.0);
    for (std::size_t j = 0; j < n; ++j)
    {
        const double load = opf::station_load_mw(op.loads()[j], fx.scenario.r_mw, uj[j]);
        CHECK(op.lambda()[j] == doctest::Approx(-4.0 * load));
        const double slack = uj[j] - fx.scenario.stations[j].available;
        CHECK(op.mu()[j] == doctest::Approx(std::max(0.0, slack)));
    }
}

TEST_CASE("dual decomposition recovers the optimum on the six-bus fixtures")
{
    for (bool binding : {false, true})
    {
        const auto fx = generate::six_bus_fixture(12, binding);
        const auto central = oracle::solve_centralized_relaxed(fx.grid, fx.scenario);
        const auto r = dual::run_dual(fx.grid, fx.scenario);
        CHECK(r.converged);
        CHECK(std::abs(r.objective - central.objective) / central.objective <= 5e-3);
        CHECK(r.dual_value <= central.objective + 1e-6);
        CHECK(r.complementarity <= 1e-3);
        CHECK(fleet::count_critical(r.assignment.u) <= fx.scenario.num_stations() - 1);
        const auto d = fleet::distances(fx.scenario.evs, fx.scenario.stations);
        CHECK(fleet::polytope_violation(fx.scenario, d, r.assignment.u) < 1e-9);
        if (!binding)
        {
            for (double m : r.mu)
            {
                CHECK(m == 0.0);
            }
        }
    }
}

TEST_CASE("dual trace CSV")
{
    const auto fx = generate::six_bus_fixture(6, true);
    dual::DualParams p;
    p.max_iters = 30;
    p.window = 10;
    const auto r = dual::run_dual(fx.grid, fx.scenario, p);
    CHECK(r.iterations == 30);
    std::stringstream ss;
    dual::write_trace_csv(r.trace, ss);
    const auto table = report::read_csv(ss);
    CHECK(table.rows.size() == 30);
    for (int b : fx.grid.station_buses())
    {
        CHECK(table.column("mu_" + std::to_string(b)) >= 0);
        CHECK(table.column("viol_w_" + std::to_string(b)) >= 0);
    }
    const int dv = table.column("dualvalue");
    REQUIRE(dv >= 0);
    CHECK(table.rows[5][static_cast<std::size_t>(dv)] == doctest::Approx(r.trace.records[5].dual_value));
}
