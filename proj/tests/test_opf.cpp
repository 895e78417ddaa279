#include "swapgrid/error.hpp"
#include "swapgrid/generate.hpp"
#include "swapgrid/grid.hpp"
#include "swapgrid/opf.hpp"

#include <doctest.h>

#include <cmath>

using namespace swapgrid;
using nlohmann::json;

namespace
{

grid::Grid two_bus()
{
    return grid::from_json(json::parse(R"({
      "format": "swapgrid-feeder/1", "base_mva": 10.0, "root": 1, "v_root": 1.0,
      "buses": [
        {"id": 1, "v_min": 0.81, "v_max": 1.21, "p_bg": 0.0, "q_bg": 0.0,
         "generator": {"p_min": 0, "p_max": 20, "q_min": -10, "q_max": 10,
                       "cost_quadratic": 0.5, "cost_linear": 20}},
        {"id": 7, "v_min": 0.81, "v_max": 1.21, "p_bg": 2.0, "q_bg": 1.0, "station_id": 0}
      ],
      "lines": [{"from": 1, "to": 7, "r": 0.01, "x": 0.02, "s_max": 30}]
    })"));
}

struct LineFlow
{
    double P, Q, l, v_to;
};

// Exact branch flow on one line feeding a load (p, q) from a fixed root
// voltage: the cheapest solution is the low-loss root of l v = P^2 + Q^2,
// found by fixed-point iteration.
LineFlow single_line(double r, double x, double v0, double p, double q)
{
    double l = 0.0;
    for (int it = 0; it < 200; ++it)
    {
        l = ((p + r * l) * (p + r * l) + (q + x * l) * (q + x * l)) / v0;
    }
    const double P = p + r * l;
    const double Q = q + x * l;
    return {P, Q, l, v0 - 2.0 * (r * P + x * Q) + (r * r + x * x) * l};
}

} // namespace

TEST_CASE("two-bus dispatch matches the exact branch-flow solution")
{
    const auto g = two_bus();
    const std::vector<opf::StationLoad> st{{7, 0.5, 1.0}};
    // w = 0.5 MW + 0.01 MW * 10 = 0.6 MW
    const auto sol = opf::solve_opf(g, opf::Fixed{{10.0}}, 0.01, st);
    const auto ref = single_line(0.01, 0.02, 1.0, 0.2 + 0.06, 0.1);
    CHECK(sol.w[0] == doctest::Approx(0.6));
    CHECK(sol.P[0] == doctest::Approx(ref.P).epsilon(1e-7));
    CHECK(sol.Q[0] == doctest::Approx(ref.Q).epsilon(1e-6));
    CHECK(sol.l[0] == doctest::Approx(ref.l).epsilon(1e-6));
    CHECK(sol.v[1] == doctest::Approx(ref.v_to).epsilon(1e-7));
    CHECK(sol.generation_cost == doctest::Approx(50.0 * ref.P * ref.P + 200.0 * ref.P).epsilon(1e-7));
    CHECK(opf::generation_cost(g, sol) == doctest::Approx(sol.generation_cost).epsilon(1e-9));
    CHECK(opf::max_violation(g, sol, st) < 1e-7);
    CHECK(opf::exactness_residuals(g, sol).exact);
}

TEST_CASE("station load helper")
{
    const opf::StationLoad s{3, 0.04, 0.1};
    CHECK(opf::station_load_mw(s, 0.01, 3.0) == doctest::Approx(0.07));
}

TEST_CASE("linear price moves w to a bound")
{
    const auto g = two_bus();
    const std::vector<opf::StationLoad> st{{7, 0.5, 1.0}};
    // A large positive price makes every MW at the station expensive.
    const auto low = opf::solve_opf(g, opf::LinearPrice{{1000.0}}, 0.01, st);
    CHECK(low.w[0] == doctest::Approx(0.5).epsilon(1e-6));
    const auto high = opf::solve_opf(g, opf::LinearPrice{{-1000.0}}, 0.01, st);
    CHECK(high.w[0] == doctest::Approx(1.0).epsilon(1e-6));
    // Stationarity for an interior w: marginal generation cost at the root,
    // scaled by losses, equals -lambda. Check the objective includes lambda w.
    CHECK(low.objective_value == doctest::Approx(low.generation_cost + 1000.0 * low.w[0]).epsilon(1e-7));
}

TEST_CASE("quadratic penalty with zero multiplier tracks the target")
{
    const auto g = two_bus();
    const std::vector<opf::StationLoad> st{{7, 0.5, 1.0}};
    const auto sol = opf::solve_opf(g, opf::QuadraticPenalty{{0.0}, 1e6, {20.0}}, 0.01, st);
    CHECK(sol.w[0] == doctest::Approx(0.7).epsilon(1e-4));
}

TEST_CASE("both conic solvers agree on the 56-bus dispatch")
{
    const auto g = generate::standin_feeder56();
    std::vector<opf::StationLoad> st;
    for (int b : g.station_buses())
    {
        st.push_back({b, 0.2, 1.0});
    }
    const opf::Fixed fixed{std::vector<double>(st.size(), 40.0)};
    const auto problem = opf::build_opf(g, fixed, 0.01, st);
    const auto a = opf::solve_opf(g, problem, conic::InteriorPointSolver{});
    const auto b = opf::solve_opf(g, problem, conic::BarrierSolver{});
    CHECK(a.generation_cost == doctest::Approx(b.generation_cost).epsilon(1e-6));
    const auto report = opf::exactness_residuals(g, a);
    CHECK(report.max_relative <= opf::kExactTol);
    CHECK(report.exact);
    CHECK(opf::max_violation(g, a, st) < 1e-6);
}

TEST_CASE("an impossible load is infeasible")
{
    const auto g = two_bus();
    const std::vector<opf::StationLoad> st{{7, 500.0, 600.0}};
    try
    {
        opf::solve_opf(g, opf::Fixed{{0.0}}, 0.01, st);
        FAIL("expected an error");
    }
    catch (const Error& e)
    {
        CHECK((e.kind() == ErrorKind::Infeasible || e.kind() == ErrorKind::NumericalFailure));
    }
}

TEST_CASE("exactness audit flags a slack cone")
{
    const auto g = two_bus();
    const std::vector<opf::StationLoad> st{{7, 0.5, 1.0}};
    auto sol = opf::solve_opf(g, opf::Fixed{{10.0}}, 0.01, st);
    sol.l[0] *= 2.0;
    const auto report = opf::exactness_residuals(g, sol);
    CHECK_FALSE(report.exact);
    CHECK(report.max_relative == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("station buses must host a station")
{
    const auto g = two_bus();
    CHECK_THROWS_AS(opf::build_opf(g, opf::Fixed{{0.0}}, 0.01, {{1, 0.0, 1.0}}), Error);
}
