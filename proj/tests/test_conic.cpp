#include "swapgrid/cone_ops.hpp"
#include "swapgrid/conic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace swapgrid::conic;

namespace
{

ConicResult solve_both(const ConicProblem& p, ConicResult* barrier_out = nullptr)
{
    const auto ipm = InteriorPointSolver{}.solve(p);
    const auto bar = BarrierSolver{}.solve(p);
    if (barrier_out)
    {
        *barrier_out = bar;
    }
    return ipm;
}

} // namespace

TEST_CASE("linear program with a single active constraint")
{
    ConicProblem p;
    const int x = p.add_variable("x", 0.0);
    const int y = p.add_variable("y", 0.0);
    p.add_cost(x, 1.0);
    p.add_cost(y, 2.0);
    p.add_nonnegative(AffineExpr(-1.0).add(x, 1.0).add(y, 1.0));
    ConicResult bar;
    const auto r = solve_both(p, &bar);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-7));
    REQUIRE(bar.status == SolveStatus::Optimal);
    CHECK(bar.objective == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("second-order cone: maximize x + y over the unit disc")
{
    ConicProblem p;
    const int x = p.add_variable("x");
    const int y = p.add_variable("y");
    p.add_cost(x, -1.0);
    p.add_cost(y, -1.0);
    p.add_second_order({AffineExpr(1.0), AffineExpr().add(x, 1.0), AffineExpr().add(y, 1.0)});
    ConicResult bar;
    const auto r = solve_both(p, &bar);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-8));
    REQUIRE(bar.status == SolveStatus::Optimal);
    CHECK(bar.objective == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-8));
}

TEST_CASE("quadratic epigraph with equality constraint")
{
    // min x^2 + y^2 s.t. x + y = 2  ->  x = y = 1, value 2
    ConicProblem p;
    const int x = p.add_variable("x");
    const int y = p.add_variable("y");
    const int t = p.add_variable("t");
    p.add_cost(t, 1.0);
    p.add_quadratic_epigraph({AffineExpr().add(x, 1.0), AffineExpr().add(y, 1.0)}, t);
    p.add_equality(AffineExpr(-2.0).add(x, 1.0).add(y, 1.0));
    ConicResult bar;
    const auto r = solve_both(p, &bar);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    REQUIRE(bar.status == SolveStatus::Optimal);
    CHECK(bar.objective == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("unconstrained shifted quadratic through the epigraph")
{
    // min (x - 3)^2 + x -> x = 2.5, value 2.75
    ConicProblem p;
    const int x = p.add_variable("x");
    const int t = p.add_variable("t");
    p.add_cost(t, 1.0);
    p.add_cost(x, 1.0);
    p.add_quadratic_epigraph({AffineExpr(-3.0).add(x, 1.0)}, t);
    const auto r = InteriorPointSolver{}.solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(2.75).epsilon(1e-9));
    CHECK(std::abs(r.x[0] - 2.5) < 1e-5);
}

TEST_CASE("infeasible bounds are reported, not solved")
{
    ConicProblem p;
    const int x = p.add_variable("x", 1.0, 2.0);
    p.add_cost(x, 1.0);
    p.add_nonnegative(AffineExpr(0.5).add(x, -1.0)); // x <= 0.5
    CHECK(InteriorPointSolver{}.solve(p).status == SolveStatus::Infeasible);
    CHECK(BarrierSolver{}.solve(p).status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded objective is detected")
{
    ConicProblem p;
    const int x = p.add_variable("x", 0.0);
    p.add_cost(x, -1.0);
    CHECK(InteriorPointSolver{}.solve(p).status == SolveStatus::Unbounded);
}

TEST_CASE("NT scaling maps z and s to the same point")
{
    const ConeLayout layout(2, {3, 4});
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial)
    {
        Eigen::VectorXd s(layout.total), z(layout.total);
        for (int i = 0; i < layout.total; ++i)
        {
            s[i] = u(rng);
            z[i] = u(rng);
        }
        s = bring_to_cone(layout, s);
        z = bring_to_cone(layout, z);
        const auto w = NtScaling::compute(layout, s, z);
        const Eigen::VectorXd wz = w.apply(layout, z);
        // W^{-1} s == W z  <=>  s == W^2 z
        const Eigen::VectorXd w2z = apply_w2(layout, w, z);
        CHECK((w2z - s).norm() < 1e-10 * (1.0 + s.norm()));
        // lambda o (lambda \ d) == d
        Eigen::VectorXd d(layout.total);
        for (int i = 0; i < layout.total; ++i)
        {
            d[i] = u(rng);
        }
        const Eigen::VectorXd back = jordan_product(layout, wz, inverse_product(layout, wz, d));
        CHECK((back - d).norm() < 1e-9);
    }
}

TEST_CASE("max cone step lands on the boundary")
{
    Eigen::VectorXd x(3), dx(3);
    x << 2.0, 0.5, 0.0;
    dx << -1.0, 1.0, 0.5;
    const double t = soc_max_step(x, dx);
    const Eigen::VectorXd edge = x + t * dx;
    CHECK(edge[0] == doctest::Approx(edge.tail(2).norm()).epsilon(1e-12));
    // directions into the cone never leave it
    dx << 1.0, 0.1, 0.0;
    CHECK(std::isinf(soc_max_step(x, dx)));
}

TEST_CASE("CBF export lists every constraint family")
{
    ConicProblem p;
    const int x = p.add_variable("x", 0.0, 3.0);
    const int t = p.add_variable("t");
    p.add_cost(t, 1.0);
    p.add_equality(AffineExpr(-1.0).add(x, 1.0).add(t, 1.0));
    p.add_quadratic_epigraph({AffineExpr().add(x, 1.0)}, t);
    std::ostringstream out;
    write_cbf(p, out);
    const std::string text = out.str();
    CHECK(text.find("VER\n3") != std::string::npos);
    CHECK(text.find("L= 1") != std::string::npos);
    CHECK(text.find("L+ 2") != std::string::npos);
    CHECK(text.find("Q 3") != std::string::npos);
}
