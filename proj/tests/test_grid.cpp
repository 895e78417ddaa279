#include "swapgrid/error.hpp"
#include "swapgrid/generate.hpp"
#include "swapgrid/grid.hpp"

#include <doctest.h>

#include <string>

using namespace swapgrid;
using nlohmann::json;

namespace
{

json two_bus_doc()
{
    return json::parse(R"({
      "format": "swapgrid-feeder/1", "base_mva": 10.0, "root": 1, "v_root": 1.0,
      "buses": [
        {"id": 1, "v_min": 0.81, "v_max": 1.21, "p_bg": 0.0, "q_bg": 0.0,
         "generator": {"p_min": 0, "p_max": 20, "q_min": -10, "q_max": 10,
                       "cost_quadratic": 0.5, "cost_linear": 20}},
        {"id": 7, "v_min": 0.81, "v_max": 1.21, "p_bg": 2.0, "q_bg": 1.0, "station_id": 0}
      ],
      "lines": [{"from": 1, "to": 7, "r": 0.01, "x": 0.02, "s_max": 30}]
    })");
}

void expect_error(const json& doc, ErrorKind kind, const std::string& path)
{
    try
    {
        grid::from_json(doc);
        FAIL("expected an error");
    }
    catch (const Error& e)
    {
        CHECK(e.kind() == kind);
        CHECK(e.path() == path);
    }
}

} // namespace

TEST_CASE("feeder document is converted to per-unit")
{
    const auto g = grid::from_json(two_bus_doc());
    REQUIRE(g.num_buses() == 2);
    CHECK(g.bus(7).p_bg == doctest::Approx(0.2));
    CHECK(g.bus(7).q_bg == doctest::Approx(0.1));
    const auto& gen = *g.bus(1).generator;
    CHECK(gen.p_max == doctest::Approx(2.0));
    // 0.5 $/MW^2 * (10 MW/pu)^2 and 20 $/MW * 10 MW/pu
    CHECK(gen.cost_quadratic == doctest::Approx(50.0));
    CHECK(gen.cost_linear == doctest::Approx(200.0));
    CHECK(gen.cost(0.3) == doctest::Approx(0.5 * 9.0 + 20.0 * 3.0));
    CHECK(g.lines[0].s_max == doctest::Approx(3.0));
    CHECK(g.station_buses() == std::vector<int>{7});
    CHECK(g.bus_of_station(0) == 7);
    CHECK_FALSE(g.bus_of_station(1).has_value());
}

TEST_CASE("to_json inverts from_json")
{
    const auto g = grid::from_json(two_bus_doc());
    const auto back = grid::from_json(grid::to_json(g));
    CHECK(back.bus(7).p_bg == doctest::Approx(g.bus(7).p_bg));
    CHECK(back.bus(1).generator->cost_quadratic == doctest::Approx(g.bus(1).generator->cost_quadratic));
    CHECK(back.lines[0].x == g.lines[0].x);

    const auto big = generate::standin_feeder56();
    const auto again = grid::from_json(grid::to_json(big));
    REQUIRE(again.num_buses() == 56);
    for (int i = 0; i < big.num_lines(); ++i)
    {
        CHECK(again.lines[static_cast<std::size_t>(i)].r == big.lines[static_cast<std::size_t>(i)].r);
    }
}

TEST_CASE("schema errors carry a pointer into the document")
{
    auto doc = two_bus_doc();
    doc["buses"][1]["v_min"] = 2.0;
    expect_error(doc, ErrorKind::SchemaViolation, "/buses/1/v_min");

    doc = two_bus_doc();
    doc["lines"][0]["to"] = 9;
    expect_error(doc, ErrorKind::DanglingReference, "/lines/0/to");

    doc = two_bus_doc();
    doc["lines"][0]["r"] = -0.1;
    expect_error(doc, ErrorKind::SchemaViolation, "/lines/0/r");

    doc = two_bus_doc();
    doc["base_mva"] = 0.0;
    expect_error(doc, ErrorKind::SchemaViolation, "/base_mva");

    doc = two_bus_doc();
    doc["buses"][0]["station_id"] = 0;
    expect_error(doc, ErrorKind::SchemaViolation, "/buses/1/station_id");
}

TEST_CASE("non-radial topologies are rejected")
{
    auto doc = two_bus_doc();
    doc["buses"].push_back({{"id", 8}, {"v_min", 0.81}, {"v_max", 1.21}, {"p_bg", 0.0}, {"q_bg", 0.0}});
    // disconnected bus 8
    expect_error(doc, ErrorKind::NonTreeTopology, "/lines");
    // cycle 1-7-8-1
    doc["lines"].push_back({{"from", 7}, {"to", 8}, {"r", 0.01}, {"x", 0.01}, {"s_max", 5}});
    doc["lines"].push_back({{"from", 8}, {"to", 1}, {"r", 0.01}, {"x", 0.01}, {"s_max", 5}});
    expect_error(doc, ErrorKind::NonTreeTopology, "/lines");
}

TEST_CASE("lines oriented towards the root are not radial")
{
    auto g = grid::from_json(two_bus_doc());
    std::swap(g.lines[0].from, g.lines[0].to);
    CHECK_FALSE(grid::validate_radial(g).ok);
}

TEST_CASE("generated feeders are radial")
{
    for (std::uint64_t seed = 1; seed <= 30; ++seed)
    {
        const auto g = generate::random_feeder(6 + static_cast<int>(seed % 10), 2 + static_cast<int>(seed % 3), seed);
        CHECK(grid::validate_radial(g).ok);
        CHECK(g.num_lines() == g.num_buses() - 1);
    }
    CHECK(grid::validate_radial(generate::standin_feeder56()).ok);
}

TEST_CASE("net injection")
{
    const auto g = grid::from_json(two_bus_doc());
    const auto [p, q] = grid::net_injection(g, 7, 0.0, 0.0, 0.05);
    CHECK(p == doctest::Approx(-0.25));
    CHECK(q == doctest::Approx(-0.1));
    CHECK_THROWS_AS(grid::net_injection(g, 1, 0.0, 0.0, 0.05), Error);
    CHECK_THROWS_AS(g.index_of(42), Error);
}

TEST_CASE("malformed JSON is a schema violation")
{
    try
    {
        grid::load_feeder("{not json");
        FAIL("expected an error");
    }
    catch (const Error& e)
    {
        CHECK(e.kind() == ErrorKind::SchemaViolation);
    }
    CHECK_THROWS_AS(grid::load_feeder_file("/nonexistent/feeder.json"), Error);
}
