#include "swapgrid/error.hpp"
#include "swapgrid/generate.hpp"
#include "swapgrid/simnet.hpp"

#include <doctest.h>

#include <sstream>

using namespace swapgrid;
using simnet::Algo;
using simnet::EntityId;
using simnet::Tag;
using nlohmann::json;

TEST_CASE("entity and tag names round-trip")
{
    for (const auto& id : {EntityId::utility(), EntityId::op(), EntityId::ev(17), EntityId::all_evs()})
    {
        CHECK(simnet::parse_entity(simnet::to_string(id)) == id);
    }
    CHECK(simnet::to_string(EntityId::all_evs()) == "ev:*");
    CHECK(simnet::to_string(EntityId::ev(3)) == "ev:3");
    for (Tag t : {Tag::WEstimate, Tag::AggregateAssign, Tag::LambdaPrice, Tag::MuPrice, Tag::EvChoice})
    {
        CHECK(simnet::parse_tag(simnet::to_string(t)) == t);
    }
    CHECK_THROWS_AS(simnet::parse_entity("station:1"), Error);
    CHECK_THROWS_AS(simnet::parse_tag("Gossip"), Error);
}

TEST_CASE("link table")
{
    const auto U = EntityId::utility();
    const auto O = EntityId::op();
    CHECK(simnet::link_allowed(Algo::Admm, U, O, Tag::WEstimate));
    CHECK(simnet::link_allowed(Algo::Admm, O, U, Tag::AggregateAssign));
    CHECK_FALSE(simnet::link_allowed(Algo::Admm, O, U, Tag::LambdaPrice));
    CHECK_FALSE(simnet::link_allowed(Algo::Admm, O, EntityId::ev(0), Tag::LambdaPrice));

    CHECK(simnet::link_allowed(Algo::Dual, O, U, Tag::LambdaPrice));
    CHECK(simnet::link_allowed(Algo::Dual, U, O, Tag::WEstimate));
    CHECK(simnet::link_allowed(Algo::Dual, O, EntityId::all_evs(), Tag::MuPrice));
    CHECK(simnet::link_allowed(Algo::Dual, EntityId::ev(2), O, Tag::EvChoice));
    CHECK_FALSE(simnet::link_allowed(Algo::Dual, EntityId::ev(2), U, Tag::EvChoice));
    CHECK_FALSE(simnet::link_allowed(Algo::Dual, EntityId::ev(2), EntityId::ev(3), Tag::EvChoice));
    CHECK_FALSE(simnet::link_allowed(Algo::Dual, O, U, Tag::MuPrice));
}

TEST_CASE("transport refuses messages off the link table")
{
    simnet::Network net(Algo::Admm);
    const auto& m = net.send(0, EntityId::utility(), EntityId::op(), Tag::WEstimate, {{"w_mw", {0.1, 0.2}}});
    CHECK(m.payload["w_mw"][1] == 0.2);
    try
    {
        net.send(0, EntityId::op(), EntityId::utility(), Tag::EvChoice, {{"station", 1}});
        FAIL("expected an error");
    }
    catch (const Error& e)
    {
        CHECK(e.kind() == ErrorKind::TransportViolation);
    }
    CHECK(net.log().size() == 1);
}

TEST_CASE("message logs round-trip through JSON lines")
{
    simnet::MessageLog log(Algo::Dual);
    log.append({0, EntityId::op(), EntityId::all_evs(), Tag::LambdaPrice, {{"lambda", {-20.5, 3.25}}}});
    log.append({0, EntityId::ev(4), EntityId::op(), Tag::EvChoice, {{"station", 1}}});
    std::stringstream ss;
    log.write_jsonl(ss);
    const std::string text = ss.str();
    CHECK(text.find("\"ev:*\"") != std::string::npos);
    CHECK(text.rfind("{\"round\":0,\"from\":\"operator\"", 0) == 0);
    const auto back = simnet::MessageLog::read_jsonl(ss, Algo::Dual);
    REQUIRE(back.size() == 2);
    CHECK(back.messages()[1].from == EntityId::ev(4));
    CHECK(back.messages()[0].payload == log.messages()[0].payload);

    std::stringstream bad("{\"round\":0}\n");
    CHECK_THROWS_AS(simnet::MessageLog::read_jsonl(bad, Algo::Dual), Error);
}

TEST_CASE("audit flags each kind of leak")
{
    const auto U = EntityId::utility();
    const auto O = EntityId::op();
    {
        simnet::MessageLog log(Algo::Admm);
        log.append({1, O, U, Tag::AggregateAssign, {{"u_j", {1.0, 2.0}}, {"x", {0.3}}}});
        const auto r = simnet::audit_privacy(log);
        CHECK_FALSE(r.ok);
        bool a = false;
        bool b = false;
        for (const auto& v : r.violations)
        {
            a = a || v.rule == 'a';
            b = b || v.rule == 'b';
        }
        CHECK(a);
        CHECK(b);
    }
    {
        simnet::MessageLog log(Algo::Admm);
        log.append({1, O, U, Tag::AggregateAssign, {{"u_j", {{1.0, 0.0}, {0.0, 1.0}}}}});
        const auto r = simnet::audit_privacy(log);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].rule == 'b');
    }
    {
        simnet::MessageLog log(Algo::Dual);
        log.append({1, O, EntityId::all_evs(), Tag::LambdaPrice, {{"lambda", {1.0}}, {"v", {1.0, 0.98}}}});
        const auto r = simnet::audit_privacy(log);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].rule == 'c');
        CHECK(r.violations[0].message == 0);
    }
    {
        simnet::MessageLog log(Algo::Dual);
        log.append({1, EntityId::ev(0), EntityId::ev(1), Tag::EvChoice, {{"station", 0}}});
        const auto r = simnet::audit_privacy(log);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].rule == 'd');
    }
}

TEST_CASE("sessions are private and match direct calls bit for bit")
{
    const auto fx = generate::six_bus_fixture(8, true);
    const auto direct_admm = admm::run_admm(fx.grid, fx.scenario);
    const auto admm_session = simnet::run_admm_session(fx.grid, fx.scenario);
    CHECK(simnet::audit_privacy(admm_session.log).ok);
    CHECK(admm_session.result.objective == direct_admm.objective);
    CHECK(admm_session.result.iterations == direct_admm.iterations);
    CHECK(admm_session.result.assignment.u == direct_admm.assignment.u);
    CHECK(admm_session.result.flow.v == direct_admm.flow.v);

    dual::DualParams p;
    p.max_iters = 400;
    const auto direct_dual = dual::run_dual(fx.grid, fx.scenario, p);
    for (bool concurrent : {false, true})
    {
        const auto s = simnet::run_dual_session(fx.grid, fx.scenario, p, {concurrent});
        CHECK(simnet::audit_privacy(s.log).ok);
        CHECK(s.result.objective == direct_dual.objective);
        CHECK(s.result.iterations == direct_dual.iterations);
        CHECK(s.result.lambda == direct_dual.lambda);
        CHECK(s.result.mu == direct_dual.mu);
        CHECK(s.result.assignment.u == direct_dual.assignment.u);
        // Each round: prices to the utility and the EVs, the utility's answer,
        // one choice per EV.
        CHECK(s.log.size() == static_cast<std::size_t>(s.result.iterations) *
                                  (4 + static_cast<std::size_t>(fx.scenario.num_evs())));
    }
}
