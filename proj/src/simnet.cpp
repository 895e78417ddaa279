#include "swapgrid/simnet.hpp"

#include "swapgrid/error.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

namespace swapgrid::simnet
{

using nlohmann::json;

std::string to_string(const EntityId& id)
{
    switch (id.kind)
    {
    case EntityKind::Utility:
        return "utility";
    case EntityKind::Operator:
        return "operator";
    case EntityKind::Ev:
        return id.index < 0 ? "ev:*" : "ev:" + std::to_string(id.index);
    }
    return "?";
}

EntityId parse_entity(const std::string& text)
{
    if (text == "utility")
        return EntityId::utility();
    if (text == "operator")
        return EntityId::op();
    if (text == "ev:*")
        return EntityId::all_evs();
    if (text.rfind("ev:", 0) == 0)
    {
        try
        {
            std::size_t used = 0;
            const int a = std::stoi(text.substr(3), &used);
            if (used == text.size() - 3 && a >= 0)
                return EntityId::ev(a);
        }
        catch (const std::exception&)
        {
        }
    }
    throw Error(ErrorKind::SchemaViolation, "unknown entity '" + text + "'");
}

namespace
{

struct TagName
{
    Tag tag;
    const char* name;
    const char* field;
};

constexpr TagName kTags[] = {
    {Tag::WEstimate, "WEstimate", "w_mw"},
    {Tag::AggregateAssign, "AggregateAssign", "u_j"},
    {Tag::LambdaPrice, "LambdaPrice", "lambda"},
    {Tag::MuPrice, "MuPrice", "mu"},
    {Tag::EvChoice, "EvChoice", "station"},
};

const TagName& tag_info(Tag tag)
{
    for (const auto& t : kTags)
        if (t.tag == tag)
            return t;
    throw Error(ErrorKind::InvalidArgument, "unknown tag");
}

// Field names that describe one EV or the grid. Keys outside a tag's schema
// that are not listed here still count against the recipient's rule.
const std::set<std::string> kPerEvFields = {"position", "x_km", "y_km", "gamma", "charge", "range_km",
                                            "distances", "d", "station", "u_a", "ev"};
const std::set<std::string> kGridFields = {"impedance", "r_ohm", "x_ohm", "r_pu", "x_pu", "flows",
                                           "p", "q", "l", "v", "voltages", "cost", "generation", "lines"};

std::vector<double> read_vector(const Message& m)
{
    return m.payload.at(tag_info(m.tag).field).get<std::vector<double>>();
}

} // namespace

std::string to_string(Tag tag)
{
    return tag_info(tag).name;
}

Tag parse_tag(const std::string& text)
{
    for (const auto& t : kTags)
        if (text == t.name)
            return t.tag;
    throw Error(ErrorKind::SchemaViolation, "unknown message tag '" + text + "'");
}

void MessageLog::write_jsonl(std::ostream& out) const
{
    for (const auto& m : messages_)
    {
        // Written by hand to keep the documented key order.
        out << "{\"round\":" << m.round << ",\"from\":" << json(to_string(m.from)).dump()
            << ",\"to\":" << json(to_string(m.to)).dump() << ",\"tag\":" << json(to_string(m.tag)).dump()
            << ",\"payload\":" << m.payload.dump() << "}\n";
    }
}

MessageLog MessageLog::read_jsonl(std::istream& in, Algo algo)
{
    MessageLog log(algo);
    std::string text;
    int lineno = 0;
    while (std::getline(in, text))
    {
        ++lineno;
        if (text.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            const auto line = json::parse(text);
            Message m;
            m.round = line.at("round").get<int>();
            m.from = parse_entity(line.at("from").get<std::string>());
            m.to = parse_entity(line.at("to").get<std::string>());
            m.tag = parse_tag(line.at("tag").get<std::string>());
            m.payload = line.at("payload");
            log.append(std::move(m));
        }
        catch (const json::exception& e)
        {
            throw Error(ErrorKind::SchemaViolation, "message log line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return log;
}

bool link_allowed(Algo algo, const EntityId& from, const EntityId& to, Tag tag)
{
    const auto U = EntityKind::Utility;
    const auto O = EntityKind::Operator;
    const auto E = EntityKind::Ev;
    if (algo == Algo::Admm)
    {
        return (from.kind == U && to.kind == O && tag == Tag::WEstimate) ||
               (from.kind == O && to.kind == U && tag == Tag::AggregateAssign);
    }
    return (from.kind == O && to.kind == U && tag == Tag::LambdaPrice) ||
           (from.kind == U && to.kind == O && tag == Tag::WEstimate) ||
           (from.kind == O && to.kind == E && (tag == Tag::LambdaPrice || tag == Tag::MuPrice)) ||
           (from.kind == E && from.index >= 0 && to.kind == O && tag == Tag::EvChoice);
}

const Message& Network::send(int round, EntityId from, EntityId to, Tag tag, json payload)
{
    if (!link_allowed(log_.algo(), from, to, tag))
    {
        throw Error(ErrorKind::TransportViolation,
                    to_string(tag) + " not allowed on " + to_string(from) + " -> " + to_string(to));
    }
    log_.append(Message{round, from, to, tag, std::move(payload)});
    return log_.messages().back();
}

AuditReport audit_privacy(const MessageLog& log)
{
    AuditReport report;
    const auto flag = [&](char rule, std::size_t i, std::string detail) {
        report.violations.push_back({rule, i, std::move(detail)});
    };
    const auto& msgs = log.messages();
    for (std::size_t i = 0; i < msgs.size(); ++i)
    {
        const auto& m = msgs[i];
        const std::string field = tag_info(m.tag).field;
        const std::string link = to_string(m.tag) + " " + to_string(m.from) + " -> " + to_string(m.to);

        if (m.from.kind == EntityKind::Ev && m.to.kind == EntityKind::Ev)
            flag('d', i, "EV to EV message: " + link);

        std::vector<std::string> keys;
        if (m.payload.is_object())
            for (const auto& [k, v] : m.payload.items())
                keys.push_back(k);
        else
            keys.push_back("<non-object payload>");

        if (m.to.kind == EntityKind::Utility)
        {
            for (const auto& k : keys)
                if (kPerEvFields.count(k) || k != field)
                    flag('a', i, "field '" + k + "' reaches the utility: " + link);
        }

        if (log.algo() == Algo::Admm && m.from.kind == EntityKind::Operator && m.to.kind == EntityKind::Utility)
        {
            bool aggregate = m.tag == Tag::AggregateAssign && keys.size() == 1 && keys[0] == "u_j" &&
                             m.payload["u_j"].is_array();
            if (aggregate)
                for (const auto& v : m.payload["u_j"])
                    aggregate = aggregate && v.is_number();
            if (!aggregate)
                flag('b', i, "non-aggregate assignment data: " + link);
        }

        if (log.algo() == Algo::Dual && (m.to.kind == EntityKind::Operator || m.to.kind == EntityKind::Ev))
        {
            for (const auto& k : keys)
                if (kGridFields.count(k) || k != field)
                    flag('c', i, "field '" + k + "' beyond prices and loads: " + link);
        }
    }
    report.ok = report.violations.empty();
    return report;
}

AdmmSession run_admm_session(const grid::Grid& grid, const fleet::Scenario& s, const admm::AdmmParams& params,
                             const conic::ConicSolver& solver)
{
    if (!(params.rho > 0.0))
        throw Error(ErrorKind::InvalidArgument, "rho must be positive");
    if (params.max_iters < 1)
        throw Error(ErrorKind::InvalidArgument, "max_iters must be at least 1");
    fleet::check_against_grid(s, grid);

    Network net(Algo::Admm);
    const auto U = EntityId::utility();
    const auto O = EntityId::op();

    admm::Operator op(s, params.rho, solver);
    admm::Utility util(grid, op.loads(), s.r_mw, params.rho, solver);
    admm::Monitor monitor(params, s.r_mw);

    std::vector<int> buses;
    for (const auto& st : s.stations)
        buses.push_back(st.bus);

    auto uj_at_utility = read_vector(net.send(0, O, U, Tag::AggregateAssign, {{"u_j", op.start()}}));
    int n = 0;
    while (n < params.max_iters)
    {
        const auto& w = util.x_update(uj_at_utility);
        const auto w_at_operator = read_vector(net.send(n + 1, U, O, Tag::WEstimate, {{"w_mw", w}}));
        const auto uj = op.step(w_at_operator);
        uj_at_utility = read_vector(net.send(n + 1, O, U, Tag::AggregateAssign, {{"u_j", uj}}));
        util.lambda_update(uj_at_utility);
        ++n;

        // The monitor sees both sides; it is part of the harness, not a party.
        admm::AdmmRecord rec;
        rec.iter = n;
        rec.lambda = op.lambda();
        rec.w = util.flow().w;
        rec.uj = uj;
        rec.residual = admm::consensus_residual(rec.w, op.loads(), s.r_mw, uj);
        rec.objective = util.flow().generation_cost + op.travel_cost();
        if (monitor.observe(std::move(rec), util.flow(), op.assignment()))
            break;
    }
    return {std::move(monitor).finish(std::move(buses), n), net.take_log()};
}

DualSession run_dual_session(const grid::Grid& grid, const fleet::Scenario& s, const dual::DualParams& params,
                             const SessionOptions& options, const conic::ConicSolver& solver)
{
    if (!(params.rho1 > 0.0) || !(params.rho2 > 0.0))
        throw Error(ErrorKind::InvalidArgument, "step scales must be positive");
    if (params.max_iters < 1)
        throw Error(ErrorKind::InvalidArgument, "max_iters must be at least 1");
    fleet::check_against_grid(s, grid);
    fleet::check_capacity(s);

    Network net(Algo::Dual);
    const auto U = EntityId::utility();
    const auto O = EntityId::op();

    dual::Operator op(s, params);
    dual::Utility util(grid, op.loads(), s.r_mw, params.window, solver);
    std::vector<dual::EvAgent> evs;
    evs.reserve(s.evs.size());
    for (const auto& ev : s.evs)
        evs.emplace_back(ev, s.stations, s.alpha_per_km, s.r_mw);
    dual::Monitor monitor(params, s.r_mw);

    const std::size_t A = evs.size();
    std::vector<int> responses(A);
    std::vector<double> ev_values(A);
    const auto respond_range = [&](std::size_t lo, std::size_t hi, const std::vector<double>& lambda,
                                   const std::vector<double>& mu) {
        for (std::size_t a = lo; a < hi; ++a)
        {
            responses[a] = evs[a].respond(lambda, mu);
            ev_values[a] = evs[a].value(lambda, mu);
        }
    };
    const std::size_t workers =
        options.concurrent ? std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8) : 1;

    int n = 0;
    std::vector<int> choices(A);
    while (n < params.max_iters)
    {
        const std::vector<double> lambda = op.lambda();
        const std::vector<double> mu = op.mu();
        const auto lambda_at_utility = read_vector(net.send(n, O, U, Tag::LambdaPrice, {{"lambda", lambda}}));
        const auto lambda_at_evs =
            read_vector(net.send(n, O, EntityId::all_evs(), Tag::LambdaPrice, {{"lambda", lambda}}));
        const auto mu_at_evs = read_vector(net.send(n, O, EntityId::all_evs(), Tag::MuPrice, {{"mu", mu}}));

        const auto& w = util.respond(lambda_at_utility);
        const auto w_at_operator = read_vector(net.send(n, U, O, Tag::WEstimate, {{"w_mw", w}}));

        if (workers > 1 && A > 1)
        {
            // Round barrier: every EV answers the same broadcast, results land
            // in per-EV slots and are sent in index order below.
            std::vector<std::thread> pool;
            const std::size_t chunk = (A + workers - 1) / workers;
            for (std::size_t lo = 0; lo < A; lo += chunk)
                pool.emplace_back(respond_range, lo, std::min(A, lo + chunk), std::cref(lambda_at_evs),
                                  std::cref(mu_at_evs));
            for (auto& t : pool)
                t.join();
        }
        else
        {
            respond_range(0, A, lambda_at_evs, mu_at_evs);
        }

        double value = util.value() + op.price_constant(lambda, mu);
        for (std::size_t a = 0; a < A; ++a)
        {
            value += ev_values[a];
            const auto& m = net.send(n, EntityId::ev(static_cast<int>(a)), O, Tag::EvChoice, {{"station", responses[a]}});
            choices[a] = m.payload.at("station").get<int>();
        }
        const auto uj = op.update(n, w_at_operator, choices);

        dual::DualRecord rec;
        rec.iter = n;
        rec.lambda = lambda;
        rec.mu = mu;
        rec.uj = uj;
        rec.w = w;
        rec.dual_value = value;
        for (std::size_t j = 0; j < uj.size(); ++j)
        {
            rec.viol_w.push_back(w[j] - opf::station_load_mw(op.loads()[j], s.r_mw, uj[j]));
            rec.viol_cap.push_back(uj[j] - s.stations[j].available);
        }
        ++n;
        if (monitor.observe(std::move(rec)))
            break;
    }
    return {dual::finish(s, util, op, monitor, n), net.take_log()};
}

} // namespace swapgrid::simnet
