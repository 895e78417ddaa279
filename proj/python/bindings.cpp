// Python bindings. Documents cross the boundary as JSON text, results come
// back as dicts with numpy arrays.

#include "swapgrid/admm.hpp"
#include "swapgrid/dualdecomp.hpp"
#include "swapgrid/error.hpp"
#include "swapgrid/generate.hpp"
#include "swapgrid/oracle.hpp"
#include "swapgrid/simnet.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace swapgrid;

namespace
{

py::dict flow_dict(const opf::PowerFlowSolution& f)
{
    py::dict d;
    d["v"] = f.v;
    d["l"] = f.l;
    d["P"] = f.P;
    d["Q"] = f.Q;
    d["pg"] = f.pg;
    d["qg"] = f.qg;
    d["w_mw"] = f.w;
    d["generation_cost"] = f.generation_cost;
    return d;
}

py::dict base_result(const opf::PowerFlowSolution& flow, const fleet::Matrix& u, double objective)
{
    py::dict d;
    d["objective"] = objective;
    d["u"] = u;
    d["flow"] = flow_dict(flow);
    d["critical_count"] = fleet::count_critical(u);
    return d;
}

std::string log_text(const simnet::MessageLog& log)
{
    std::ostringstream ss;
    log.write_jsonl(ss);
    return ss.str();
}

simnet::Algo parse_algo(const std::string& algo)
{
    if (algo == "admm")
        return simnet::Algo::Admm;
    if (algo == "dual")
        return simnet::Algo::Dual;
    throw Error(ErrorKind::InvalidArgument, "algo must be 'admm' or 'dual'");
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "EV battery-swap scheduling with optimal power flow on radial feeders";

    // Library errors surface as ValueError("<kind>: <message> at <path>").
    py::register_exception_translator([](std::exception_ptr p) {
        try
        {
            if (p)
                std::rethrow_exception(p);
        }
        catch (const Error& e)
        {
            const std::string where = e.path().empty() ? "" : " at " + e.path();
            py::set_error(PyExc_ValueError, (std::string(to_string(e.kind())) + ": " + e.what() + where).c_str());
        }
    });

    py::class_<grid::Grid>(m, "Grid")
        .def_static("from_json", [](const std::string& text) { return grid::load_feeder(text); })
        .def_static("from_file", &grid::load_feeder_file)
        .def_static("standin56", &generate::standin_feeder56)
        .def_static("random", &generate::random_feeder, py::arg("buses"), py::arg("stations"), py::arg("seed"))
        .def("to_json", [](const grid::Grid& g) { return grid::to_json(g).dump(); })
        .def_property_readonly("num_buses", &grid::Grid::num_buses)
        .def_property_readonly("num_lines", &grid::Grid::num_lines)
        .def_property_readonly("station_buses", &grid::Grid::station_buses);

    py::class_<fleet::Scenario>(m, "Scenario")
        .def_static("from_json", &fleet::load_scenario)
        .def_static("from_file", &fleet::load_scenario_file)
        .def_static(
            "generate",
            [](const grid::Grid& g, int evs, const std::string& policy, std::uint64_t seed, double area_km) {
                generate::ScenarioOptions opt;
                opt.evs = evs;
                opt.policy = generate::parse_policy(policy);
                opt.seed = seed;
                opt.area_km = area_km;
                return generate::generate_scenario(g, opt);
            },
            py::arg("grid"), py::arg("evs") = 400, py::arg("policy") = "i", py::arg("seed") = 1,
            py::arg("area_km") = 4.0)
        .def("to_json", [](const fleet::Scenario& s) { return fleet::to_json(s).dump(); })
        .def_property_readonly("num_evs", &fleet::Scenario::num_evs)
        .def_property_readonly("num_stations", &fleet::Scenario::num_stations)
        .def_readonly("r_mw", &fleet::Scenario::r_mw)
        .def_readonly("alpha_per_km", &fleet::Scenario::alpha_per_km);

    m.def("random_fixture", [](std::uint64_t seed) {
        auto fx = generate::random_fixture(seed);
        return py::make_tuple(fx.grid, fx.scenario);
    });

    m.def("distances", [](const fleet::Scenario& s) { return fleet::distances(s.evs, s.stations); });
    m.def("count_critical", [](const fleet::Matrix& u) { return fleet::count_critical(u); });

    m.def("solve_centralized", [](const grid::Grid& g, const fleet::Scenario& s) {
        const auto r = oracle::solve_centralized_relaxed(g, s);
        return base_result(r.flow, r.assignment.u, r.objective);
    });

    m.def(
        "enumerate_binary",
        [](const grid::Grid& g, const fleet::Scenario& s, long cap) {
            const auto r = oracle::enumerate_binary(g, s, cap);
            auto d = base_result(r.flow, r.best.u, r.objective);
            d["opf_solves"] = r.opf_solves;
            return d;
        },
        py::arg("grid"), py::arg("scenario"), py::arg("cap") = oracle::kDefaultEnumerationCap);

    m.def(
        "run_admm",
        [](const grid::Grid& g, const fleet::Scenario& s, double rho, int max_iters, bool session) {
            admm::AdmmParams p;
            p.rho = rho;
            p.max_iters = max_iters;
            admm::AdmmResult r;
            std::string log;
            if (session)
            {
                auto out = simnet::run_admm_session(g, s, p);
                r = std::move(out.result);
                log = log_text(out.log);
            }
            else
            {
                r = admm::run_admm(g, s, p);
            }
            auto d = base_result(r.flow, r.assignment.u, r.objective);
            d["converged"] = r.converged;
            d["iterations"] = r.iterations;
            d["residual"] = r.residual;
            if (session)
                d["messages"] = log;
            return d;
        },
        py::arg("grid"), py::arg("scenario"), py::arg("rho") = 1.0, py::arg("max_iters") = 500,
        py::arg("session") = false);

    m.def(
        "run_dual",
        [](const grid::Grid& g, const fleet::Scenario& s, double rho1, double rho2, int max_iters, bool session) {
            dual::DualParams p;
            p.rho1 = rho1;
            p.rho2 = rho2;
            p.max_iters = max_iters;
            dual::DualResult r;
            std::string log;
            if (session)
            {
                auto out = simnet::run_dual_session(g, s, p);
                r = std::move(out.result);
                log = log_text(out.log);
            }
            else
            {
                r = dual::run_dual(g, s, p);
            }
            auto d = base_result(r.flow, r.assignment.u, r.objective);
            d["converged"] = r.converged;
            d["iterations"] = r.iterations;
            d["residual"] = r.residual;
            d["dual_value"] = r.dual_value;
            d["complementarity"] = r.complementarity;
            d["lambda"] = r.lambda;
            d["mu"] = r.mu;
            if (session)
                d["messages"] = log;
            return d;
        },
        py::arg("grid"), py::arg("scenario"), py::arg("rho1") = 50.0, py::arg("rho2") = 0.1,
        py::arg("max_iters") = 5000, py::arg("session") = false);

    m.def(
        "audit_privacy",
        [](const std::string& jsonl, const std::string& algo) {
            std::istringstream in(jsonl);
            const auto report = simnet::audit_privacy(simnet::MessageLog::read_jsonl(in, parse_algo(algo)));
            py::list violations;
            for (const auto& v : report.violations)
            {
                py::dict d;
                d["rule"] = std::string(1, v.rule);
                d["message"] = v.message;
                d["detail"] = v.detail;
                violations.append(d);
            }
            py::dict d;
            d["ok"] = report.ok;
            d["violations"] = violations;
            return d;
        },
        py::arg("messages"), py::arg("algo"));

    m.def("rounding_gap", [](const grid::Grid& g, const fleet::Scenario& s, const fleet::Matrix& u, long cap) {
        const auto r = oracle::rounding_gap(g, s, {u, fleet::Mode::Relaxed}, cap);
        py::dict d;
        d["gap"] = r.gap;
        d["rounded_objective"] = r.rounded_objective;
        d["best_objective"] = r.best_objective;
        d["rounded"] = r.rounded.u;
        return d;
    }, py::arg("grid"), py::arg("scenario"), py::arg("u"), py::arg("cap") = oracle::kDefaultEnumerationCap);

    m.def("exactness", [](const grid::Grid& g, const py::dict& flow) {
        opf::PowerFlowSolution f;
        f.v = flow["v"].cast<std::vector<double>>();
        f.l = flow["l"].cast<std::vector<double>>();
        f.P = flow["P"].cast<std::vector<double>>();
        f.Q = flow["Q"].cast<std::vector<double>>();
        const auto r = opf::exactness_residuals(g, f);
        py::dict d;
        d["max_relative"] = r.max_relative;
        d["exact"] = r.exact;
        return d;
    });
}
