#include "cli.hpp"

#include "swapgrid/error.hpp"
#include "swapgrid/generate.hpp"
#include "swapgrid/report.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace swapgrid;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run cli_run(std::vector<std::string> args)
{
    args.insert(args.begin(), "swapgrid");
    std::vector<const char*> argv;
    for (const auto& a : args)
    {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("swapgrid_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const std::string data_dir = SWAPGRID_DATA_DIR;

} // namespace

TEST_CASE("solution and summary documents round-trip")
{
    report::Solution sol;
    sol.objective = 12.5;
    sol.flow.v = {1.0, 0.99};
    sol.flow.w = {0.03};
    sol.flow.generation_cost = 12.0;
    sol.assignment.u = fleet::Matrix::Identity(2, 2);
    sol.assignment.mode = fleet::Mode::Binary;
    const auto back = report::solution_from_json(report::to_json(sol));
    CHECK(back.objective == 12.5);
    CHECK(back.flow.v == sol.flow.v);
    CHECK(back.assignment.u == sol.assignment.u);
    CHECK(back.assignment.mode == fleet::Mode::Binary);

    report::Summary s{"dual", 10.0, 42, 1e-6, 2, 0.001, true, false, 0.01};
    const auto sb = report::summary_from_json(report::to_json(s));
    CHECK(sb.algo == "dual");
    CHECK(sb.iters == 42);
    CHECK(sb.rounding_gap == 0.001);
    CHECK_FALSE(sb.converged);

    auto doc = report::to_json(sol);
    doc["assignment"]["u"][1] = json::array({1.0});
    CHECK_THROWS_AS(report::solution_from_json(doc), Error);
}

TEST_CASE("csv reader rejects ragged rows and text cells")
{
    std::stringstream ok("a,b\n1,2\n3,4.5\n");
    const auto t = report::read_csv(ok);
    CHECK(t.rows.size() == 2);
    CHECK(t.rows[1][1] == 4.5);
    CHECK(t.column("b") == 1);
    CHECK(t.column("c") == -1);
    std::stringstream ragged("a,b\n1\n");
    CHECK_THROWS_AS(report::read_csv(ragged), Error);
    std::stringstream text("a\nx\n");
    CHECK_THROWS_AS(report::read_csv(text), Error);
}

TEST_CASE("run writes artifacts for every algorithm and compare tabulates them")
{
    const auto dir = scratch("run");
    const std::string feeder = data_dir + "/six_bus_feeder.json";
    const std::string scenario = data_dir + "/six_bus_binding.json";
    std::vector<std::string> outs;
    for (const std::string algo : {"centralized", "admm", "dual", "oracle"})
    {
        const auto out = (dir / algo).string();
        std::vector<std::string> args{"run", "--feeder", feeder, "--scenario", scenario, "--algo", algo, "--out", out};
        if (algo == "admm" || algo == "dual")
        {
            args.push_back("--session");
        }
        const auto r = cli_run(args);
        CHECK_MESSAGE(r.code == 0, r.err);
        CHECK(fs::exists(fs::path(out) / "solution.json"));
        CHECK(fs::exists(fs::path(out) / "summary.json"));
        CHECK(fs::exists(fs::path(out) / "exactness.json"));
        const auto sum = report::summary_from_json(report::read_json_file((fs::path(out) / "summary.json").string()));
        CHECK(sum.algo == algo);
        CHECK(sum.exact);
        if (algo == "admm" || algo == "dual")
        {
            CHECK(fs::exists(fs::path(out) / "trace.csv"));
            CHECK(fs::exists(fs::path(out) / "messages.jsonl"));
            const auto audit = report::read_json_file((fs::path(out) / "privacy.json").string());
            CHECK(audit["ok"] == true);
        }
        if (algo != "oracle")
        {
            REQUIRE(sum.rounding_gap.has_value());
            CHECK(*sum.rounding_gap <= 0.01);
            CHECK(fs::exists(fs::path(out) / "rounded.json"));
        }
        outs.push_back(out);
    }

    std::vector<std::string> args{"compare"};
    args.insert(args.end(), outs.begin(), outs.end());
    const auto csv_path = (dir / "compare.csv").string();
    args.push_back("--out");
    args.push_back(csv_path);
    REQUIRE(cli_run(args).code == 0);
    std::ifstream in(csv_path);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "run,algo,objective,delta_objective,iters,iters_to_threshold,residual_final,critical_count,"
          "rounding_gap,exact");
    int rows = 0;
    for (std::string line; std::getline(in, line);)
    {
        ++rows;
    }
    CHECK(rows == 4);
}

TEST_CASE("generators write loadable documents")
{
    const auto dir = scratch("gen");
    const auto feeder = (dir / "feeder.json").string();
    const auto scenario = (dir / "scenario.json").string();
    REQUIRE(cli_run({"gen-feeder", "--kind", "random", "--buses", "9", "--stations", "3", "--seed", "4", "--out",
                     feeder})
                .code == 0);
    REQUIRE(cli_run({"gen-scenario", "--feeder", feeder, "--evs", "7", "--stations", "3", "--seed", "2", "--policy",
                     "ii", "--out", scenario})
                .code == 0);
    const auto g = grid::load_feeder_file(feeder);
    const auto s = fleet::load_scenario_file(scenario);
    CHECK(g.num_buses() == 9);
    CHECK(s.num_evs() == 7);
    CHECK_NOTHROW(fleet::check_against_grid(s, g));
    const auto r = cli_run({"run", "--feeder", feeder, "--scenario", scenario, "--out", (dir / "out").string()});
    CHECK_MESSAGE(r.code == 0, r.err);

    const auto stdout_run = cli_run({"gen-feeder"});
    CHECK(grid::load_feeder(stdout_run.out).num_buses() == 56);
}

TEST_CASE("errors are reported as JSON with exit code 2")
{
    const auto missing = cli_run({"run", "--feeder", "/nonexistent.json"});
    CHECK(missing.code == 2);
    const auto e = json::parse(missing.err);
    CHECK(e["error"] == "input error");

    const auto dir = scratch("err");
    const auto bad = (dir / "bad.json").string();
    auto doc = json::parse(std::ifstream(data_dir + "/six_bus_feeder.json"));
    doc["lines"][2]["r"] = -1.0;
    std::ofstream(bad) << doc.dump();
    const auto r = cli_run({"run", "--feeder", bad, "--scenario", data_dir + "/six_bus_binding.json"});
    CHECK(r.code == 2);
    const auto je = json::parse(r.err);
    CHECK(je["error"] == "schema violation");
    CHECK(je["path"] == "/lines/2/r");

    CHECK(cli_run({"run", "--feeder", bad, "--algo", "simplex"}).code == 2);
    CHECK(cli_run({}).code == 2);
    CHECK(cli_run({"--help"}).code == 0);
}

TEST_CASE("a capped run that does not converge exits with 1")
{
    const auto dir = scratch("cap");
    const auto r = cli_run({"run", "--feeder", data_dir + "/six_bus_feeder.json", "--scenario",
                            data_dir + "/six_bus_binding.json", "--algo", "admm", "--max-iters", "2", "--out",
                            dir.string()});
    CHECK(r.code == 1);
    CHECK(fs::exists(dir / "summary.json"));
}
