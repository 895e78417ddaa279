#include "cli.hpp"

#include "swapgrid/admm.hpp"
#include "swapgrid/dualdecomp.hpp"
#include "swapgrid/error.hpp"
#include "swapgrid/generate.hpp"
#include "swapgrid/oracle.hpp"
#include "swapgrid/report.hpp"
#include "swapgrid/simnet.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace swapgrid::cli
{

namespace
{

namespace fs = std::filesystem;
using nlohmann::json;

// Writes the first problem it is asked to solve as CBF, then solves it.
class DumpingSolver final : public conic::ConicSolver
{
public:
    explicit DumpingSolver(std::string path) : path_(std::move(path)) {}

    conic::ConicResult solve(const conic::ConicProblem& problem) const override
    {
        if (!written_)
        {
            std::ofstream out(path_);
            if (!out)
                throw Error(ErrorKind::InputError, "cannot write " + path_);
            conic::write_cbf(problem, out);
            written_ = true;
        }
        return inner_.solve(problem);
    }
    std::string_view name() const override { return inner_.name(); }

private:
    std::string path_;
    conic::InteriorPointSolver inner_;
    mutable bool written_ = false;
};

struct RunOptions
{
    std::string feeder;
    std::string scenario;
    std::string algo = "centralized";
    std::optional<double> rho;
    std::optional<double> rho1;
    std::optional<double> rho2;
    std::optional<int> max_iters;
    std::uint64_t seed = 1;
    int evs = 400;
    std::string policy = "i";
    double area_km = 4.0;
    std::string out = "swapgrid-out";
    bool session = false;
    std::string dump_cbf;
    // Each enumerated aggregate costs one OPF solve; on a 56-bus feeder the
    // library default runs for many minutes, so the tool is more conservative.
    long enum_cap = 2000;
};

double consensus_residual(const fleet::Scenario& s, const std::vector<double>& w, const fleet::Matrix& u)
{
    const auto loads = fleet::station_loads(s);
    const auto uj = fleet::aggregate(u);
    double res = 0.0;
    for (std::size_t j = 0; j < uj.size() && j < w.size(); ++j)
        res = std::max(res, std::abs(w[j] - opf::station_load_mw(loads[j], s.r_mw, uj[j])));
    return res;
}

void write_session_log(const fs::path& dir, const simnet::MessageLog& log)
{
    std::ofstream out(dir / "messages.jsonl");
    log.write_jsonl(out);
    const auto audit = simnet::audit_privacy(log);
    json violations = json::array();
    for (const auto& v : audit.violations)
        violations.push_back({{"rule", std::string(1, v.rule)}, {"message", v.message}, {"detail", v.detail}});
    report::write_json_file((dir / "privacy.json").string(), {{"ok", audit.ok}, {"violations", violations}});
}

int cmd_run(const RunOptions& opt, std::ostream& out)
{
    const auto grid = grid::load_feeder_file(opt.feeder);
    fleet::Scenario s;
    if (!opt.scenario.empty())
    {
        s = fleet::load_scenario_file(opt.scenario);
    }
    else
    {
        generate::ScenarioOptions g;
        g.evs = opt.evs;
        g.stations = static_cast<int>(grid.station_buses().size());
        g.area_km = opt.area_km;
        g.seed = opt.seed;
        g.policy = generate::parse_policy(opt.policy);
        s = generate::generate_scenario(grid, g);
    }
    fleet::check_against_grid(s, grid);

    const fs::path dir(opt.out);
    fs::create_directories(dir);
    std::unique_ptr<conic::ConicSolver> solver;
    if (!opt.dump_cbf.empty())
        solver = std::make_unique<DumpingSolver>(opt.dump_cbf);
    else
        solver = std::make_unique<conic::InteriorPointSolver>();

    report::Solution sol;
    report::Summary sum;
    sum.algo = opt.algo;
    sum.r_mw = s.r_mw;

    if (opt.algo == "centralized")
    {
        auto r = oracle::solve_centralized_relaxed(grid, s, *solver);
        sol = {std::move(r.flow), std::move(r.assignment), r.objective};
        sum.iters = sol.flow.solver_iterations;
    }
    else if (opt.algo == "admm")
    {
        admm::AdmmParams p;
        if (opt.rho)
            p.rho = *opt.rho;
        if (opt.max_iters)
            p.max_iters = *opt.max_iters;
        admm::AdmmResult r;
        if (opt.session)
        {
            auto sess = simnet::run_admm_session(grid, s, p, *solver);
            write_session_log(dir, sess.log);
            r = std::move(sess.result);
        }
        else
        {
            r = admm::run_admm(grid, s, p, *solver);
        }
        std::ofstream trace(dir / "trace.csv");
        admm::write_trace_csv(r.trace, trace);
        sol = {std::move(r.flow), std::move(r.assignment), r.objective};
        sum.iters = r.iterations;
        sum.converged = r.converged;
    }
    else if (opt.algo == "dual")
    {
        dual::DualParams p;
        if (opt.rho1)
            p.rho1 = *opt.rho1;
        if (opt.rho2)
            p.rho2 = *opt.rho2;
        if (opt.max_iters)
            p.max_iters = *opt.max_iters;
        dual::DualResult r;
        if (opt.session)
        {
            auto sess = simnet::run_dual_session(grid, s, p, {}, *solver);
            write_session_log(dir, sess.log);
            r = std::move(sess.result);
        }
        else
        {
            r = dual::run_dual(grid, s, p, *solver);
        }
        std::ofstream trace(dir / "trace.csv");
        dual::write_trace_csv(r.trace, trace);
        sol = {std::move(r.flow), std::move(r.assignment), r.objective};
        sum.iters = r.iterations;
        sum.converged = r.converged;
    }
    else if (opt.algo == "oracle")
    {
        auto r = oracle::enumerate_binary(grid, s, opt.enum_cap, *solver);
        sol = {std::move(r.flow), std::move(r.best), r.objective};
        sum.iters = static_cast<int>(r.opf_solves);
    }
    else
    {
        throw Error(ErrorKind::InputError, "unknown algorithm '" + opt.algo + "'");
    }

    sum.objective = sol.objective;
    sum.residual_final = consensus_residual(s, sol.flow.w, sol.assignment.u);
    sum.critical_count = fleet::count_critical(sol.assignment.u);
    const auto exact = opf::exactness_residuals(grid, sol.flow);
    sum.exact = exact.exact;
    if (opt.algo != "oracle")
    {
        try
        {
            auto gap = oracle::rounding_gap(grid, s, sol.assignment, opt.enum_cap);
            sum.rounding_gap = gap.gap;
            report::Solution rounded{{}, gap.rounded, gap.rounded_objective};
            const auto d = fleet::distances(s.evs, s.stations);
            oracle::assignment_objective(grid, s, d, gap.rounded.u, &rounded.flow);
            report::write_json_file((dir / "rounded.json").string(), report::to_json(rounded));
        }
        catch (const Error& e)
        {
            // Only a too-large enumeration is expected here; it just means
            // no gap is reported.
            if (e.kind() != ErrorKind::TooLarge)
                throw;
        }
    }

    report::write_json_file((dir / "solution.json").string(), report::to_json(sol));
    report::write_json_file((dir / "exactness.json").string(), report::to_json(exact));
    report::write_json_file((dir / "summary.json").string(), report::to_json(sum));
    out << report::to_json(sum).dump() << '\n';
    return sum.converged ? 0 : 1;
}

std::string cell(std::optional<double> v)
{
    if (!v)
        return "";
    std::ostringstream ss;
    ss << std::setprecision(17) << *v;
    return ss.str();
}

// First iteration whose consensus mismatch is at most 1e-4 r.
std::optional<double> iters_to_threshold(const fs::path& dir, const report::Summary& s)
{
    std::ifstream in(dir / "trace.csv");
    if (!in || s.r_mw <= 0.0)
        return std::nullopt;
    const auto t = report::read_csv(in);
    const double threshold = 1e-4 * s.r_mw;
    std::vector<int> cols;
    if (int c = t.column("residual"); c >= 0)
        cols.push_back(c);
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i].rfind("viol_w_", 0) == 0)
            cols.push_back(static_cast<int>(i));
    if (cols.empty())
        return std::nullopt;
    const int iter = t.column("iter");
    for (const auto& row : t.rows)
    {
        double worst = 0.0;
        for (int c : cols)
            worst = std::max(worst, std::abs(row[static_cast<std::size_t>(c)]));
        if (worst <= threshold)
            return iter >= 0 ? row[static_cast<std::size_t>(iter)] : 0.0;
    }
    return std::nullopt;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out_path, std::ostream& out)
{
    std::ostringstream table;
    table << "run,algo,objective,delta_objective,iters,iters_to_threshold,residual_final,critical_count,"
             "rounding_gap,exact\n";
    std::optional<double> reference;
    for (const auto& d : dirs)
    {
        const auto sum = report::summary_from_json(report::read_json_file((fs::path(d) / "summary.json").string()));
        if (!reference)
            reference = sum.objective;
        const double delta =
            (sum.objective - *reference) / std::max(std::abs(*reference), std::numeric_limits<double>::min());
        table << d << ',' << sum.algo << ',' << cell(sum.objective) << ',' << cell(delta) << ',' << sum.iters << ','
              << cell(iters_to_threshold(d, sum)) << ',' << cell(sum.residual_final) << ',' << sum.critical_count
              << ',' << cell(sum.rounding_gap) << ',' << (sum.exact ? "true" : "false") << '\n';
    }
    if (out_path.empty())
    {
        out << table.str();
    }
    else
    {
        std::ofstream f(out_path);
        if (!f)
            throw Error(ErrorKind::InputError, "cannot write " + out_path);
        f << table.str();
    }
    return 0;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path.empty() || path == "-")
    {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f)
        throw Error(ErrorKind::InputError, "cannot write " + path);
    f << text;
}

void print_error(std::ostream& err, std::string_view kind, const std::string& message, const std::string& path = {})
{
    json e = {{"error", std::string(kind)}, {"message", message}};
    if (!path.empty())
        e["path"] = path;
    err << e.dump() << '\n';
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"EV battery-swap scheduling with optimal power flow on radial feeders", "swapgrid"};
    app.require_subcommand(1);

    RunOptions ro;
    auto* run_cmd = app.add_subcommand("run", "solve one feeder + scenario and write artifacts");
    run_cmd->add_option("--feeder", ro.feeder, "feeder JSON file")->required();
    run_cmd->add_option("--scenario", ro.scenario, "scenario JSON file (omit to generate one)");
    run_cmd->add_option("--algo", ro.algo, "centralized | admm | dual | oracle")
        ->check(CLI::IsMember({"centralized", "admm", "dual", "oracle"}));
    run_cmd->add_option("--rho", ro.rho, "ADMM penalty, $/MW^2 (default 1)");
    run_cmd->add_option("--rho1", ro.rho1, "dual step scale for lambda (default 50)");
    run_cmd->add_option("--rho2", ro.rho2, "dual step scale for mu (default 0.1)");
    run_cmd->add_option("--max-iters", ro.max_iters, "iteration limit (default 500 ADMM, 5000 dual)");
    run_cmd->add_option("--seed", ro.seed, "seed for a generated scenario");
    run_cmd->add_option("--evs", ro.evs, "EV count for a generated scenario");
    run_cmd->add_option("--policy", ro.policy, "m-policy for a generated scenario: i | ii");
    run_cmd->add_option("--area-km", ro.area_km, "side of the square area for a generated scenario");
    run_cmd->add_option("--out", ro.out, "output directory");
    run_cmd->add_flag("--session", ro.session, "run ADMM/dual through the message layer and audit the log");
    run_cmd->add_option("--dump-cbf", ro.dump_cbf, "write the first conic problem solved as CBF");
    run_cmd->add_option("--enum-cap", ro.enum_cap, "largest enumeration attempted by the oracle");

    std::vector<std::string> dirs;
    std::string compare_out;
    auto* cmp_cmd = app.add_subcommand("compare", "tabulate summaries of several run directories as CSV");
    cmp_cmd->add_option("dirs", dirs, "run output directories");
    cmp_cmd->add_option("--out", compare_out, "CSV file (default stdout)");

    generate::ScenarioOptions go;
    std::string gen_feeder;
    std::string gen_policy = "i";
    std::string gen_out;
    auto* gs_cmd = app.add_subcommand("gen-scenario", "generate a scenario file");
    gs_cmd->add_option("--feeder", gen_feeder, "feeder JSON (default: built-in 56-bus stand-in)");
    gs_cmd->add_option("--evs", go.evs, "number of EVs A");
    gs_cmd->add_option("--stations", go.stations, "number of stations N_w");
    gs_cmd->add_option("--area-km", go.area_km, "side of the square area");
    gs_cmd->add_option("--seed", go.seed, "random seed");
    gs_cmd->add_option("--policy", gen_policy, "m-policy: i (m_j = A) | ii (A/2, A/10, A/4, A/4)");
    gs_cmd->add_option("--alpha", go.alpha_per_km, "travel cost, $/km");
    gs_cmd->add_option("--r-mw", go.r_mw, "swap power per battery, MW");
    gs_cmd->add_option("--out", gen_out, "output file (default stdout)");

    std::string kind = "standin56";
    int buses = 10;
    int stations = 3;
    std::uint64_t feeder_seed = 1;
    std::string feeder_out;
    auto* gf_cmd = app.add_subcommand("gen-feeder", "write a feeder file");
    gf_cmd->add_option("--kind", kind, "standin56 | random")->check(CLI::IsMember({"standin56", "random"}));
    gf_cmd->add_option("--buses", buses, "bus count for --kind random");
    gf_cmd->add_option("--stations", stations, "station count for --kind random");
    gf_cmd->add_option("--seed", feeder_seed, "seed for --kind random");
    gf_cmd->add_option("--out", feeder_out, "output file (default stdout)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        if (e.get_exit_code() == 0)
        {
            out << app.help();
            return 0;
        }
        print_error(err, to_string(ErrorKind::InputError), e.what());
        return 2;
    }

    try
    {
        if (*run_cmd)
            return cmd_run(ro, out);
        if (*cmp_cmd)
            return cmd_compare(dirs, compare_out, out);
        if (*gs_cmd)
        {
            go.policy = generate::parse_policy(gen_policy);
            const auto grid = gen_feeder.empty() ? generate::standin_feeder56() : grid::load_feeder_file(gen_feeder);
            const auto s = generate::generate_scenario(grid, go);
            write_text(gen_out, fleet::to_json(s).dump(2) + "\n", out);
            return 0;
        }
        if (*gf_cmd)
        {
            const auto grid =
                kind == "standin56" ? generate::standin_feeder56() : generate::random_feeder(buses, stations, feeder_seed);
            write_text(feeder_out, grid::to_json(grid).dump(2) + "\n", out);
            return 0;
        }
    }
    catch (const Error& e)
    {
        print_error(err, to_string(e.kind()), e.what(), e.path());
        return 2;
    }
    catch (const std::exception& e)
    {
        print_error(err, "InternalError", e.what());
        return 2;
    }
    return 2;
}

} // namespace swapgrid::cli
