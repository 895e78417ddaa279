#include "swapgrid/fleet.hpp"

#include "json_read.hpp"
#include "swapgrid/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace swapgrid::fleet
{

using detail::child_path;
using detail::read_int;
using detail::read_number;
using nlohmann::json;

Scenario scenario_from_json(const json& doc)
{
    detail::require_format(doc, kScenarioFormat);
    Scenario s;
    s.r_mw = read_number(doc, "r_mw", "");
    s.alpha_per_km = read_number(doc, "alpha_per_km", "");
    if (!(s.r_mw > 0.0))
    {
        throw Error(ErrorKind::SchemaViolation, "r_mw must be positive", "/r_mw");
    }
    if (s.alpha_per_km < 0.0)
    {
        throw Error(ErrorKind::SchemaViolation, "alpha_per_km must be non-negative", "/alpha_per_km");
    }
    if (doc.contains("seed"))
    {
        const json& seed = doc["seed"];
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
        {
            throw Error(ErrorKind::SchemaViolation, "seed must be a non-negative integer", "/seed");
        }
        s.seed = seed.get<std::uint64_t>();
    }

    const json& evs = detail::read_array(doc, "evs", "");
    std::set<int> ev_ids;
    for (std::size_t i = 0; i < evs.size(); ++i)
    {
        const std::string path = child_path("/evs", i);
        Ev ev;
        ev.id = read_int(evs[i], "id", path);
        ev.x = read_number(evs[i], "x", path);
        ev.y = read_number(evs[i], "y", path);
        ev.gamma = read_number(evs[i], "gamma", path);
        ev.charge = read_number(evs[i], "charge", path);
        if (ev.gamma < 0.0 || ev.charge < 0.0)
        {
            throw Error(ErrorKind::SchemaViolation, "gamma and charge must be non-negative",
                        path + (ev.gamma < 0.0 ? "/gamma" : "/charge"));
        }
        if (!ev_ids.insert(ev.id).second)
        {
            throw Error(ErrorKind::SchemaViolation, "duplicate EV id " + std::to_string(ev.id), path + "/id");
        }
        s.evs.push_back(ev);
    }

    const json& stations = detail::read_array(doc, "stations", "");
    std::set<int> st_ids;
    std::set<int> st_buses;
    for (std::size_t j = 0; j < stations.size(); ++j)
    {
        const std::string path = child_path("/stations", j);
        Station st;
        st.id = read_int(stations[j], "id", path);
        st.bus = read_int(stations[j], "bus", path);
        st.x = read_number(stations[j], "x", path);
        st.y = read_number(stations[j], "y", path);
        st.total = read_int(stations[j], "M", path);
        st.available = read_int(stations[j], "m", path);
        if (st.available < 0 || st.available > st.total)
        {
            throw Error(ErrorKind::SchemaViolation, "need 0 <= m <= M", path + "/m");
        }
        if (!st_ids.insert(st.id).second)
        {
            throw Error(ErrorKind::SchemaViolation, "duplicate station id " + std::to_string(st.id), path + "/id");
        }
        if (!st_buses.insert(st.bus).second)
        {
            throw Error(ErrorKind::SchemaViolation, "two stations on bus " + std::to_string(st.bus), path + "/bus");
        }
        s.stations.push_back(st);
    }
    return s;
}

Scenario load_scenario(const std::string& text)
{
    return scenario_from_json(detail::parse_document(text));
}

Scenario load_scenario_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw Error(ErrorKind::InputError, "scenario not found: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scenario(buf.str());
}

json to_json(const Scenario& s)
{
    json doc;
    doc["format"] = kScenarioFormat;
    doc["r_mw"] = s.r_mw;
    doc["alpha_per_km"] = s.alpha_per_km;
    doc["seed"] = s.seed;
    json evs = json::array();
    for (const auto& ev : s.evs)
    {
        evs.push_back({{"id", ev.id}, {"x", ev.x}, {"y", ev.y}, {"gamma", ev.gamma}, {"charge", ev.charge}});
    }
    doc["evs"] = std::move(evs);
    json stations = json::array();
    for (const auto& st : s.stations)
    {
        stations.push_back(
            {{"id", st.id}, {"bus", st.bus}, {"x", st.x}, {"y", st.y}, {"M", st.total}, {"m", st.available}});
    }
    doc["stations"] = std::move(stations);
    return doc;
}

void check_against_grid(const Scenario& s, const grid::Grid& g)
{
    for (std::size_t j = 0; j < s.stations.size(); ++j)
    {
        const auto& st = s.stations[j];
        const std::string path = child_path("/stations", j) + "/bus";
        if (!g.has_bus(st.bus))
        {
            throw Error(ErrorKind::DanglingReference, "station on unknown bus " + std::to_string(st.bus), path);
        }
        if (!g.bus(st.bus).station_id)
        {
            throw Error(ErrorKind::DanglingReference,
                        "bus " + std::to_string(st.bus) + " is not a station bus of the feeder", path);
        }
    }
    reachability(s, distances(s.evs, s.stations));
}

std::vector<opf::StationLoad> station_loads(const Scenario& s)
{
    std::vector<opf::StationLoad> out;
    for (const auto& st : s.stations)
    {
        out.push_back({st.bus, s.r_mw * (st.total - st.available), s.r_mw * st.total});
    }
    return out;
}

Matrix distances(const std::vector<Ev>& evs, const std::vector<Station>& stations)
{
    Matrix d(static_cast<Eigen::Index>(evs.size()), static_cast<Eigen::Index>(stations.size()));
    for (std::size_t a = 0; a < evs.size(); ++a)
    {
        for (std::size_t j = 0; j < stations.size(); ++j)
        {
            d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) =
                std::hypot(evs[a].x - stations[j].x, evs[a].y - stations[j].y);
        }
    }
    return d;
}

std::vector<int> feasible_stations(double range, const Eigen::Ref<const Eigen::RowVectorXd>& d_row)
{
    std::vector<int> out;
    for (Eigen::Index j = 0; j < d_row.size(); ++j)
    {
        if (d_row[j] <= range)
        {
            out.push_back(static_cast<int>(j));
        }
    }
    if (out.empty())
    {
        throw Error(ErrorKind::EvUnreachable, "no station within driving range");
    }
    return out;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> reachability(const Scenario& s, const Matrix& d)
{
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(d.rows(), d.cols());
    for (Eigen::Index a = 0; a < d.rows(); ++a)
    {
        const double range = s.evs[static_cast<std::size_t>(a)].range();
        bool any = false;
        for (Eigen::Index j = 0; j < d.cols(); ++j)
        {
            mask(a, j) = d(a, j) <= range;
            any = any || mask(a, j);
        }
        if (!any)
        {
            throw Error(ErrorKind::EvUnreachable,
                        "EV " + std::to_string(s.evs[static_cast<std::size_t>(a)].id) + " reaches no station");
        }
    }
    return mask;
}

void check_capacity(const Scenario& s)
{
    long total = 0;
    for (const auto& st : s.stations)
    {
        total += st.available;
    }
    if (total < s.num_evs())
    {
        throw Error(ErrorKind::CapacityInfeasible, "stations hold " + std::to_string(total) +
                                                       " charged batteries for " + std::to_string(s.num_evs()) +
                                                       " EVs");
    }
}

Assignment u_update(const Scenario& s, const Matrix& d, const std::vector<double>& w,
                    const std::vector<double>& lambda, double rho, const conic::ConicSolver& solver)
{
    using conic::AffineExpr;
    const int A = s.num_evs();
    const int N = s.num_stations();
    if (static_cast<int>(w.size()) != N || static_cast<int>(lambda.size()) != N)
    {
        throw Error(ErrorKind::InvalidArgument, "u_update: w and lambda need one entry per station");
    }
    if (!(rho > 0.0))
    {
        throw Error(ErrorKind::InvalidArgument, "u_update: rho must be positive");
    }
    check_capacity(s);
    const auto mask = reachability(s, d);

    conic::ConicProblem p;
    Eigen::MatrixXi var = Eigen::MatrixXi::Constant(A, N, -1);
    std::vector<AffineExpr> rows(static_cast<std::size_t>(A), AffineExpr(-1.0));
    std::vector<AffineExpr> cols(static_cast<std::size_t>(N));
    for (int a = 0; a < A; ++a)
    {
        for (int j = 0; j < N; ++j)
        {
            if (!mask(a, j))
            {
                continue;
            }
            const int v = p.add_variable("u_" + std::to_string(a) + "_" + std::to_string(j), 0.0, 1.0);
            var(a, j) = v;
            p.add_cost(v, s.alpha_per_km * d(a, j));
            rows[static_cast<std::size_t>(a)].add(v, 1.0);
            cols[static_cast<std::size_t>(j)].add(v, 1.0);
        }
    }
    for (auto& row : rows)
    {
        p.add_equality(std::move(row));
    }
    for (int j = 0; j < N; ++j)
    {
        const auto& st = s.stations[static_cast<std::size_t>(j)];
        const int uj = p.add_variable("uagg_" + std::to_string(j), 0.0, static_cast<double>(st.available));
        cols[static_cast<std::size_t>(j)].add(uj, -1.0);
        p.add_equality(std::move(cols[static_cast<std::size_t>(j)]));
        // e_j = w_j - r (M_j - m_j) - r u_j
        const double base = s.r_mw * (st.total - st.available);
        const AffineExpr e = AffineExpr(w[static_cast<std::size_t>(j)] - base).add(uj, -s.r_mw);
        p.add_cost(uj, -lambda[static_cast<std::size_t>(j)] * s.r_mw);
        p.add_cost_constant(lambda[static_cast<std::size_t>(j)] * e.constant);
        const int t = p.add_variable("pen_" + std::to_string(j));
        p.add_quadratic_epigraph({e}, t);
        p.add_cost(t, 0.5 * rho);
    }

    const conic::ConicResult res = solver.solve(p);
    if (res.status == conic::SolveStatus::Infeasible)
    {
        throw Error(ErrorKind::CapacityInfeasible, "assignment polytope is empty");
    }
    if (res.status != conic::SolveStatus::Optimal)
    {
        throw Error(ErrorKind::NumericalFailure, "u-update solve failed: " + std::string(conic::to_string(res.status)) + " (" + res.message + ")");
    }
    Assignment out;
    out.u = Matrix::Zero(A, N);
    for (int a = 0; a < A; ++a)
    {
        for (int j = 0; j < N; ++j)
        {
            if (var(a, j) >= 0)
            {
                out.u(a, j) = std::clamp(res.x[static_cast<std::size_t>(var(a, j))], 0.0, 1.0);
            }
        }
    }
    return out;
}

int ev_best_response(double range, const Eigen::Ref<const Eigen::RowVectorXd>& d_row, const std::vector<double>& lambda,
                     const std::vector<double>& mu, double alpha, double r_mw)
{
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < d_row.size(); ++j)
    {
        if (!(d_row[j] <= range))
        {
            continue;
        }
        const double cost = alpha * d_row[j] - r_mw * lambda[static_cast<std::size_t>(j)] + mu[static_cast<std::size_t>(j)];
        if (cost < best_cost)
        {
            best_cost = cost;
            best = static_cast<int>(j);
        }
    }
    if (best < 0)
    {
        throw Error(ErrorKind::EvUnreachable, "no station within driving range");
    }
    return best;
}

std::vector<double> aggregate(const Matrix& u)
{
    std::vector<double> out(static_cast<std::size_t>(u.cols()), 0.0);
    for (Eigen::Index j = 0; j < u.cols(); ++j)
    {
        double acc = 0.0;
        for (Eigen::Index a = 0; a < u.rows(); ++a)
        {
            acc += u(a, j);
        }
        out[static_cast<std::size_t>(j)] = acc;
    }
    return out;
}

int count_critical(const Matrix& u, double tol)
{
    int count = 0;
    for (Eigen::Index a = 0; a < u.rows(); ++a)
    {
        if (u.cols() == 0 || u.row(a).maxCoeff() < 1.0 - tol)
        {
            ++count;
        }
    }
    return count;
}

double polytope_violation(const Scenario& s, const Matrix& d, const Matrix& u)
{
    double worst = 0.0;
    const auto agg = aggregate(u);
    for (Eigen::Index a = 0; a < u.rows(); ++a)
    {
        const double range = s.evs[static_cast<std::size_t>(a)].range();
        for (Eigen::Index j = 0; j < u.cols(); ++j)
        {
            worst = std::max({worst, -u(a, j), u(a, j) - 1.0});
            if (d(a, j) > range)
            {
                worst = std::max(worst, std::abs(u(a, j)));
            }
        }
        worst = std::max(worst, std::abs(u.row(a).sum() - 1.0));
    }
    for (std::size_t j = 0; j < agg.size(); ++j)
    {
        worst = std::max(worst, agg[j] - s.stations[j].available);
    }
    return worst;
}

namespace
{

Matrix one_hot(const std::vector<int>& choice, int stations)
{
    Matrix u = Matrix::Zero(static_cast<Eigen::Index>(choice.size()), stations);
    for (std::size_t a = 0; a < choice.size(); ++a)
    {
        u(static_cast<Eigen::Index>(a), choice[a]) = 1.0;
    }
    return u;
}

/// Shortest chain of EV moves (cost = added distance) from an over-full
/// station to a station with slack; used when no single move exists.
bool augment_chain(std::vector<int>& choice, std::vector<int>& load, int from, const Scenario& s, const Matrix& d,
                   const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask)
{
    const int N = s.num_stations();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(static_cast<std::size_t>(N), inf);
    std::vector<int> via_ev(static_cast<std::size_t>(N), -1);
    std::vector<int> prev(static_cast<std::size_t>(N), -1);
    dist[static_cast<std::size_t>(from)] = 0.0;
    for (int round = 0; round < N; ++round)
    {
        bool changed = false;
        for (std::size_t a = 0; a < choice.size(); ++a)
        {
            const int j = choice[a];
            if (dist[static_cast<std::size_t>(j)] == inf)
            {
                continue;
            }
            for (int k = 0; k < N; ++k)
            {
                if (k == j || !mask(static_cast<Eigen::Index>(a), k))
                {
                    continue;
                }
                const double cand = dist[static_cast<std::size_t>(j)] +
                                    s.alpha_per_km * (d(static_cast<Eigen::Index>(a), k) - d(static_cast<Eigen::Index>(a), j));
                if (cand < dist[static_cast<std::size_t>(k)] - 1e-15)
                {
                    dist[static_cast<std::size_t>(k)] = cand;
                    via_ev[static_cast<std::size_t>(k)] = static_cast<int>(a);
                    prev[static_cast<std::size_t>(k)] = j;
                    changed = true;
                }
            }
        }
        if (!changed)
        {
            break;
        }
    }
    int target = -1;
    for (int k = 0; k < N; ++k)
    {
        if (k != from && load[static_cast<std::size_t>(k)] < s.stations[static_cast<std::size_t>(k)].available &&
            dist[static_cast<std::size_t>(k)] < inf &&
            (target < 0 || dist[static_cast<std::size_t>(k)] < dist[static_cast<std::size_t>(target)]))
        {
            target = k;
        }
    }
    if (target < 0)
    {
        return false;
    }
    // Walk back, applying the moves; each intermediate station keeps its count.
    std::vector<std::pair<int, int>> moves;
    for (int k = target; k != from; k = prev[static_cast<std::size_t>(k)])
    {
        moves.emplace_back(via_ev[static_cast<std::size_t>(k)], k);
        if (moves.size() > static_cast<std::size_t>(N))
        {
            return false;
        }
    }
    for (const auto& [a, k] : moves)
    {
        choice[static_cast<std::size_t>(a)] = k;
    }
    --load[static_cast<std::size_t>(from)];
    ++load[static_cast<std::size_t>(target)];
    return true;
}

} // namespace

void repair_capacity(std::vector<int>& choice, const Scenario& s, const Matrix& d)
{
    check_capacity(s);
    const int N = s.num_stations();
    const auto mask = reachability(s, d);
    std::vector<int> load(static_cast<std::size_t>(N), 0);
    for (int j : choice)
    {
        ++load[static_cast<std::size_t>(j)];
    }
    const auto over = [&](int j) {
        return load[static_cast<std::size_t>(j)] > s.stations[static_cast<std::size_t>(j)].available;
    };
    while (true)
    {
        int worst_station = -1;
        for (int j = 0; j < N; ++j)
        {
            if (over(j))
            {
                worst_station = j;
                break;
            }
        }
        if (worst_station < 0)
        {
            return;
        }
        // Cheapest single move out of any over-full station into a station with slack.
        int best_ev = -1;
        int best_to = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < choice.size(); ++a)
        {
            const int j = choice[a];
            if (!over(j))
            {
                continue;
            }
            // next reachable station with slack, nearest first, lowest index on ties
            int to = -1;
            for (int k = 0; k < N; ++k)
            {
                if (k == j || !mask(static_cast<Eigen::Index>(a), k) ||
                    load[static_cast<std::size_t>(k)] >= s.stations[static_cast<std::size_t>(k)].available)
                {
                    continue;
                }
                if (to < 0 || d(static_cast<Eigen::Index>(a), k) < d(static_cast<Eigen::Index>(a), to))
                {
                    to = k;
                }
            }
            if (to < 0)
            {
                continue;
            }
            const double cost = s.alpha_per_km * (d(static_cast<Eigen::Index>(a), to) - d(static_cast<Eigen::Index>(a), j));
            if (cost < best_cost)
            {
                best_cost = cost;
                best_ev = static_cast<int>(a);
                best_to = to;
            }
        }
        if (best_ev >= 0)
        {
            --load[static_cast<std::size_t>(choice[static_cast<std::size_t>(best_ev)])];
            ++load[static_cast<std::size_t>(best_to)];
            choice[static_cast<std::size_t>(best_ev)] = best_to;
            continue;
        }
        if (!augment_chain(choice, load, worst_station, s, d, mask))
        {
            throw Error(ErrorKind::CapacityInfeasible, "no capacity-feasible repair exists for the rounded assignment");
        }
    }
}

Assignment discretize(const Assignment& relaxed, const Scenario& s, const Matrix& d)
{
    check_capacity(s);
    const auto mask = reachability(s, d);
    std::vector<int> choice(static_cast<std::size_t>(relaxed.u.rows()));
    for (Eigen::Index a = 0; a < relaxed.u.rows(); ++a)
    {
        int best = -1;
        for (Eigen::Index j = 0; j < relaxed.u.cols(); ++j)
        {
            if (mask(a, j) && (best < 0 || relaxed.u(a, j) > relaxed.u(a, best)))
            {
                best = static_cast<int>(j);
            }
        }
        choice[static_cast<std::size_t>(a)] = best;
    }
    repair_capacity(choice, s, d);
    return {one_hot(choice, s.num_stations()), Mode::Binary};
}

Assignment randomized_round(const Assignment& relaxed, const Scenario& s, const Matrix& d, std::uint64_t seed)
{
    check_capacity(s);
    const auto mask = reachability(s, d);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> choice(static_cast<std::size_t>(relaxed.u.rows()));
    for (Eigen::Index a = 0; a < relaxed.u.rows(); ++a)
    {
        double total = 0.0;
        int last = -1;
        for (Eigen::Index j = 0; j < relaxed.u.cols(); ++j)
        {
            if (mask(a, j))
            {
                total += std::max(relaxed.u(a, j), 0.0);
                last = static_cast<int>(j);
            }
        }
        const double draw = unit(rng) * total;
        double acc = 0.0;
        int pick = last;
        for (Eigen::Index j = 0; j < relaxed.u.cols(); ++j)
        {
            if (!mask(a, j) || relaxed.u(a, j) <= 0.0)
            {
                continue;
            }
            acc += relaxed.u(a, j);
            if (draw < acc)
            {
                pick = static_cast<int>(j);
                break;
            }
        }
        choice[static_cast<std::size_t>(a)] = pick;
    }
    repair_capacity(choice, s, d);
    return {one_hot(choice, s.num_stations()), Mode::Binary};
}

double travel_cost(const Scenario& s, const Matrix& d, const Matrix& u)
{
    return s.alpha_per_km * d.cwiseProduct(u).sum();
}

namespace
{

// Cycle in the bipartite graph of fractional entries, as a list of (a, j)
// cells alternating in sign: +, -, +, - ... Empty when the support is a forest.
std::vector<std::pair<int, int>> find_fractional_cycle(const Matrix& u, double tol)
{
    const auto A = static_cast<int>(u.rows());
    const auto N = static_cast<int>(u.cols());
    // Nodes 0..A-1 are EVs, A..A+N-1 stations.
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(A + N));
    for (int a = 0; a < A; ++a)
        for (int j = 0; j < N; ++j)
            if (u(a, j) > tol && u(a, j) < 1.0 - tol)
            {
                adj[static_cast<std::size_t>(a)].push_back(A + j);
                adj[static_cast<std::size_t>(A + j)].push_back(a);
            }
    std::vector<int> parent(static_cast<std::size_t>(A + N), -2);
    std::vector<int> depth(static_cast<std::size_t>(A + N), 0);
    for (int root = 0; root < A + N; ++root)
    {
        if (parent[static_cast<std::size_t>(root)] != -2 || adj[static_cast<std::size_t>(root)].empty())
            continue;
        parent[static_cast<std::size_t>(root)] = -1;
        std::vector<int> stack{root};
        while (!stack.empty())
        {
            const int x = stack.back();
            stack.pop_back();
            for (int y : adj[static_cast<std::size_t>(x)])
            {
                if (y == parent[static_cast<std::size_t>(x)])
                    continue;
                if (parent[static_cast<std::size_t>(y)] == -2)
                {
                    parent[static_cast<std::size_t>(y)] = x;
                    depth[static_cast<std::size_t>(y)] = depth[static_cast<std::size_t>(x)] + 1;
                    stack.push_back(y);
                    continue;
                }
                // Non-tree edge x-y closes a cycle through the lowest common
                // ancestor of x and y.
                std::vector<int> left{x};
                std::vector<int> right{y};
                while (left.back() != right.back())
                {
                    if (depth[static_cast<std::size_t>(left.back())] >= depth[static_cast<std::size_t>(right.back())])
                        left.push_back(parent[static_cast<std::size_t>(left.back())]);
                    else
                        right.push_back(parent[static_cast<std::size_t>(right.back())]);
                }
                right.pop_back();
                std::vector<int> nodes(left.begin(), left.end());
                nodes.insert(nodes.end(), right.rbegin(), right.rend());
                std::vector<std::pair<int, int>> cells;
                for (std::size_t i = 0; i < nodes.size(); ++i)
                {
                    const int p = nodes[i];
                    const int q = nodes[(i + 1) % nodes.size()];
                    cells.emplace_back(p < A ? p : q, (p < A ? q : p) - A);
                }
                return cells;
            }
        }
    }
    return {};
}

} // namespace

void purify(Matrix& u, const Matrix& d, double tol)
{
    // Alternate +/- around each cycle of fractional entries; row and column
    // sums stay fixed, and the direction that does not raise the travel cost
    // empties at least one entry per pass.
    for (;;)
    {
        const auto cycle = find_fractional_cycle(u, tol);
        if (cycle.empty())
            return;
        double slope = 0.0;
        for (std::size_t i = 0; i < cycle.size(); ++i)
            slope += (i % 2 == 0 ? 1.0 : -1.0) * d(cycle[i].first, cycle[i].second);
        const std::size_t down = slope > 0.0 ? 0 : 1; // parity of the entries that shrink
        double theta = std::numeric_limits<double>::infinity();
        std::size_t arg = down;
        for (std::size_t i = down; i < cycle.size(); i += 2)
            if (u(cycle[i].first, cycle[i].second) < theta)
            {
                theta = u(cycle[i].first, cycle[i].second);
                arg = i;
            }
        for (std::size_t i = 0; i < cycle.size(); ++i)
            u(cycle[i].first, cycle[i].second) += (i % 2 == down ? -theta : theta);
        u(cycle[arg].first, cycle[arg].second) = 0.0;
    }
}

} // namespace swapgrid::fleet
