#include "swapgrid/grid.hpp"

#include "json_read.hpp"
#include "swapgrid/error.hpp"

#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace swapgrid::grid
{

using detail::child_path;
using detail::read_number;
using nlohmann::json;

void Grid::reindex()
{
    index_.clear();
    for (std::size_t i = 0; i < buses.size(); ++i)
    {
        index_.emplace(buses[i].id, static_cast<int>(i));
    }
}

int Grid::index_of(int id) const
{
    const auto it = index_.find(id);
    if (it == index_.end())
    {
        throw Error(ErrorKind::DanglingReference, "unknown bus id " + std::to_string(id));
    }
    return it->second;
}

std::vector<int> Grid::station_buses() const
{
    std::vector<int> out;
    for (const auto& b : buses)
    {
        if (b.station_id)
        {
            out.push_back(b.id);
        }
    }
    return out;
}

std::optional<int> Grid::bus_of_station(int station_id) const
{
    for (const auto& b : buses)
    {
        if (b.station_id && *b.station_id == station_id)
        {
            return b.id;
        }
    }
    return std::nullopt;
}

namespace
{

int find_root(std::vector<int>& parent, int i)
{
    while (parent[static_cast<std::size_t>(i)] != i)
    {
        parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
        i = parent[static_cast<std::size_t>(i)];
    }
    return i;
}

} // namespace

RadialReport validate_radial(const Grid& grid)
{
    RadialReport report;
    auto fail = [&report](std::string msg) {
        report.ok = false;
        report.violations.push_back(std::move(msg));
    };

    std::unordered_map<int, int> index;
    for (std::size_t i = 0; i < grid.buses.size(); ++i)
    {
        if (!index.emplace(grid.buses[i].id, static_cast<int>(i)).second)
        {
            fail("duplicate bus id " + std::to_string(grid.buses[i].id));
        }
    }
    if (!index.count(grid.root))
    {
        fail("root bus " + std::to_string(grid.root) + " does not exist");
        return report;
    }
    const int n = static_cast<int>(grid.buses.size());
    if (static_cast<int>(grid.lines.size()) != n - 1)
    {
        fail("expected " + std::to_string(n - 1) + " lines for " + std::to_string(n) + " buses, found " +
             std::to_string(grid.lines.size()));
    }

    std::vector<int> uf(static_cast<std::size_t>(n));
    std::iota(uf.begin(), uf.end(), 0);
    std::vector<std::vector<int>> out_edges(static_cast<std::size_t>(n));
    std::vector<int> in_degree(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < grid.lines.size(); ++k)
    {
        const auto& ln = grid.lines[k];
        const std::string name = "line " + std::to_string(k) + " (" + std::to_string(ln.from) + "->" +
                                 std::to_string(ln.to) + ")";
        if (!index.count(ln.from) || !index.count(ln.to))
        {
            fail(name + " references an unknown bus");
            continue;
        }
        const int a = index[ln.from];
        const int b = index[ln.to];
        if (a == b)
        {
            fail(name + " is a self loop");
            continue;
        }
        const int ra = find_root(uf, a);
        const int rb = find_root(uf, b);
        if (ra == rb)
        {
            fail(name + " closes a cycle");
        }
        else
        {
            uf[static_cast<std::size_t>(ra)] = rb;
        }
        out_edges[static_cast<std::size_t>(a)].push_back(b);
        ++in_degree[static_cast<std::size_t>(b)];
    }

    const int root = index[grid.root];
    const int root_set = find_root(uf, root);
    for (int i = 0; i < n; ++i)
    {
        if (find_root(uf, i) != root_set)
        {
            fail("bus " + std::to_string(grid.buses[static_cast<std::size_t>(i)].id) +
                 " is not connected to the root (not spanning)");
        }
    }

    // Orientation: every line must point away from the root.
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::queue<int> frontier;
    frontier.push(root);
    seen[static_cast<std::size_t>(root)] = 1;
    while (!frontier.empty())
    {
        const int j = frontier.front();
        frontier.pop();
        for (int k : out_edges[static_cast<std::size_t>(j)])
        {
            if (!seen[static_cast<std::size_t>(k)])
            {
                seen[static_cast<std::size_t>(k)] = 1;
                frontier.push(k);
            }
        }
    }
    if (in_degree[static_cast<std::size_t>(root)] != 0)
    {
        fail("a line points into the root (orientation)");
    }
    for (int i = 0; i < n; ++i)
    {
        const int id = grid.buses[static_cast<std::size_t>(i)].id;
        if (i != root && in_degree[static_cast<std::size_t>(i)] > 1)
        {
            fail("bus " + std::to_string(id) + " is fed by more than one line (orientation)");
        }
        if (!seen[static_cast<std::size_t>(i)] && find_root(uf, i) == root_set)
        {
            fail("bus " + std::to_string(id) + " is not reachable along line orientation (orientation)");
        }
    }
    return report;
}

Grid from_json(const json& doc)
{
    detail::require_format(doc, kFeederFormat);
    Grid g;
    g.base_mva = read_number(doc, "base_mva", "");
    if (!(g.base_mva > 0.0))
    {
        throw Error(ErrorKind::SchemaViolation, "base_mva must be positive", "/base_mva");
    }
    g.root = detail::read_int(doc, "root", "");
    g.v_root = read_number(doc, "v_root", "");
    if (!(g.v_root > 0.0))
    {
        throw Error(ErrorKind::SchemaViolation, "v_root must be positive", "/v_root");
    }
    const double base = g.base_mva;

    const json& buses = detail::read_array(doc, "buses", "");
    std::set<int> ids;
    std::set<int> station_ids;
    for (std::size_t i = 0; i < buses.size(); ++i)
    {
        const std::string path = child_path("/buses", i);
        const json& jb = buses[i];
        Bus b;
        b.id = detail::read_int(jb, "id", path);
        if (!ids.insert(b.id).second)
        {
            throw Error(ErrorKind::SchemaViolation, "duplicate bus id " + std::to_string(b.id), path + "/id");
        }
        b.v_min = read_number(jb, "v_min", path);
        b.v_max = read_number(jb, "v_max", path);
        if (!(b.v_min <= b.v_max) || b.v_min < 0.0)
        {
            throw Error(ErrorKind::SchemaViolation, "need 0 <= v_min <= v_max", path + "/v_min");
        }
        const double p_bg = read_number(jb, "p_bg", path);
        const double q_bg = read_number(jb, "q_bg", path);
        if (p_bg < 0.0 || q_bg < 0.0)
        {
            throw Error(ErrorKind::SchemaViolation, "background loads must be non-negative",
                        path + (p_bg < 0.0 ? "/p_bg" : "/q_bg"));
        }
        b.p_bg = p_bg / base;
        b.q_bg = q_bg / base;
        if (jb.contains("generator") && !jb["generator"].is_null())
        {
            const std::string gp = path + "/generator";
            const json& jg = jb["generator"];
            GeneratorSpec gen;
            gen.p_min = read_number(jg, "p_min", gp) / base;
            gen.p_max = read_number(jg, "p_max", gp) / base;
            gen.q_min = read_number(jg, "q_min", gp) / base;
            gen.q_max = read_number(jg, "q_max", gp) / base;
            const double c2 = read_number(jg, "cost_quadratic", gp);
            const double c1 = read_number(jg, "cost_linear", gp);
            if (!(gen.p_min <= gen.p_max))
            {
                throw Error(ErrorKind::SchemaViolation, "need p_min <= p_max", gp + "/p_min");
            }
            if (!(gen.q_min <= gen.q_max))
            {
                throw Error(ErrorKind::SchemaViolation, "need q_min <= q_max", gp + "/q_min");
            }
            if (c2 < 0.0)
            {
                throw Error(ErrorKind::SchemaViolation, "cost_quadratic must be non-negative", gp + "/cost_quadratic");
            }
            gen.cost_quadratic = c2 * base * base;
            gen.cost_linear = c1 * base;
            b.generator = gen;
        }
        if (jb.contains("station_id") && !jb["station_id"].is_null())
        {
            b.station_id = detail::read_int(jb, "station_id", path);
            if (!station_ids.insert(*b.station_id).second)
            {
                throw Error(ErrorKind::SchemaViolation, "station id used at two buses", path + "/station_id");
            }
        }
        g.buses.push_back(std::move(b));
    }
    g.reindex();
    if (!g.has_bus(g.root))
    {
        throw Error(ErrorKind::DanglingReference, "root refers to an unknown bus", "/root");
    }

    const json& lines = detail::read_array(doc, "lines", "");
    for (std::size_t k = 0; k < lines.size(); ++k)
    {
        const std::string path = child_path("/lines", k);
        const json& jl = lines[k];
        Line ln;
        ln.from = detail::read_int(jl, "from", path);
        ln.to = detail::read_int(jl, "to", path);
        for (const auto& [key, id] : {std::pair{"from", ln.from}, std::pair{"to", ln.to}})
        {
            if (!g.has_bus(id))
            {
                throw Error(ErrorKind::DanglingReference, "line endpoint refers to unknown bus " + std::to_string(id),
                            path + "/" + key);
            }
        }
        ln.r = read_number(jl, "r", path);
        ln.x = read_number(jl, "x", path);
        if (ln.r < 0.0)
        {
            throw Error(ErrorKind::SchemaViolation, "resistance must be non-negative", path + "/r");
        }
        const double s_max = read_number(jl, "s_max", path);
        if (!(s_max > 0.0))
        {
            throw Error(ErrorKind::SchemaViolation, "s_max must be positive", path + "/s_max");
        }
        ln.s_max = s_max / base;
        g.lines.push_back(ln);
    }

    const RadialReport report = validate_radial(g);
    if (!report.ok)
    {
        throw Error(ErrorKind::NonTreeTopology, "non-tree topology: " + report.violations.front(), "/lines");
    }
    return g;
}

Grid load_feeder(const std::string& text)
{
    return from_json(detail::parse_document(text));
}

Grid load_feeder_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw Error(ErrorKind::InputError, "feeder not found: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_feeder(buf.str());
}

json to_json(const Grid& grid)
{
    const double base = grid.base_mva;
    json doc;
    doc["format"] = kFeederFormat;
    doc["base_mva"] = base;
    doc["root"] = grid.root;
    doc["v_root"] = grid.v_root;
    json buses = json::array();
    for (const auto& b : grid.buses)
    {
        json jb{{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max}, {"p_bg", b.p_bg * base}, {"q_bg", b.q_bg * base}};
        if (b.generator)
        {
            const auto& g = *b.generator;
            jb["generator"] = {{"p_min", g.p_min * base},
                               {"p_max", g.p_max * base},
                               {"q_min", g.q_min * base},
                               {"q_max", g.q_max * base},
                               {"cost_quadratic", g.cost_quadratic / (base * base)},
                               {"cost_linear", g.cost_linear / base}};
        }
        if (b.station_id)
        {
            jb["station_id"] = *b.station_id;
        }
        buses.push_back(std::move(jb));
    }
    doc["buses"] = std::move(buses);
    json lines = json::array();
    for (const auto& ln : grid.lines)
    {
        lines.push_back({{"from", ln.from}, {"to", ln.to}, {"r", ln.r}, {"x", ln.x}, {"s_max", ln.s_max * base}});
    }
    doc["lines"] = std::move(lines);
    return doc;
}

std::pair<double, double> net_injection(const Grid& grid, int bus_id, double p_gen, double q_gen, double station_load)
{
    const Bus& b = grid.bus(bus_id);
    if (!b.station_id && station_load != 0.0)
    {
        throw Error(ErrorKind::InvalidArgument,
                    "station load given for bus " + std::to_string(bus_id) + " which has no station");
    }
    return {p_gen - b.p_bg - station_load, q_gen - b.q_bg};
}

} // namespace swapgrid::grid
