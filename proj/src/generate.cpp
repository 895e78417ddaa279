#include "swapgrid/generate.hpp"

#include "swapgrid/error.hpp"
#include "swapgrid/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace swapgrid::generate
{

double unit(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return lo + (hi - lo) * unit(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi)
{
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(rng() % span);
}

namespace
{

constexpr double kVmin = 0.95 * 0.95;
constexpr double kVmax = 1.1 * 1.1;

grid::GeneratorSpec supply(double base)
{
    // 0.3 p^2 + 30 p, 0..4 MW, -2..2 Mvar, in per-unit
    return {0.0, 4.0 / base, -2.0 / base, 2.0 / base, 0.3 * base * base, 30.0 * base};
}

grid::GeneratorSpec distributed(double base)
{
    // 0.1 p^2 + 20 p, 0..2.5 MW, -1.5..1.5 Mvar
    return {0.0, 2.5 / base, -1.5 / base, 1.5 / base, 0.1 * base * base, 20.0 * base};
}

grid::Bus make_bus(int id, double p_mw, double q_mvar, double base)
{
    grid::Bus b;
    b.id = id;
    b.v_min = kVmin;
    b.v_max = kVmax;
    b.p_bg = p_mw / base;
    b.q_bg = q_mvar / base;
    return b;
}

std::vector<std::pair<double, double>> lattice(int stations, double area)
{
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(stations))));
    const int rows = (stations + cols - 1) / cols;
    std::vector<std::pair<double, double>> out;
    for (int k = 0; k < stations; ++k)
    {
        const int c = k % cols;
        const int r = k / cols;
        out.emplace_back((c + 0.5) * area / cols, (r + 0.5) * area / rows);
    }
    return out;
}

/// Uneven battery availability summing to at least A.
std::vector<int> scarce_shares(int evs, int stations)
{
    static constexpr double kShares[] = {0.5, 0.1, 0.25, 0.25};
    std::vector<int> m(static_cast<std::size_t>(stations));
    if (stations == 4)
    {
        for (int j = 0; j < 4; ++j)
        {
            m[static_cast<std::size_t>(j)] = static_cast<int>(std::ceil(kShares[j] * evs));
        }
        return m;
    }
    double total = 0.0;
    for (int j = 0; j < stations; ++j)
    {
        total += kShares[j % 4];
    }
    for (int j = 0; j < stations; ++j)
    {
        m[static_cast<std::size_t>(j)] = static_cast<int>(std::ceil(1.1 * evs * kShares[j % 4] / total));
    }
    return m;
}

bool assignable(const fleet::Scenario& s)
{
    const auto d = fleet::distances(s.evs, s.stations);
    std::vector<int> choice;
    for (std::size_t a = 0; a < s.evs.size(); ++a)
    {
        Eigen::Index best = 0;
        d.row(static_cast<Eigen::Index>(a)).minCoeff(&best);
        choice.push_back(static_cast<int>(best));
    }
    try
    {
        fleet::repair_capacity(choice, s, d);
        return true;
    }
    catch (const Error&)
    {
        return false;
    }
}

} // namespace

grid::Grid random_feeder(int buses, int stations, std::uint64_t seed)
{
    if (buses < 2 || stations < 1 || stations > buses - 1)
    {
        throw Error(ErrorKind::InvalidArgument, "random_feeder: need 2+ buses and 1..buses-1 stations");
    }
    std::mt19937_64 rng(seed);
    grid::Grid g;
    g.base_mva = 1.0;
    g.root = 0;
    g.v_root = 1.0;
    for (int i = 0; i < buses; ++i)
    {
        const double p = i == 0 ? 0.0 : uniform(rng, 0.05, 0.3);
        g.buses.push_back(make_bus(i, p, p * uniform(rng, 0.2, 0.5), g.base_mva));
    }
    g.buses[0].generator = supply(g.base_mva);
    for (int i = 1; i < buses; ++i)
    {
        grid::Line ln;
        ln.from = uniform_int(rng, std::max(0, i - 3), i - 1);
        ln.to = i;
        ln.r = uniform(rng, 0.002, 0.01);
        ln.x = uniform(rng, 0.002, 0.01);
        ln.s_max = 5.0 / g.base_mva;
        g.lines.push_back(ln);
    }
    std::vector<int> others(static_cast<std::size_t>(buses - 1));
    std::iota(others.begin(), others.end(), 1);
    for (std::size_t i = others.size(); i > 1; --i)
    {
        std::swap(others[i - 1], others[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i) - 1))]);
    }
    for (int k = 0; k < stations; ++k)
    {
        g.buses[static_cast<std::size_t>(others[static_cast<std::size_t>(k)])].station_id = k;
    }
    const int dgs = uniform_int(rng, 1, 2);
    for (int k = 0; k < dgs; ++k)
    {
        g.buses[static_cast<std::size_t>(uniform_int(rng, 1, buses - 1))].generator = distributed(g.base_mva);
    }
    g.reindex();
    return g;
}

grid::Grid standin_feeder56()
{
    std::mt19937_64 rng(56);
    grid::Grid g;
    g.base_mva = 10.0;
    g.root = 1;
    g.v_root = 1.0;
    for (int id = 1; id <= 56; ++id)
    {
        const double p = id == 1 ? 0.0 : uniform(rng, 0.02, 0.12);
        g.buses.push_back(make_bus(id, p, p * uniform(rng, 0.2, 0.5), g.base_mva));
    }
    for (int id = 2; id <= 56; ++id)
    {
        grid::Line ln;
        ln.from = uniform_int(rng, std::max(1, id - 4), id - 1);
        ln.to = id;
        ln.r = uniform(rng, 0.002, 0.012);
        ln.x = uniform(rng, 0.002, 0.012);
        ln.s_max = 10.0 / g.base_mva;
        g.lines.push_back(ln);
    }
    g.buses[0].generator = supply(g.base_mva);
    for (int id : {4, 26, 34})
    {
        g.buses[static_cast<std::size_t>(id - 1)].generator = distributed(g.base_mva);
    }
    int station = 0;
    for (int id : {5, 16, 31, 43})
    {
        g.buses[static_cast<std::size_t>(id - 1)].station_id = station++;
    }
    g.reindex();
    return g;
}

MPolicy parse_policy(const std::string& text)
{
    if (text == "i" || text == "ample")
    {
        return MPolicy::Ample;
    }
    if (text == "ii" || text == "scarce")
    {
        return MPolicy::Scarce;
    }
    throw Error(ErrorKind::InputError, "unknown m-policy '" + text + "' (expected i or ii)");
}

fleet::Scenario generate_scenario(const grid::Grid& grid, const ScenarioOptions& opt)
{
    const auto buses = grid.station_buses();
    if (opt.stations < 1 || opt.stations > static_cast<int>(buses.size()))
    {
        throw Error(ErrorKind::InputError, "feeder has " + std::to_string(buses.size()) + " station buses, " +
                                               std::to_string(opt.stations) + " requested");
    }
    if (opt.evs < 0 || !(opt.area_km > 0.0))
    {
        throw Error(ErrorKind::InputError, "need A >= 0 and a positive area");
    }
    std::mt19937_64 rng(opt.seed);
    fleet::Scenario s;
    s.r_mw = opt.r_mw;
    s.alpha_per_km = opt.alpha_per_km;
    s.seed = opt.seed;
    const auto spots = lattice(opt.stations, opt.area_km);
    const auto scarce = scarce_shares(opt.evs, opt.stations);
    for (int j = 0; j < opt.stations; ++j)
    {
        fleet::Station st;
        st.bus = buses[static_cast<std::size_t>(j)];
        st.id = *grid.bus(st.bus).station_id;
        st.x = spots[static_cast<std::size_t>(j)].first;
        st.y = spots[static_cast<std::size_t>(j)].second;
        st.available = opt.policy == MPolicy::Ample ? opt.evs : scarce[static_cast<std::size_t>(j)];
        st.total = st.available;
        s.stations.push_back(st);
    }
    // Every EV reaches every station: range >= 1.5 * area > diagonal.
    const double gamma = 2.5 * opt.area_km;
    for (int a = 0; a < opt.evs; ++a)
    {
        fleet::Ev ev;
        ev.id = a;
        ev.x = uniform(rng, 0.0, opt.area_km);
        ev.y = uniform(rng, 0.0, opt.area_km);
        ev.gamma = gamma;
        ev.charge = uniform(rng, 0.6, 1.0);
        s.evs.push_back(ev);
    }
    return s;
}

namespace
{

Fixture draw_fixture(std::mt19937_64& rng, std::uint64_t seed, int a_min, int a_max)
{
    const int buses = uniform_int(rng, 6, 15);
    const int stations = uniform_int(rng, 2, 4);
    const int evs = uniform_int(rng, a_min, a_max);
    const bool binding = (seed % 2) == 1;

    Fixture fx;
    fx.name = "random-" + std::to_string(seed);
    fx.grid = random_feeder(buses, stations, rng());
    ScenarioOptions opt;
    opt.evs = evs;
    opt.stations = stations;
    opt.seed = rng();
    fx.scenario = generate_scenario(fx.grid, opt);
    auto& s = fx.scenario;

    const auto d = fleet::distances(s.evs, s.stations);
    for (std::size_t a = 0; a < s.evs.size(); ++a)
    {
        if (unit(rng) < 0.2)
        {
            const double nearest = d.row(static_cast<Eigen::Index>(a)).minCoeff();
            s.evs[a].gamma = 1.0;
            s.evs[a].charge = nearest + uniform(rng, 0.0, 1.5);
        }
    }
    if (binding)
    {
        std::vector<double> share(static_cast<std::size_t>(stations));
        for (double& x : share)
        {
            x = uniform(rng, 0.3, 1.0);
        }
        const double total = std::accumulate(share.begin(), share.end(), 0.0);
        for (int j = 0; j < stations; ++j)
        {
            s.stations[static_cast<std::size_t>(j)].available =
                std::max(1, static_cast<int>(std::floor(1.1 * evs * share[static_cast<std::size_t>(j)] / total)));
        }
        int j = 0;
        while (!assignable(s))
        {
            ++s.stations[static_cast<std::size_t>(j)].available;
            j = (j + 1) % stations;
        }
    }
    for (auto& st : s.stations)
    {
        st.total = st.available + uniform_int(rng, 0, 3);
    }
    return fx;
}

} // namespace

Fixture random_fixture(std::uint64_t seed, int a_min, int a_max)
{
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 17);
    // Some draws overload the feeder once every EV is served; redraw those.
    for (int attempt = 0; attempt < 50; ++attempt)
    {
        auto fx = draw_fixture(rng, seed, a_min, a_max);
        try
        {
            oracle::solve_centralized_relaxed(fx.grid, fx.scenario);
            return fx;
        }
        catch (const Error& e)
        {
            if (e.kind() != ErrorKind::Infeasible)
            {
                throw;
            }
        }
    }
    throw Error(ErrorKind::Infeasible, "random_fixture: no feasible draw for seed " + std::to_string(seed));
}

Fixture six_bus_fixture(int evs, bool binding, std::uint64_t seed)
{
    Fixture fx;
    fx.name = binding ? "six-bus-binding" : "six-bus";
    grid::Grid& g = fx.grid;
    g.base_mva = 1.0;
    g.root = 0;
    g.v_root = 1.0;
    const double loads[] = {0.0, 0.3, 0.25, 0.2, 0.3, 0.15};
    for (int i = 0; i < 6; ++i)
    {
        g.buses.push_back(make_bus(i, loads[i], 0.4 * loads[i], g.base_mva));
    }
    g.buses[0].generator = supply(g.base_mva);
    g.buses[3].generator = distributed(g.base_mva);
    g.buses[2].station_id = 0;
    g.buses[4].station_id = 1;
    g.buses[5].station_id = 2;
    const int ends[][2] = {{0, 1}, {1, 2}, {2, 3}, {1, 4}, {4, 5}};
    const double imp[][2] = {{0.004, 0.006}, {0.006, 0.005}, {0.008, 0.007}, {0.005, 0.008}, {0.007, 0.004}};
    for (int k = 0; k < 5; ++k)
    {
        g.lines.push_back({ends[k][0], ends[k][1], imp[k][0], imp[k][1], 5.0});
    }
    g.reindex();

    ScenarioOptions opt;
    opt.evs = evs;
    opt.stations = 3;
    opt.seed = seed;
    fx.scenario = generate_scenario(g, opt);
    if (binding)
    {
        const int m[] = {(evs + 1) / 2, std::max(1, evs / 10), (evs * 3 + 4) / 5};
        for (int j = 0; j < 3; ++j)
        {
            fx.scenario.stations[static_cast<std::size_t>(j)].available = m[j];
        }
    }
    for (auto& st : fx.scenario.stations)
    {
        st.total = st.available + 2;
    }
    return fx;
}

} // namespace swapgrid::generate
