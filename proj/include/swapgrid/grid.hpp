#pragma once

// Radial feeder model. Everything stored here is per-unit on base_mva:
// powers in pu, impedances in pu, voltages as squared magnitudes (pu^2),
// generator cost coefficients in $/pu^2 and $/pu.

#include <json.hpp>

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace swapgrid::grid
{

inline constexpr const char* kFeederFormat = "swapgrid-feeder/1";

struct GeneratorSpec
{
    double p_min = 0.0;
    double p_max = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    double cost_quadratic = 0.0;
    double cost_linear = 0.0;

    double cost(double p) const { return cost_quadratic * p * p + cost_linear * p; }
};

struct Bus
{
    int id = 0;
    double v_min = 0.0;
    double v_max = 0.0;
    double p_bg = 0.0;
    double q_bg = 0.0;
    std::optional<GeneratorSpec> generator;
    std::optional<int> station_id;
};

struct Line
{
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double s_max = 0.0;
};

class Grid
{
public:
    double base_mva = 1.0;
    int root = 0;
    double v_root = 1.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;

    /// Rebuilds the id -> index map; call after editing buses by hand.
    void reindex();

    int num_buses() const { return static_cast<int>(buses.size()); }
    int num_lines() const { return static_cast<int>(lines.size()); }

    bool has_bus(int id) const { return index_.count(id) != 0; }
    /// Throws Error(DanglingReference) for unknown ids.
    int index_of(int id) const;
    const Bus& bus(int id) const { return buses[static_cast<std::size_t>(index_of(id))]; }

    /// Ids of buses hosting a station, in bus order.
    std::vector<int> station_buses() const;
    /// Bus id hosting the station with the given station id, if any.
    std::optional<int> bus_of_station(int station_id) const;

private:
    std::unordered_map<int, int> index_;
};

struct RadialReport
{
    bool ok = true;
    std::vector<std::string> violations;
};

/// ok iff the lines form a spanning tree oriented away from the root.
RadialReport validate_radial(const Grid& grid);

/// Parses and validates a feeder document (MW/Mvar/$ units) into a
/// per-unit Grid. Errors carry a JSON-pointer path into the document.
Grid load_feeder(const std::string& text);
Grid load_feeder_file(const std::string& path);
Grid from_json(const nlohmann::json& doc);

/// Inverse of from_json: converts back to document units.
nlohmann::json to_json(const Grid& grid);

/// Net injection (p_j, q_j) at a bus, all per-unit. station_load must be
/// zero at buses without a station.
std::pair<double, double> net_injection(const Grid& grid, int bus_id, double p_gen, double q_gen,
                                        double station_load);

} // namespace swapgrid::grid
