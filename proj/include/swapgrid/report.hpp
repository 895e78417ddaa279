#pragma once

// Artifact formats written by the command-line tool, with their readers:
// solution JSON, run summary JSON, exactness report JSON and numeric CSV.

#include "swapgrid/fleet.hpp"
#include "swapgrid/grid.hpp"
#include "swapgrid/opf.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace swapgrid::report
{

struct Solution
{
    opf::PowerFlowSolution flow;
    fleet::Assignment assignment;
    double objective = 0.0; // $
};

/// {"format":"swapgrid-solution/1", objective, generation_cost, v, l, P, Q,
///  pg, qg, w_mw, assignment:{mode, u:[[...]]}}
nlohmann::json to_json(const Solution& sol);
Solution solution_from_json(const nlohmann::json& doc);

struct Summary
{
    std::string algo;
    double objective = 0.0;
    int iters = 0;
    double residual_final = 0.0; // MW
    int critical_count = 0;
    std::optional<double> rounding_gap;
    bool exact = true;
    bool converged = true;
    double r_mw = 0.0;
};

/// {objective, iters, residual_final, critical_count, rounding_gap?, exact,
///  algo, converged, r_mw}
nlohmann::json to_json(const Summary& s);
Summary summary_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const opf::ExactnessReport& r);
opf::ExactnessReport exactness_from_json(const nlohmann::json& doc);

struct CsvTable
{
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a column, or -1.
    int column(const std::string& name) const;
};

/// Numeric CSV with one header line.
CsvTable read_csv(std::istream& in);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

} // namespace swapgrid::report
