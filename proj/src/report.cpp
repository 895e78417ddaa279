#include "swapgrid/report.hpp"

#include "json_read.hpp"

#include <fstream>
#include <istream>
#include <sstream>

namespace swapgrid::report
{

using nlohmann::json;
using detail::read_array;
using detail::read_int;
using detail::read_number;
using detail::require;

namespace
{

std::vector<double> read_vec(const json& obj, const std::string& key, const std::string& path)
{
    const json& arr = read_array(obj, key, path);
    std::vector<double> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
    {
        if (!arr[i].is_number())
            throw Error(ErrorKind::SchemaViolation, "expected a number", detail::child_path(detail::child_path(path, key), i));
        out.push_back(arr[i].get<double>());
    }
    return out;
}

bool read_bool(const json& obj, const std::string& key, const std::string& path)
{
    const json& v = require(obj, key, path);
    if (!v.is_boolean())
        throw Error(ErrorKind::SchemaViolation, "field '" + key + "' must be a boolean", detail::child_path(path, key));
    return v.get<bool>();
}

} // namespace

json to_json(const Solution& sol)
{
    json u = json::array();
    for (Eigen::Index a = 0; a < sol.assignment.u.rows(); ++a)
    {
        std::vector<double> row(static_cast<std::size_t>(sol.assignment.u.cols()));
        for (Eigen::Index j = 0; j < sol.assignment.u.cols(); ++j)
            row[static_cast<std::size_t>(j)] = sol.assignment.u(a, j);
        u.push_back(row);
    }
    const auto& f = sol.flow;
    return {{"format", "swapgrid-solution/1"},
            {"objective", sol.objective},
            {"generation_cost", f.generation_cost},
            {"objective_value", f.objective_value},
            {"solver_iterations", f.solver_iterations},
            {"v", f.v},
            {"l", f.l},
            {"P", f.P},
            {"Q", f.Q},
            {"pg", f.pg},
            {"qg", f.qg},
            {"w_mw", f.w},
            {"assignment",
             {{"mode", sol.assignment.mode == fleet::Mode::Binary ? "binary" : "relaxed"}, {"u", u}}}};
}

Solution solution_from_json(const json& doc)
{
    detail::require_format(doc, "swapgrid-solution/1");
    Solution sol;
    sol.objective = read_number(doc, "objective", "");
    auto& f = sol.flow;
    f.generation_cost = read_number(doc, "generation_cost", "");
    f.objective_value = read_number(doc, "objective_value", "");
    f.solver_iterations = read_int(doc, "solver_iterations", "");
    f.v = read_vec(doc, "v", "");
    f.l = read_vec(doc, "l", "");
    f.P = read_vec(doc, "P", "");
    f.Q = read_vec(doc, "Q", "");
    f.pg = read_vec(doc, "pg", "");
    f.qg = read_vec(doc, "qg", "");
    f.w = read_vec(doc, "w_mw", "");
    const json& as = require(doc, "assignment", "");
    const json& mode = require(as, "mode", "/assignment");
    if (mode != "binary" && mode != "relaxed")
        throw Error(ErrorKind::SchemaViolation, "mode must be 'binary' or 'relaxed'", "/assignment/mode");
    sol.assignment.mode = mode == "binary" ? fleet::Mode::Binary : fleet::Mode::Relaxed;
    const json& rows = read_array(as, "u", "/assignment");
    const std::size_t cols = rows.empty() ? 0 : rows[0].size();
    sol.assignment.u = fleet::Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t a = 0; a < rows.size(); ++a)
    {
        const std::string path = "/assignment/u/" + std::to_string(a);
        if (!rows[a].is_array() || rows[a].size() != cols)
            throw Error(ErrorKind::SchemaViolation, "assignment rows must have equal length", path);
        for (std::size_t j = 0; j < cols; ++j)
        {
            if (!rows[a][j].is_number())
                throw Error(ErrorKind::SchemaViolation, "expected a number", path + "/" + std::to_string(j));
            sol.assignment.u(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = rows[a][j].get<double>();
        }
    }
    return sol;
}

json to_json(const Summary& s)
{
    json doc = {{"objective", s.objective},
                {"iters", s.iters},
                {"residual_final", s.residual_final},
                {"critical_count", s.critical_count},
                {"exact", s.exact},
                {"algo", s.algo},
                {"converged", s.converged},
                {"r_mw", s.r_mw}};
    if (s.rounding_gap)
        doc["rounding_gap"] = *s.rounding_gap;
    return doc;
}

Summary summary_from_json(const json& doc)
{
    Summary s;
    s.objective = read_number(doc, "objective", "");
    s.iters = read_int(doc, "iters", "");
    s.residual_final = read_number(doc, "residual_final", "");
    s.critical_count = read_int(doc, "critical_count", "");
    s.exact = read_bool(doc, "exact", "");
    if (doc.contains("rounding_gap"))
        s.rounding_gap = read_number(doc, "rounding_gap", "");
    if (doc.contains("algo"))
    {
        if (!doc["algo"].is_string())
            throw Error(ErrorKind::SchemaViolation, "field 'algo' must be a string", "/algo");
        s.algo = doc["algo"].get<std::string>();
    }
    if (doc.contains("converged"))
        s.converged = read_bool(doc, "converged", "");
    s.r_mw = detail::read_number_or(doc, "r_mw", "", 0.0);
    return s;
}

json to_json(const opf::ExactnessReport& r)
{
    return {{"residual", r.residual},
            {"relative_residual", r.relative_residual},
            {"max_relative", r.max_relative},
            {"exact", r.exact}};
}

opf::ExactnessReport exactness_from_json(const json& doc)
{
    opf::ExactnessReport r;
    r.residual = read_vec(doc, "residual", "");
    r.relative_residual = read_vec(doc, "relative_residual", "");
    r.max_relative = read_number(doc, "max_relative", "");
    r.exact = read_bool(doc, "exact", "");
    return r;
}

int CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return static_cast<int>(i);
    return -1;
}

CsvTable read_csv(std::istream& in)
{
    CsvTable t;
    std::string line;
    const auto split = [](const std::string& text) {
        std::vector<std::string> cells;
        std::stringstream ss(text);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        return cells;
    };
    if (!std::getline(in, line))
        return t;
    t.header = split(line);
    int lineno = 1;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty())
            continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            throw Error(ErrorKind::SchemaViolation, "csv line " + std::to_string(lineno) + ": wrong number of cells");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells)
        {
            try
            {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size())
                    throw std::invalid_argument(c);
            }
            catch (const std::exception&)
            {
                throw Error(ErrorKind::SchemaViolation, "csv line " + std::to_string(lineno) + ": bad number '" + c + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::InputError, "file not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return detail::parse_document(ss.str());
}

void write_json_file(const std::string& path, const json& doc)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::InputError, "cannot write " + path);
    out << doc.dump(2) << '\n';
}

} // namespace swapgrid::report
