#include "swapgrid/conic.hpp"
#include "swapgrid/error.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace swapgrid
{

std::string_view to_string(ErrorKind kind)
{
    switch (kind)
    {
    case ErrorKind::SchemaViolation: return "schema violation";
    case ErrorKind::NonTreeTopology: return "non-tree topology";
    case ErrorKind::DanglingReference: return "dangling reference";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::NumericalFailure: return "numerical failure";
    case ErrorKind::EvUnreachable: return "ev unreachable";
    case ErrorKind::CapacityInfeasible: return "capacity infeasible";
    case ErrorKind::TooLarge: return "too large";
    case ErrorKind::TransportViolation: return "transport violation";
    case ErrorKind::InputError: return "input error";
    }
    return "unknown";
}

} // namespace swapgrid

namespace swapgrid::conic
{

double AffineExpr::evaluate(const std::vector<double>& x) const
{
    double value = constant;
    for (const auto& t : terms)
    {
        value += t.coef * x[static_cast<std::size_t>(t.var)];
    }
    return value;
}

int ConicProblem::add_variable(std::string name, double lower, double upper)
{
    names_.push_back(std::move(name));
    lower_.push_back(lower);
    upper_.push_back(upper);
    cost_.push_back(0.0);
    return static_cast<int>(cost_.size()) - 1;
}

void ConicProblem::add_nonnegative(AffineExpr expr)
{
    cones_.push_back({ConeKind::NonNegative, {std::move(expr)}});
}

void ConicProblem::add_second_order(std::vector<AffineExpr> rows)
{
    cones_.push_back({ConeKind::SecondOrder, std::move(rows)});
}

void ConicProblem::add_quadratic_epigraph(const std::vector<AffineExpr>& terms, int epigraph)
{
    std::vector<AffineExpr> rows;
    rows.reserve(terms.size() + 2);
    rows.push_back(AffineExpr(1.0).add(epigraph, 1.0));
    rows.push_back(AffineExpr(-1.0).add(epigraph, 1.0));
    for (const auto& y : terms)
    {
        AffineExpr scaled(2.0 * y.constant);
        for (const auto& t : y.terms)
        {
            scaled.add(t.var, 2.0 * t.coef);
        }
        rows.push_back(std::move(scaled));
    }
    add_second_order(std::move(rows));
}

void ConicProblem::set_bounds(int var, double lower, double upper)
{
    lower_.at(static_cast<std::size_t>(var)) = lower;
    upper_.at(static_cast<std::size_t>(var)) = upper;
}

double ConicProblem::objective(const std::vector<double>& x) const
{
    double value = cost_constant_;
    for (std::size_t i = 0; i < cost_.size(); ++i)
    {
        value += cost_[i] * x[i];
    }
    return value;
}

void ConicProblem::validate() const
{
    const int n = num_vars();
    auto check_expr = [n](const AffineExpr& e) {
        for (const auto& t : e.terms)
        {
            if (t.var < 0 || t.var >= n || !std::isfinite(t.coef))
            {
                throw Error(ErrorKind::InvalidArgument, "conic problem: bad term in expression");
            }
        }
    };
    for (int i = 0; i < n; ++i)
    {
        if (lower_[i] > upper_[i])
        {
            throw Error(ErrorKind::InvalidArgument, "conic problem: inverted bounds on " + names_[i]);
        }
    }
    for (const auto& e : equalities_)
    {
        check_expr(e);
    }
    for (const auto& cone : cones_)
    {
        if (cone.rows.empty() || (cone.kind == ConeKind::NonNegative && cone.rows.size() != 1))
        {
            throw Error(ErrorKind::InvalidArgument, "conic problem: malformed cone block");
        }
        for (const auto& e : cone.rows)
        {
            check_expr(e);
        }
    }
}

StandardForm lower_to_standard_form(const ConicProblem& problem)
{
    problem.validate();
    const int n = problem.num_vars();

    std::vector<Eigen::Triplet<double>> a_trip;
    std::vector<double> b;
    auto push_eq = [&](const AffineExpr& e) {
        const int row = static_cast<int>(b.size());
        for (const auto& t : e.terms)
        {
            a_trip.emplace_back(row, t.var, t.coef);
        }
        b.push_back(-e.constant);
    };

    // Rows of G x + s = h with s = expr = a^T x + k  =>  G row = -a, h = k.
    std::vector<Eigen::Triplet<double>> g_trip;
    std::vector<double> h;
    auto push_cone_row = [&](const AffineExpr& e) {
        const int row = static_cast<int>(h.size());
        for (const auto& t : e.terms)
        {
            g_trip.emplace_back(row, t.var, -t.coef);
        }
        h.push_back(e.constant);
    };

    for (const auto& e : problem.equalities())
    {
        push_eq(e);
    }
    for (int i = 0; i < n; ++i)
    {
        const double lo = problem.lower()[i];
        const double hi = problem.upper()[i];
        if (lo == hi)
        {
            push_eq(AffineExpr(-lo).add(i, 1.0));
            continue;
        }
        if (std::isfinite(lo))
        {
            push_cone_row(AffineExpr(-lo).add(i, 1.0));
        }
        if (std::isfinite(hi))
        {
            push_cone_row(AffineExpr(hi).add(i, -1.0));
        }
    }
    for (const auto& cone : problem.cones())
    {
        if (cone.kind == ConeKind::NonNegative)
        {
            push_cone_row(cone.rows.front());
        }
    }
    StandardForm sf;
    sf.num_linear = static_cast<int>(h.size());
    for (const auto& cone : problem.cones())
    {
        if (cone.kind == ConeKind::SecondOrder)
        {
            for (const auto& row : cone.rows)
            {
                push_cone_row(row);
            }
            sf.soc_dims.push_back(static_cast<int>(cone.rows.size()));
        }
    }

    sf.A.resize(static_cast<Eigen::Index>(b.size()), n);
    sf.A.setFromTriplets(a_trip.begin(), a_trip.end());
    sf.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    sf.G.resize(static_cast<Eigen::Index>(h.size()), n);
    sf.G.setFromTriplets(g_trip.begin(), g_trip.end());
    sf.h = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
    sf.c = Eigen::Map<const Eigen::VectorXd>(problem.cost().data(), n);
    sf.c0 = problem.cost_constant();
    return sf;
}

void write_cbf(const ConicProblem& problem, std::ostream& out)
{
    problem.validate();
    const int n = problem.num_vars();

    // Every constraint is an affine row; group rows into CBF cone domains.
    struct Domain
    {
        std::string kind;
        std::vector<const AffineExpr*> rows;
    };
    std::vector<AffineExpr> bound_rows;
    for (int i = 0; i < n; ++i)
    {
        const double lo = problem.lower()[i];
        const double hi = problem.upper()[i];
        if (lo == hi)
        {
            continue;
        }
        if (std::isfinite(lo))
        {
            bound_rows.push_back(AffineExpr(-lo).add(i, 1.0));
        }
        if (std::isfinite(hi))
        {
            bound_rows.push_back(AffineExpr(hi).add(i, -1.0));
        }
    }
    std::vector<AffineExpr> fixed_rows;
    for (int i = 0; i < n; ++i)
    {
        if (problem.lower()[i] == problem.upper()[i])
        {
            fixed_rows.push_back(AffineExpr(-problem.lower()[i]).add(i, 1.0));
        }
    }

    std::vector<Domain> domains;
    Domain eq{"L=", {}};
    for (const auto& e : problem.equalities())
    {
        eq.rows.push_back(&e);
    }
    for (const auto& e : fixed_rows)
    {
        eq.rows.push_back(&e);
    }
    if (!eq.rows.empty())
    {
        domains.push_back(std::move(eq));
    }
    Domain nonneg{"L+", {}};
    for (const auto& e : bound_rows)
    {
        nonneg.rows.push_back(&e);
    }
    for (const auto& cone : problem.cones())
    {
        if (cone.kind == ConeKind::NonNegative)
        {
            nonneg.rows.push_back(&cone.rows.front());
        }
    }
    if (!nonneg.rows.empty())
    {
        domains.push_back(std::move(nonneg));
    }
    for (const auto& cone : problem.cones())
    {
        if (cone.kind == ConeKind::SecondOrder)
        {
            Domain q{"Q", {}};
            for (const auto& row : cone.rows)
            {
                q.rows.push_back(&row);
            }
            domains.push_back(std::move(q));
        }
    }

    std::size_t total_rows = 0;
    std::size_t a_nnz = 0;
    std::size_t b_nnz = 0;
    for (const auto& d : domains)
    {
        total_rows += d.rows.size();
        for (const auto* r : d.rows)
        {
            a_nnz += r->terms.size();
            b_nnz += r->constant != 0.0 ? 1 : 0;
        }
    }

    out << std::setprecision(17);
    out << "VER\n3\n\nOBJSENSE\nMIN\n\nVAR\n" << n << " 1\nF " << n << "\n\n";
    out << "CON\n" << total_rows << ' ' << domains.size() << '\n';
    for (const auto& d : domains)
    {
        out << d.kind << ' ' << d.rows.size() << '\n';
    }
    out << '\n';

    std::size_t obj_nnz = 0;
    for (double c : problem.cost())
    {
        obj_nnz += c != 0.0 ? 1 : 0;
    }
    if (obj_nnz > 0)
    {
        out << "OBJACOORD\n" << obj_nnz << '\n';
        for (int i = 0; i < n; ++i)
        {
            if (problem.cost()[i] != 0.0)
            {
                out << i << ' ' << problem.cost()[i] << '\n';
            }
        }
        out << '\n';
    }
    if (problem.cost_constant() != 0.0)
    {
        out << "OBJBCOORD\n" << problem.cost_constant() << "\n\n";
    }

    out << "ACOORD\n" << a_nnz << '\n';
    std::size_t row = 0;
    for (const auto& d : domains)
    {
        for (const auto* r : d.rows)
        {
            for (const auto& t : r->terms)
            {
                out << row << ' ' << t.var << ' ' << t.coef << '\n';
            }
            ++row;
        }
    }
    out << '\n';
    out << "BCOORD\n" << b_nnz << '\n';
    row = 0;
    for (const auto& d : domains)
    {
        for (const auto* r : d.rows)
        {
            if (r->constant != 0.0)
            {
                out << row << ' ' << r->constant << '\n';
            }
            ++row;
        }
    }
}

std::string_view to_string(SolveStatus status)
{
    switch (status)
    {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

} // namespace swapgrid::conic
