#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace swapgrid::conic
{

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term
{
    int var;
    double coef;
};

/// Sparse affine expression sum_i coef_i * x_var_i + constant.
struct AffineExpr
{
    std::vector<Term> terms;
    double constant = 0.0;

    AffineExpr() = default;
    explicit AffineExpr(double c) : constant(c) {}

    AffineExpr& add(int var, double coef)
    {
        if (coef != 0.0)
        {
            terms.push_back({var, coef});
        }
        return *this;
    }
    AffineExpr& offset(double c)
    {
        constant += c;
        return *this;
    }
    double evaluate(const std::vector<double>& x) const;
};

enum class ConeKind
{
    NonNegative,
    SecondOrder, // rows[0] >= || rows[1..] ||
};

struct ConeBlock
{
    ConeKind kind;
    std::vector<AffineExpr> rows;
};

/// A conic program in "modelling" form:
///   minimize   cost^T x + cost_constant
///   subject to equalities(x) == 0, lower <= x <= upper, cones(x) in K.
/// Quadratic terms are expected to be encoded with rotated-cone epigraphs
/// (see add_quadratic_epigraph), so every solver sees a purely conic program.
class ConicProblem
{
public:
    int add_variable(std::string name, double lower = -kInf, double upper = kInf);

    void add_cost(int var, double coef) { cost_.at(static_cast<std::size_t>(var)) += coef; }
    void add_cost_constant(double c) { cost_constant_ += c; }
    void add_equality(AffineExpr expr) { equalities_.push_back(std::move(expr)); }
    void add_nonnegative(AffineExpr expr);
    void add_second_order(std::vector<AffineExpr> rows);

    /// Adds sum_i terms_i^2 <= epigraph via || (2 y, t - 1) || <= t + 1.
    void add_quadratic_epigraph(const std::vector<AffineExpr>& terms, int epigraph);

    void set_bounds(int var, double lower, double upper);

    int num_vars() const { return static_cast<int>(cost_.size()); }
    const std::vector<std::string>& var_names() const { return names_; }
    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    const std::vector<double>& cost() const { return cost_; }
    double cost_constant() const { return cost_constant_; }
    const std::vector<AffineExpr>& equalities() const { return equalities_; }
    const std::vector<ConeBlock>& cones() const { return cones_; }

    double objective(const std::vector<double>& x) const;

    /// Throws swapgrid::Error(InvalidArgument) on out-of-range variables,
    /// inverted bounds or empty cone blocks.
    void validate() const;

private:
    std::vector<std::string> names_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<double> cost_;
    double cost_constant_ = 0.0;
    std::vector<AffineExpr> equalities_;
    std::vector<ConeBlock> cones_;
};

/// Standard form shared by the solvers:
///   min c^T x + c0  s.t.  A x = b,  G x + s = h,  s in R+^l x Q^{q_1} x ...
struct StandardForm
{
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    Eigen::SparseMatrix<double> G;
    Eigen::VectorXd h;
    Eigen::VectorXd c;
    double c0 = 0.0;
    int num_linear = 0;
    std::vector<int> soc_dims;

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_eq() const { return static_cast<int>(b.size()); }
    int num_cone_rows() const { return static_cast<int>(h.size()); }
    int degree() const { return num_linear + static_cast<int>(soc_dims.size()); }
};

/// Bounds become linear rows (or equalities when lower == upper); linear
/// rows are placed before all second-order blocks.
StandardForm lower_to_standard_form(const ConicProblem& problem);

/// Writes the problem in the Conic Benchmark Format (CBF, version 3).
void write_cbf(const ConicProblem& problem, std::ostream& out);

enum class SolveStatus
{
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
};

std::string_view to_string(SolveStatus status);

struct SolverSettings
{
    double feastol = 1e-9;
    double abstol = 1e-10;
    double reltol = 1e-11;
    int max_iters = 120;
    // Newton polish on the active constraints after convergence.
    bool polish = true;
};

struct ConicResult
{
    SolveStatus status = SolveStatus::NumericalFailure;
    std::vector<double> x;
    std::vector<double> eq_duals;
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    bool polished = false;
    std::string message;
};

/// Contract: solve a ConicProblem to the solver's tolerances. Implementations
/// keep all workspace local to a call so a handle is cheap, but handles are
/// not meant to be shared across threads.
class ConicSolver
{
public:
    virtual ~ConicSolver() = default;
    virtual ConicResult solve(const ConicProblem& problem) const = 0;
    virtual std::string_view name() const = 0;
};

/// Sparse primal-dual interior-point method on the homogeneous self-dual
/// embedding with Nesterov-Todd scaling and Mehrotra correction. Default solver.
class InteriorPointSolver final : public ConicSolver
{
public:
    explicit InteriorPointSolver(SolverSettings settings = {}) : settings_(settings) {}
    ConicResult solve(const ConicProblem& problem) const override;
    std::string_view name() const override { return "ipm-hsde"; }

private:
    SolverSettings settings_;
};

/// Dense primal log-barrier method with a phase-I feasibility search. Slow,
/// independent of the interior-point code path; used for cross-checks on
/// small instances. Requires a strictly feasible point.
class BarrierSolver final : public ConicSolver
{
public:
    explicit BarrierSolver(double gap_tolerance = 1e-10) : gap_tolerance_(gap_tolerance) {}
    ConicResult solve(const ConicProblem& problem) const override;
    std::string_view name() const override { return "dense-barrier"; }

private:
    double gap_tolerance_;
};

} // namespace swapgrid::conic
