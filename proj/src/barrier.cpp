#include "swapgrid/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <optional>

namespace swapgrid::conic
{
namespace
{

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct DenseProblem
{
    Mat A;
    Vec b;
    Mat G;
    Vec h;
    Vec c;
    int num_linear = 0;
    std::vector<int> soc_dims;

    int barrier_degree() const { return num_linear + 2 * static_cast<int>(soc_dims.size()); }
};

bool interior(const DenseProblem& dp, const Vec& s)
{
    for (int i = 0; i < dp.num_linear; ++i)
    {
        if (!(s[i] > 0.0))
        {
            return false;
        }
    }
    int off = dp.num_linear;
    for (int d : dp.soc_dims)
    {
        const auto sk = s.segment(off, d);
        if (!(sk[0] > 0.0) || !(sk[0] * sk[0] - sk.tail(d - 1).squaredNorm() > 0.0))
        {
            return false;
        }
        off += d;
    }
    return true;
}

double log_barrier(const DenseProblem& dp, const Vec& s)
{
    double value = 0.0;
    for (int i = 0; i < dp.num_linear; ++i)
    {
        value -= std::log(s[i]);
    }
    int off = dp.num_linear;
    for (int d : dp.soc_dims)
    {
        const auto sk = s.segment(off, d);
        value -= std::log(sk[0] * sk[0] - sk.tail(d - 1).squaredNorm());
        off += d;
    }
    return value;
}

/// Gradient and Hessian of the barrier with respect to s.
void barrier_derivatives(const DenseProblem& dp, const Vec& s, Vec& grad, Mat& hess)
{
    const auto m = s.size();
    grad = Vec::Zero(m);
    hess = Mat::Zero(m, m);
    for (int i = 0; i < dp.num_linear; ++i)
    {
        grad[i] = -1.0 / s[i];
        hess(i, i) = 1.0 / (s[i] * s[i]);
    }
    int off = dp.num_linear;
    for (int d : dp.soc_dims)
    {
        const Vec sk = s.segment(off, d);
        Vec js = -sk;
        js[0] = sk[0];
        const double det = sk.dot(js);
        grad.segment(off, d) = -2.0 * js / det;
        Mat block = 4.0 * js * js.transpose() / (det * det);
        block(0, 0) -= 2.0 / det;
        for (int a = 1; a < d; ++a)
        {
            block(a, a) += 2.0 / det;
        }
        hess.block(off, off, d, d) = block;
        off += d;
    }
}

struct BarrierOutcome
{
    Vec x;
    bool converged = false;
    bool stopped_early = false;
    int newton_steps = 0;
};

/// Orthonormal basis of the null space of A.
Mat null_space(const Mat& A, int n)
{
    if (A.rows() == 0)
    {
        return Mat::Identity(n, n);
    }
    Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeFullV);
    svd.setThreshold(1e-12);
    const auto rank = svd.rank();
    return svd.matrixV().rightCols(n - rank);
}

/// Minimizes c^T x over {A x = b, h - G x in K} from a strictly feasible x0
/// (A x0 = b). Newton steps live in the null space of A, so the equalities
/// hold exactly along the whole path.
BarrierOutcome run_barrier(const DenseProblem& dp, Vec x, double gap_tol, const std::function<bool(const Vec&)>& stop)
{
    BarrierOutcome out;
    const Mat basis = null_space(dp.A, static_cast<int>(x.size()));
    const Mat g_basis = dp.G * basis;
    const Vec c_reduced = basis.transpose() * dp.c;
    const double theta = dp.barrier_degree();
    double t = 1.0;
    constexpr double kGrowth = 20.0;
    constexpr int kMaxNewton = 200;

    for (int outer = 0; outer < 60; ++outer)
    {
        for (int inner = 0; inner < kMaxNewton; ++inner)
        {
            const Vec s = dp.h - dp.G * x;
            Vec gs;
            Mat hs;
            barrier_derivatives(dp, s, gs, hs);
            const Vec grad = t * c_reduced - g_basis.transpose() * gs;
            Mat hess = g_basis.transpose() * hs * g_basis;
            hess.diagonal().array() += 1e-14 * std::max(1.0, hess.diagonal().maxCoeff());
            const Vec dz = -hess.ldlt().solve(grad);
            const Vec dx = basis * dz;
            const double decrement = -grad.dot(dz);
            ++out.newton_steps;
            if (!(decrement > 1e-12))
            {
                break;
            }
            const double f0 = t * dp.c.dot(x) + log_barrier(dp, s);
            double step = 1.0;
            while (step > 1e-16)
            {
                const Vec xn = x + step * dx;
                const Vec sn = dp.h - dp.G * xn;
                if (interior(dp, sn) && t * dp.c.dot(xn) + log_barrier(dp, sn) <= f0 - 0.25 * step * decrement)
                {
                    break;
                }
                step *= 0.5;
            }
            if (step <= 1e-16)
            {
                break;
            }
            x += step * dx;
            if (stop && stop(x))
            {
                out.x = x;
                out.stopped_early = true;
                return out;
            }
        }
        if (theta / t < gap_tol * std::max(1.0, std::abs(dp.c.dot(x))))
        {
            out.converged = true;
            break;
        }
        t *= kGrowth;
    }
    out.x = x;
    return out;
}

} // namespace

ConicResult BarrierSolver::solve(const ConicProblem& problem) const
{
    const StandardForm sf = lower_to_standard_form(problem);
    DenseProblem dp{Mat(sf.A), sf.b, Mat(sf.G), sf.h, sf.c, sf.num_linear, sf.soc_dims};
    const int n = sf.num_vars();
    const int m = sf.num_cone_rows();
    ConicResult result;

    Vec x0 = Vec::Zero(n);
    if (dp.b.size() > 0)
    {
        x0 = dp.A.completeOrthogonalDecomposition().solve(dp.b);
        if ((dp.A * x0 - dp.b).norm() > 1e-8 * std::max(1.0, dp.b.norm()))
        {
            result.status = SolveStatus::Infeasible;
            result.message = "inconsistent equalities";
            return result;
        }
    }

    // Phase I: min tau s.t. A x = b, h - G x + tau e in K.
    Vec e = Vec::Zero(m);
    e.head(dp.num_linear).setOnes();
    {
        int off = dp.num_linear;
        for (int d : dp.soc_dims)
        {
            e[off] = 1.0;
            off += d;
        }
    }
    const Vec s0 = dp.h - dp.G * x0;
    if (!interior(dp, s0))
    {
        double shift = 0.0;
        for (int i = 0; i < dp.num_linear; ++i)
        {
            shift = std::max(shift, -s0[i]);
        }
        int off = dp.num_linear;
        for (int d : dp.soc_dims)
        {
            shift = std::max(shift, s0.segment(off + 1, d - 1).norm() - s0[off]);
            off += d;
        }
        DenseProblem phase1;
        phase1.A = Mat::Zero(dp.A.rows(), n + 1);
        phase1.A.leftCols(n) = dp.A;
        phase1.b = dp.b;
        phase1.G = Mat::Zero(m, n + 1);
        phase1.G.leftCols(n) = dp.G;
        phase1.G.col(n) = -e;
        phase1.h = dp.h;
        phase1.c = Vec::Zero(n + 1);
        phase1.c[n] = 1.0;
        phase1.num_linear = dp.num_linear;
        phase1.soc_dims = dp.soc_dims;
        Vec start(n + 1);
        start << x0, shift + 1.0;
        const auto found = run_barrier(phase1, start, 1e-12, [n](const Vec& v) { return v[n] < -1e-9; });
        result.iterations += found.newton_steps;
        if (!found.stopped_early)
        {
            result.status = SolveStatus::Infeasible;
            result.message = "no strictly feasible point";
            return result;
        }
        x0 = found.x.head(n);
    }

    const auto solved = run_barrier(dp, x0, gap_tolerance_, {});
    result.iterations += solved.newton_steps;
    result.x.assign(solved.x.data(), solved.x.data() + n);
    result.status = solved.converged ? SolveStatus::Optimal : SolveStatus::MaxIterations;
    result.primal_residual = dp.b.size() > 0 ? (dp.A * solved.x - dp.b).norm() : 0.0;
    result.objective = problem.objective(result.x);
    return result;
}

} // namespace swapgrid::conic
