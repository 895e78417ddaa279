#include "swapgrid/conic.hpp"
#include "swapgrid/cone_ops.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace swapgrid::conic
{
namespace
{

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kStaticReg = 7e-8;
// Larger regularizations tried in turn when the factorization breaks down
// near the boundary of the cones; refinement absorbs the perturbation.
constexpr double kFallbackReg[] = {1e-6, 1e-5, 1e-4};
constexpr int kMaxRefine = 8;
constexpr int kMaxRefineRegularized = 30;
constexpr double kStepFactor = 0.99;
constexpr double kSigmaMin = 1e-4;
constexpr double kEquilibrationBound = 1e4;
constexpr int kEquilibrationPasses = 12;

/// Diagonal (Ruiz) equilibration. Rows of one second-order block share a
/// factor so the cone is preserved.
struct Equilibration
{
    Vec col; // D
    Vec eq_row; // E_A
    Vec cone_row; // E_G
};

Equilibration equilibrate(StandardForm& sf)
{
    const int n = sf.num_vars();
    const int p = sf.num_eq();
    const int m = sf.num_cone_rows();
    Equilibration eq{Vec::Ones(n), Vec::Ones(p), Vec::Ones(m)};

    auto clamp_factor = [](double v) {
        if (!(v > 0.0))
        {
            return 1.0;
        }
        return std::clamp(1.0 / std::sqrt(v), 1.0 / kEquilibrationBound, kEquilibrationBound);
    };

    for (int pass = 0; pass < kEquilibrationPasses; ++pass)
    {
        Vec col_max = Vec::Zero(n);
        Vec a_row_max = Vec::Zero(p);
        Vec g_row_max = Vec::Zero(m);
        for (int j = 0; j < n; ++j)
        {
            for (SpMat::InnerIterator it(sf.A, j); it; ++it)
            {
                const double v = std::abs(it.value());
                col_max[j] = std::max(col_max[j], v);
                a_row_max[it.row()] = std::max(a_row_max[it.row()], v);
            }
            for (SpMat::InnerIterator it(sf.G, j); it; ++it)
            {
                const double v = std::abs(it.value());
                col_max[j] = std::max(col_max[j], v);
                g_row_max[it.row()] = std::max(g_row_max[it.row()], v);
            }
        }
        int offset = sf.num_linear;
        for (int dim : sf.soc_dims)
        {
            const double block_max = g_row_max.segment(offset, dim).maxCoeff();
            g_row_max.segment(offset, dim).setConstant(block_max);
            offset += dim;
        }

        Vec dcol(n);
        Vec da(p);
        Vec dg(m);
        for (int j = 0; j < n; ++j)
        {
            dcol[j] = clamp_factor(col_max[j]);
        }
        for (int i = 0; i < p; ++i)
        {
            da[i] = clamp_factor(a_row_max[i]);
        }
        for (int i = 0; i < m; ++i)
        {
            dg[i] = clamp_factor(g_row_max[i]);
        }
        sf.A = da.asDiagonal() * sf.A * dcol.asDiagonal();
        sf.G = dg.asDiagonal() * sf.G * dcol.asDiagonal();
        eq.col.array() *= dcol.array();
        eq.eq_row.array() *= da.array();
        eq.cone_row.array() *= dg.array();
    }
    sf.b = eq.eq_row.asDiagonal() * sf.b;
    sf.h = eq.cone_row.asDiagonal() * sf.h;
    sf.c = eq.col.asDiagonal() * sf.c;
    return eq;
}

class HsdeSolver
{
public:
    HsdeSolver(const StandardForm& sf, const Equilibration& eq, const SolverSettings& settings)
        : sf_(sf), eq_(eq), settings_(settings), cones_(sf.num_linear, sf.soc_dims),
          n_(sf.num_vars()), p_(sf.num_eq()), m_(sf.num_cone_rows())
    {
        build_kkt_pattern();
    }

    ConicResult run();

private:
    void build_kkt_pattern();
    void load_scaling_into_kkt(const NtScaling& w);
    void set_regularization(double reg);
    bool factor(const NtScaling& w);
    void solve_kkt(const Vec& rhs, Vec& sol, const NtScaling& w) const;
    void split(const Vec& sol, Vec& dx, Vec& dy, Vec& dz) const;
    bool polish(Vec& x, Vec& y, const Vec& s, const Vec& z) const;

    const StandardForm& sf_;
    const Equilibration& eq_;
    SolverSettings settings_;
    ConeLayout cones_;
    int n_;
    int p_;
    int m_;

    SpMat kkt_;
    std::vector<Eigen::Index> x_diag_;
    std::vector<Eigen::Index> y_diag_;
    std::vector<Eigen::Index> lp_diag_;
    double reg_ = kStaticReg;
    std::vector<std::vector<Eigen::Index>> soc_entries_; // lower triangle, row-major by (a >= b)
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
};

void HsdeSolver::build_kkt_pattern()
{
    const int dim = n_ + p_ + m_;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(dim + sf_.A.nonZeros() + sf_.G.nonZeros()));
    for (int i = 0; i < n_; ++i)
    {
        trip.emplace_back(i, i, kStaticReg);
    }
    for (int j = 0; j < n_; ++j)
    {
        for (SpMat::InnerIterator it(sf_.A, j); it; ++it)
        {
            trip.emplace_back(n_ + static_cast<int>(it.row()), j, it.value());
        }
        for (SpMat::InnerIterator it(sf_.G, j); it; ++it)
        {
            trip.emplace_back(n_ + p_ + static_cast<int>(it.row()), j, it.value());
        }
    }
    for (int i = 0; i < p_; ++i)
    {
        trip.emplace_back(n_ + i, n_ + i, -kStaticReg);
    }
    const int zbase = n_ + p_;
    for (int i = 0; i < cones_.num_linear; ++i)
    {
        trip.emplace_back(zbase + i, zbase + i, -1.0);
    }
    for (std::size_t k = 0; k < cones_.soc_dims.size(); ++k)
    {
        const int off = zbase + cones_.soc_offsets[k];
        const int d = cones_.soc_dims[k];
        for (int a = 0; a < d; ++a)
        {
            for (int b = 0; b <= a; ++b)
            {
                trip.emplace_back(off + a, off + b, a == b ? -1.0 : 0.0);
            }
        }
    }
    kkt_.resize(dim, dim);
    kkt_.setFromTriplets(trip.begin(), trip.end());
    kkt_.makeCompressed();

    const double* base = kkt_.valuePtr();
    for (int i = 0; i < n_; ++i)
    {
        x_diag_.push_back(&kkt_.coeffRef(i, i) - base);
    }
    for (int i = 0; i < p_; ++i)
    {
        y_diag_.push_back(&kkt_.coeffRef(n_ + i, n_ + i) - base);
    }
    lp_diag_.resize(static_cast<std::size_t>(cones_.num_linear));
    for (int i = 0; i < cones_.num_linear; ++i)
    {
        lp_diag_[i] = &kkt_.coeffRef(zbase + i, zbase + i) - base;
    }
    soc_entries_.resize(cones_.soc_dims.size());
    for (std::size_t k = 0; k < cones_.soc_dims.size(); ++k)
    {
        const int off = zbase + cones_.soc_offsets[k];
        const int d = cones_.soc_dims[k];
        for (int a = 0; a < d; ++a)
        {
            for (int b = 0; b <= a; ++b)
            {
                soc_entries_[k].push_back(&kkt_.coeffRef(off + a, off + b) - base);
            }
        }
    }
    ldlt_.analyzePattern(kkt_);
}

void HsdeSolver::load_scaling_into_kkt(const NtScaling& w)
{
    double* values = kkt_.valuePtr();
    for (int i = 0; i < cones_.num_linear; ++i)
    {
        values[lp_diag_[i]] = -w.lp[i] * w.lp[i] - reg_;
    }
    for (std::size_t k = 0; k < cones_.soc_dims.size(); ++k)
    {
        const Eigen::MatrixXd& w2 = w.soc[k].W2;
        const int d = cones_.soc_dims[k];
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a)
        {
            for (int b = 0; b <= a; ++b)
            {
                values[soc_entries_[k][idx++]] = -w2(a, b) - (a == b ? reg_ : 0.0);
            }
        }
    }
}

void HsdeSolver::set_regularization(double reg)
{
    reg_ = reg;
    double* values = kkt_.valuePtr();
    for (Eigen::Index i : x_diag_)
    {
        values[i] = reg;
    }
    for (Eigen::Index i : y_diag_)
    {
        values[i] = -reg;
    }
}

bool HsdeSolver::factor(const NtScaling& w)
{
    if (reg_ != kStaticReg)
    {
        set_regularization(kStaticReg);
    }
    load_scaling_into_kkt(w);
    ldlt_.factorize(kkt_);
    if (ldlt_.info() == Eigen::Success)
    {
        return true;
    }
    for (double reg : kFallbackReg)
    {
        set_regularization(reg);
        load_scaling_into_kkt(w);
        ldlt_.factorize(kkt_);
        if (ldlt_.info() == Eigen::Success)
        {
            return true;
        }
    }
    return false;
}

void HsdeSolver::solve_kkt(const Vec& rhs, Vec& sol, const NtScaling& w) const
{
    sol = ldlt_.solve(rhs);
    const double tol = 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    const int max_refine = reg_ == kStaticReg ? kMaxRefine : kMaxRefineRegularized;
    for (int it = 0; it < max_refine; ++it)
    {
        const auto x = sol.head(n_);
        const auto y = sol.segment(n_, p_);
        const Vec z = sol.tail(m_);
        Vec residual(rhs.size());
        residual.head(n_) = rhs.head(n_) - sf_.A.transpose() * y - sf_.G.transpose() * z;
        residual.segment(n_, p_) = rhs.segment(n_, p_) - sf_.A * x;
        residual.tail(m_) = rhs.tail(m_) - sf_.G * x + apply_w2(cones_, w, z);
        if (residual.lpNorm<Eigen::Infinity>() <= tol)
        {
            break;
        }
        sol += ldlt_.solve(residual);
    }
}

void HsdeSolver::split(const Vec& sol, Vec& dx, Vec& dy, Vec& dz) const
{
    dx = sol.head(n_);
    dy = sol.segment(n_, p_);
    dz = sol.tail(m_);
}

// Newton steps on the constraints the interior-point solution identifies as
// active: binding linear rows become equalities, second-order blocks with
// both s and z on the boundary become s^T J s = 0. The interior-point answer
// is only accurate to about the square root of the final gap in flat
// directions; a few Newton steps on the smooth active system recover full
// precision. The point is kept only if it is better and still feasible.
bool HsdeSolver::polish(Vec& x, Vec& y, const Vec& s, const Vec& z) const
{
    using Triplet = Eigen::Triplet<double>;
    constexpr double kZeroRatio = 1e-6;
    // Rows without a clear active/inactive separation stay free and are
    // checked afterwards.
    constexpr double kSeparation = 1e3;

    std::vector<int> lin_rows; // rows of G imposed as equalities
    std::vector<int> lin_dual; // index into z for the sign check (-1: none)
    std::vector<int> bnd_blocks;
    std::vector<int> free_blocks;
    std::vector<int> free_lin;
    for (int i = 0; i < cones_.num_linear; ++i)
    {
        if (z[i] > kSeparation * s[i])
        {
            lin_rows.push_back(i);
            lin_dual.push_back(i);
        }
        else
        {
            free_lin.push_back(i);
        }
    }
    for (std::size_t k = 0; k < cones_.soc_dims.size(); ++k)
    {
        const int off = cones_.soc_offsets[k];
        const int d = cones_.soc_dims[k];
        const double s0 = s[off];
        const double z0 = z[off];
        if (z0 < kZeroRatio * s0)
        {
            free_blocks.push_back(static_cast<int>(k));
        }
        else if (s0 < kZeroRatio * z0)
        {
            for (int a = 0; a < d; ++a)
            {
                lin_rows.push_back(off + a);
                lin_dual.push_back(-1);
            }
        }
        else
        {
            bnd_blocks.push_back(static_cast<int>(k));
        }
    }

    const int nl = static_cast<int>(lin_rows.size());
    const int nq = static_cast<int>(bnd_blocks.size());
    const int dim = n_ + p_ + nl + nq;

    // Row-major copy of G for block access.
    const Eigen::SparseMatrix<double, Eigen::RowMajor> g_rows(sf_.G);

    Vec yl(nl);
    for (int i = 0; i < nl; ++i)
    {
        yl[i] = z[lin_rows[static_cast<std::size_t>(i)]];
    }
    Vec eta(nq);
    for (int i = 0; i < nq; ++i)
    {
        const int off = cones_.soc_offsets[static_cast<std::size_t>(bnd_blocks[static_cast<std::size_t>(i)])];
        eta[i] = -z[off] / (2.0 * s[off]);
    }

    auto slack = [&](const Vec& xv) { return Vec(sf_.h - sf_.G * xv); };
    auto kkt_residual = [&](const Vec& xv, const Vec& yv, const Vec& ylv, const Vec& etav, Vec& out) {
        const Vec sv = slack(xv);
        out.resize(dim);
        Vec rx = sf_.c + sf_.A.transpose() * yv;
        for (int i = 0; i < nl; ++i)
        {
            const int row = lin_rows[static_cast<std::size_t>(i)];
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g_rows, row); it; ++it)
            {
                rx[it.col()] += ylv[i] * it.value();
            }
        }
        for (int i = 0; i < nq; ++i)
        {
            const int k = bnd_blocks[static_cast<std::size_t>(i)];
            const int off = cones_.soc_offsets[static_cast<std::size_t>(k)];
            const int d = cones_.soc_dims[static_cast<std::size_t>(k)];
            for (int a = 0; a < d; ++a)
            {
                const double js = a == 0 ? sv[off] : -sv[off + a];
                for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g_rows, off + a); it; ++it)
                {
                    rx[it.col()] += -2.0 * etav[i] * js * it.value();
                }
            }
        }
        out.head(n_) = rx;
        out.segment(n_, p_) = sf_.A * xv - sf_.b;
        for (int i = 0; i < nl; ++i)
        {
            out[n_ + p_ + i] = -sv[lin_rows[static_cast<std::size_t>(i)]];
        }
        for (int i = 0; i < nq; ++i)
        {
            const int k = bnd_blocks[static_cast<std::size_t>(i)];
            const int off = cones_.soc_offsets[static_cast<std::size_t>(k)];
            const int d = cones_.soc_dims[static_cast<std::size_t>(k)];
            out[n_ + p_ + nl + i] = sv[off] * sv[off] - sv.segment(off + 1, d - 1).squaredNorm();
        }
        return sv;
    };

    Vec px = x;
    Vec py = y;
    Vec res;
    kkt_residual(px, py, yl, eta, res);
    const double start_norm = res.lpNorm<Eigen::Infinity>();
    double norm = start_norm;
    bool improved = false;
    Vec bx = px, by = py, byl = yl, beta = eta;

    for (int it = 0; it < 6 && norm > 1e-15; ++it)
    {
        const Vec sv = slack(px);
        std::vector<Triplet> trip;
        trip.reserve(static_cast<std::size_t>(4 * (sf_.A.nonZeros() + sf_.G.nonZeros()) + dim));
        for (int j = 0; j < n_; ++j)
        {
            for (Eigen::SparseMatrix<double>::InnerIterator a(sf_.A, j); a; ++a)
            {
                trip.emplace_back(n_ + static_cast<int>(a.row()), j, a.value());
                trip.emplace_back(j, n_ + static_cast<int>(a.row()), a.value());
            }
        }
        for (int i = 0; i < nl; ++i)
        {
            const int row = lin_rows[static_cast<std::size_t>(i)];
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator g(g_rows, row); g; ++g)
            {
                // d(-s)/dx = G
                trip.emplace_back(n_ + p_ + i, static_cast<int>(g.col()), g.value());
                trip.emplace_back(static_cast<int>(g.col()), n_ + p_ + i, g.value());
            }
        }
        for (int i = 0; i < nq; ++i)
        {
            const int k = bnd_blocks[static_cast<std::size_t>(i)];
            const int off = cones_.soc_offsets[static_cast<std::size_t>(k)];
            const int d = cones_.soc_dims[static_cast<std::size_t>(k)];
            // grad q = -2 G^T J s, Hessian of eta q = 2 eta G^T J G.
            Vec grad = Vec::Zero(n_);
            for (int a = 0; a < d; ++a)
            {
                const double js = a == 0 ? sv[off] : -sv[off + a];
                const double sign = a == 0 ? 1.0 : -1.0;
                for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator g1(g_rows, off + a); g1; ++g1)
                {
                    grad[g1.col()] += -2.0 * js * g1.value();
                    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator g2(g_rows, off + a); g2; ++g2)
                    {
                        trip.emplace_back(static_cast<int>(g1.col()), static_cast<int>(g2.col()),
                                          2.0 * eta[i] * sign * g1.value() * g2.value());
                    }
                }
            }
            for (int j = 0; j < n_; ++j)
            {
                if (grad[j] != 0.0)
                {
                    trip.emplace_back(n_ + p_ + nl + i, j, grad[j]);
                    trip.emplace_back(j, n_ + p_ + nl + i, grad[j]);
                }
            }
        }
        // Tiny regularization keeps flat directions solvable; the Newton
        // residual is measured on the exact system.
        for (int j = 0; j < n_; ++j)
        {
            trip.emplace_back(j, j, 1e-13);
        }
        for (int j = n_; j < dim; ++j)
        {
            trip.emplace_back(j, j, -1e-13);
        }
        Eigen::SparseMatrix<double> jac(dim, dim);
        jac.setFromTriplets(trip.begin(), trip.end());
        jac.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(jac);
        if (lu.info() != Eigen::Success)
        {
            break;
        }
        const Vec step = lu.solve(-res);
        if (lu.info() != Eigen::Success || !step.allFinite())
        {
            break;
        }
        px += step.head(n_);
        py += step.segment(n_, p_);
        yl += step.segment(n_ + p_, nl);
        eta += step.tail(nq);
        kkt_residual(px, py, yl, eta, res);
        const double next = res.lpNorm<Eigen::Infinity>();
        if (!(next < norm))
        {
            break;
        }
        norm = next;
        improved = true;
        bx = px;
        by = py;
        byl = yl;
        beta = eta;
    }
    if (!improved || !(norm < 1e-2 * start_norm || norm < 1e-13))
    {
        return false;
    }

    // Feasibility and dual signs at the polished point.
    const Vec sv = slack(bx);
    const double tol = 1e-9;
    for (int i : free_lin)
    {
        if (sv[i] < -tol * (1.0 + std::abs(sf_.h[i])))
        {
            return false;
        }
    }
    for (int i = 0; i < nl; ++i)
    {
        if (lin_dual[static_cast<std::size_t>(i)] >= 0 && byl[i] < -tol)
        {
            return false;
        }
    }
    for (int k : free_blocks)
    {
        const int off = cones_.soc_offsets[static_cast<std::size_t>(k)];
        const int d = cones_.soc_dims[static_cast<std::size_t>(k)];
        if (sv[off] - sv.segment(off + 1, d - 1).norm() < -tol * (1.0 + sv[off]))
        {
            return false;
        }
    }
    for (int i = 0; i < nq; ++i)
    {
        const int off = cones_.soc_offsets[static_cast<std::size_t>(bnd_blocks[static_cast<std::size_t>(i)])];
        if (!(sv[off] > 0.0) || beta[i] > tol)
        {
            return false;
        }
    }
    x = bx;
    y = by;
    return true;
}

ConicResult HsdeSolver::run()
{
    ConicResult result;
    const int degree = sf_.degree();

    Vec x(n_), y(p_), z(m_), s(m_);
    double tau = 1.0;
    double kappa = 1.0;

    // Initial point from two least-squares style solves with W = I.
    NtScaling w = NtScaling::identity(cones_);
    if (!factor(w))
    {
        result.status = SolveStatus::NumericalFailure;
        result.message = "initial KKT factorization failed";
        return result;
    }
    {
        Vec rhs(n_ + p_ + m_);
        rhs << Vec::Zero(n_), sf_.b, sf_.h;
        Vec sol;
        solve_kkt(rhs, sol, w);
        Vec dy, dz;
        split(sol, x, dy, dz);
        s = bring_to_cone(cones_, -dz);
    }
    {
        Vec rhs(n_ + p_ + m_);
        rhs << -sf_.c, Vec::Zero(p_), Vec::Zero(m_);
        Vec sol;
        solve_kkt(rhs, sol, w);
        Vec dx, dz;
        split(sol, dx, y, dz);
        z = bring_to_cone(cones_, dz);
    }

    // Unscaled norms of the data for the stopping tests.
    const Vec b_u = eq_.eq_row.cwiseInverse().asDiagonal() * sf_.b;
    const Vec h_u = eq_.cone_row.cwiseInverse().asDiagonal() * sf_.h;
    const Vec c_u = eq_.col.cwiseInverse().asDiagonal() * sf_.c;
    const double b_norm = std::max(1.0, b_u.norm());
    const double h_norm = std::max(1.0, h_u.norm());
    const double c_norm = std::max(1.0, c_u.norm());

    Vec rhs(n_ + p_ + m_);
    Vec sol;
    Vec dx, dy, dz, ds;
    Vec x2, y2, z2;
    int stalled_steps = 0;
    struct
    {
        double merit = std::numeric_limits<double>::infinity();
        Vec x, y, s, z;
        double pres = 0.0, dres = 0.0, gap = 0.0;
        bool close = false;
    } best;

    for (int iter = 0; iter <= settings_.max_iters; ++iter)
    {
        result.iterations = iter;
        const Vec rx = sf_.A.transpose() * y + sf_.G.transpose() * z + sf_.c * tau;
        const Vec ry = sf_.A * x - sf_.b * tau;
        const Vec rz = sf_.G * x + s - sf_.h * tau;
        const double cx = sf_.c.dot(x);
        const double by_hz = sf_.b.dot(y) + sf_.h.dot(z);
        const double rtau = kappa + cx + by_hz;
        const double sz = s.dot(z);
        const double mu = (sz + tau * kappa) / (degree + 1);

        const double pres = std::max((eq_.eq_row.cwiseInverse().asDiagonal() * ry).norm() / b_norm,
                                     (eq_.cone_row.cwiseInverse().asDiagonal() * rz).norm() / h_norm) /
                            tau;
        const double dres = (eq_.col.cwiseInverse().asDiagonal() * rx).norm() / c_norm / tau;
        const double pcost = cx / tau;
        const double dcost = -by_hz / tau;
        const double gap = sz / (tau * tau);
        const double relgap = gap / std::max(std::min(std::abs(pcost), std::abs(dcost)), 1e-12);
        result.primal_residual = pres;
        result.dual_residual = dres;
        result.gap = gap;

        if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap))
        {
            if (best.close)
            {
                break;
            }
            result.status = SolveStatus::NumericalFailure;
            result.message = "non-finite iterate";
            return result;
        }
        // Keep the best iterate: near the floor of double precision the
        // residuals can stagnate or blow up once the gap is exhausted.
        const double merit = std::max({pres / settings_.feastol, dres / settings_.feastol,
                                       std::min(gap / settings_.abstol, relgap / settings_.reltol)});
        if (merit < best.merit)
        {
            best.merit = merit;
            best.x = x / tau;
            best.y = y / tau;
            best.s = s / tau;
            best.z = z / tau;
            best.pres = pres;
            best.dres = dres;
            best.gap = gap;
            best.close = pres < 1e-6 && dres < 1e-6 && (gap < 1e-6 || relgap < 1e-6);
        }
        if (pres < settings_.feastol && dres < settings_.feastol &&
            (gap < settings_.abstol || relgap < settings_.reltol))
        {
            result.status = SolveStatus::Optimal;
            result.message.clear();
            best.merit = -1.0;
            best.x = x / tau;
            best.y = y / tau;
            best.s = s / tau;
            best.z = z / tau;
            break;
        }
        if (by_hz < 0.0 && tau < kappa)
        {
            const Vec hres = eq_.col.cwiseInverse().asDiagonal() * (sf_.A.transpose() * y + sf_.G.transpose() * z);
            if (hres.norm() / -by_hz < settings_.feastol)
            {
                result.status = SolveStatus::Infeasible;
                result.message = "primal infeasibility certificate";
                return result;
            }
        }
        if (cx < 0.0 && tau < kappa)
        {
            const Vec ax = eq_.eq_row.cwiseInverse().asDiagonal() * (sf_.A * x);
            const Vec gxs = eq_.cone_row.cwiseInverse().asDiagonal() * (sf_.G * x + s);
            if (std::max(ax.norm(), gxs.norm()) / -cx < settings_.feastol)
            {
                result.status = SolveStatus::Unbounded;
                result.message = "dual infeasibility certificate";
                return result;
            }
        }
        // Accept a reduced-accuracy point rather than discard a usable answer.
        if (iter == settings_.max_iters || stalled_steps >= 3)
        {
            if (best.close)
            {
                break;
            }
            result.status = stalled_steps >= 3 ? SolveStatus::NumericalFailure : SolveStatus::MaxIterations;
            result.message = "no convergence";
            return result;
        }

        w = NtScaling::compute(cones_, s, z);
        const Vec lambda = w.apply(cones_, z);
        if (!factor(w))
        {
            if (best.close)
            {
                break;
            }
            result.status = SolveStatus::NumericalFailure;
            result.message = "KKT factorization failed";
            return result;
        }

        rhs << -sf_.c, sf_.b, sf_.h;
        solve_kkt(rhs, sol, w);
        split(sol, x2, y2, z2);
        const double denom_base = sf_.c.dot(x2) + sf_.b.dot(y2) + sf_.h.dot(z2);

        // One Newton direction for a given complementarity target ds, dkappa and
        // residual reduction factor.
        auto direction = [&](const Vec& ds_target, double dkappa, double reduce, double& dtau, double& dkap) {
            const Vec lds = inverse_product(cones_, lambda, ds_target);
            rhs << -reduce * rx, -reduce * ry, -reduce * rz - w.apply(cones_, lds);
            solve_kkt(rhs, sol, w);
            split(sol, dx, dy, dz);
            const double num = -reduce * rtau - dkappa / tau - (sf_.c.dot(dx) + sf_.b.dot(dy) + sf_.h.dot(dz));
            dtau = num / (denom_base - kappa / tau);
            dx += dtau * x2;
            dy += dtau * y2;
            dz += dtau * z2;
            dkap = (dkappa - kappa * dtau) / tau;
            // W^{-1} ds = lambda \ ds_target - W dz
            const Vec scaled_ds = lds - w.apply(cones_, dz);
            ds = w.apply(cones_, scaled_ds);
            return scaled_ds;
        };

        auto max_step = [&](double dtau, double dkap) {
            double step = std::min(max_cone_step(cones_, s, ds), max_cone_step(cones_, z, dz));
            if (dtau < 0.0)
            {
                step = std::min(step, -tau / dtau);
            }
            if (dkap < 0.0)
            {
                step = std::min(step, -kappa / dkap);
            }
            return step;
        };

        // Predictor.
        const Vec lambda_sq = jordan_product(cones_, lambda, lambda);
        double dtau_aff = 0.0;
        double dkap_aff = 0.0;
        const Vec ds_aff_scaled = direction(-lambda_sq, -tau * kappa, 1.0, dtau_aff, dkap_aff);
        const Vec dz_aff_scaled = w.apply(cones_, dz);
        const double step_aff = std::min(1.0, max_step(dtau_aff, dkap_aff));
        const double sigma = std::clamp(std::pow(1.0 - step_aff, 3), kSigmaMin, 1.0);

        // Corrector.
        Vec ds_target = -lambda_sq - jordan_product(cones_, ds_aff_scaled, dz_aff_scaled);
        add_identity(cones_, ds_target, sigma * mu);
        const double dkappa_target = -tau * kappa + sigma * mu - dtau_aff * dkap_aff;
        double dtau = 0.0;
        double dkap = 0.0;
        direction(ds_target, dkappa_target, 1.0 - sigma, dtau, dkap);
        const double step = std::min(1.0, kStepFactor * max_step(dtau, dkap));
        stalled_steps = step < 1e-10 ? stalled_steps + 1 : 0;

        x += step * dx;
        y += step * dy;
        z += step * dz;
        s += step * ds;
        tau += step * dtau;
        kappa += step * dkap;
    }

    if (best.merit >= 0.0)
    {
        // Left the loop early on the best iterate seen.
        result.status = SolveStatus::Optimal;
        result.message = "reduced accuracy";
        result.primal_residual = best.pres;
        result.dual_residual = best.dres;
        result.gap = best.gap;
    }
    if (settings_.polish)
    {
        result.polished = polish(best.x, best.y, best.s, best.z);
    }
    // Undo the equilibration.
    const Vec xu = eq_.col.asDiagonal() * best.x;
    const Vec yu = eq_.eq_row.asDiagonal() * best.y;
    result.x.assign(xu.data(), xu.data() + xu.size());
    result.eq_duals.assign(yu.data(), yu.data() + yu.size());
    return result;
}

} // namespace

ConicResult InteriorPointSolver::solve(const ConicProblem& problem) const
{
    StandardForm sf = lower_to_standard_form(problem);
    const Equilibration eq = equilibrate(sf);
    HsdeSolver solver(sf, eq, settings_);
    ConicResult result = solver.run();
    if (result.status == SolveStatus::Optimal)
    {
        result.objective = problem.objective(result.x);
    }
    return result;
}

} // namespace swapgrid::conic
