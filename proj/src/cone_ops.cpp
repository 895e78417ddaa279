#include "swapgrid/cone_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swapgrid::conic
{

namespace
{
constexpr double kNoLimit = std::numeric_limits<double>::infinity();
}

ConeLayout::ConeLayout(int l, std::vector<int> dims) : num_linear(l), soc_dims(std::move(dims))
{
    int offset = num_linear;
    for (int d : soc_dims)
    {
        soc_offsets.push_back(offset);
        offset += d;
    }
    total = offset;
}

NtScaling NtScaling::identity(const ConeLayout& layout)
{
    NtScaling w;
    w.lp = Eigen::VectorXd::Ones(layout.num_linear);
    for (int d : layout.soc_dims)
    {
        w.soc.push_back({Eigen::MatrixXd::Identity(d, d), Eigen::MatrixXd::Identity(d, d)});
    }
    return w;
}

NtScaling NtScaling::compute(const ConeLayout& layout, const Eigen::VectorXd& s, const Eigen::VectorXd& z)
{
    NtScaling w;
    w.lp = (s.head(layout.num_linear).array() / z.head(layout.num_linear).array()).sqrt();
    for (std::size_t k = 0; k < layout.soc_dims.size(); ++k)
    {
        const int d = layout.soc_dims[k];
        const auto sk = s.segment(layout.soc_offsets[k], d);
        const auto zk = z.segment(layout.soc_offsets[k], d);
        const double s_norm = sk.tail(d - 1).norm();
        const double z_norm = zk.tail(d - 1).norm();
        const double s_det = std::max((sk[0] - s_norm) * (sk[0] + s_norm), 1e-300);
        const double z_det = std::max((zk[0] - z_norm) * (zk[0] + z_norm), 1e-300);
        const Eigen::VectorXd sbar = sk / std::sqrt(s_det);
        const Eigen::VectorXd zbar = zk / std::sqrt(z_det);
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
        Eigen::VectorXd wbar(d);
        wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
        wbar.tail(d - 1) = (sbar.tail(d - 1) - zbar.tail(d - 1)) / (2.0 * gamma);
        const double eta = std::pow(s_det / z_det, 0.25);

        Eigen::MatrixXd W(d, d);
        W(0, 0) = wbar[0];
        W.block(0, 1, 1, d - 1) = wbar.tail(d - 1).transpose();
        W.block(1, 0, d - 1, 1) = wbar.tail(d - 1);
        W.block(1, 1, d - 1, d - 1) = Eigen::MatrixXd::Identity(d - 1, d - 1) +
                                      wbar.tail(d - 1) * wbar.tail(d - 1).transpose() / (1.0 + wbar[0]);
        W *= eta;
        w.soc.push_back({W, W * W});
    }
    return w;
}

Eigen::VectorXd NtScaling::apply(const ConeLayout& layout, const Eigen::VectorXd& v) const
{
    Eigen::VectorXd out(v.size());
    out.head(layout.num_linear) = lp.array() * v.head(layout.num_linear).array();
    for (std::size_t k = 0; k < layout.soc_dims.size(); ++k)
    {
        const int off = layout.soc_offsets[k];
        const int d = layout.soc_dims[k];
        out.segment(off, d).noalias() = soc[k].W * v.segment(off, d);
    }
    return out;
}

Eigen::VectorXd apply_w2(const ConeLayout& layout, const NtScaling& w, const Eigen::VectorXd& v)
{
    Eigen::VectorXd out(v.size());
    out.head(layout.num_linear) = w.lp.array().square() * v.head(layout.num_linear).array();
    for (std::size_t k = 0; k < layout.soc_dims.size(); ++k)
    {
        const int off = layout.soc_offsets[k];
        const int d = layout.soc_dims[k];
        out.segment(off, d).noalias() = w.soc[k].W2 * v.segment(off, d);
    }
    return out;
}

Eigen::VectorXd jordan_product(const ConeLayout& layout, const Eigen::VectorXd& u, const Eigen::VectorXd& v)
{
    Eigen::VectorXd out(u.size());
    out.head(layout.num_linear) = u.head(layout.num_linear).array() * v.head(layout.num_linear).array();
    for (std::size_t k = 0; k < layout.soc_dims.size(); ++k)
    {
        const int off = layout.soc_offsets[k];
        const int d = layout.soc_dims[k];
        const auto uk = u.segment(off, d);
        const auto vk = v.segment(off, d);
        out[off] = uk.dot(vk);
        out.segment(off + 1, d - 1) = uk[0] * vk.tail(d - 1) + vk[0] * uk.tail(d - 1);
    }
    return out;
}

Eigen::VectorXd inverse_product(const ConeLayout& layout, const Eigen::VectorXd& lambda, const Eigen::VectorXd& d)
{
    Eigen::VectorXd out(d.size());
    out.head(layout.num_linear) = d.head(layout.num_linear).array() / lambda.head(layout.num_linear).array();
    for (std::size_t k = 0; k < layout.soc_dims.size(); ++k)
    {
        const int off = layout.soc_offsets[k];
        const int q = layout.soc_dims[k];
        const auto l = lambda.segment(off, q);
        const auto dk = d.segment(off, q);
        const double l_norm = l.tail(q - 1).norm();
        const double det = (l[0] - l_norm) * (l[0] + l_norm);
        const double u0 = (l[0] * dk[0] - l.tail(q - 1).dot(dk.tail(q - 1))) / det;
        out[off] = u0;
        out.segment(off + 1, q - 1) = (dk.tail(q - 1) - u0 * l.tail(q - 1)) / l[0];
    }
    return out;
}

void add_identity(const ConeLayout& layout, Eigen::VectorXd& v, double alpha)
{
    v.head(layout.num_linear).array() += alpha;
    for (int off : layout.soc_offsets)
    {
        v[off] += alpha;
    }
}

Eigen::VectorXd bring_to_cone(const ConeLayout& layout, const Eigen::VectorXd& r)
{
    double shift = -kNoLimit;
    for (int i = 0; i < layout.num_linear; ++i)
    {
        shift = std::max(shift, -r[i]);
    }
    for (std::size_t k = 0; k < layout.soc_dims.size(); ++k)
    {
        const int off = layout.soc_offsets[k];
        const int d = layout.soc_dims[k];
        shift = std::max(shift, r.segment(off + 1, d - 1).norm() - r[off]);
    }
    Eigen::VectorXd out = r;
    if (shift >= 0.0)
    {
        add_identity(layout, out, 1.0 + shift);
    }
    return out;
}

double soc_max_step(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& dx)
{
    const auto n = x.size();
    // q(t) = a t^2 + 2 b t + c with c > 0 at an interior point.
    const double a = dx[0] * dx[0] - dx.tail(n - 1).squaredNorm();
    const double b = x[0] * dx[0] - x.tail(n - 1).dot(dx.tail(n - 1));
    const double c = std::max(x[0] * x[0] - x.tail(n - 1).squaredNorm(), 0.0);

    double step = kNoLimit;
    if (dx[0] < 0.0)
    {
        step = -x[0] / dx[0];
    }
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    if (std::abs(a) <= 1e-15 * scale)
    {
        if (b < 0.0)
        {
            step = std::min(step, -c / (2.0 * b));
        }
        return step;
    }
    const double disc = b * b - a * c;
    if (disc < 0.0)
    {
        return step;
    }
    const double root = std::sqrt(disc);
    const double t = -(b + std::copysign(root, b));
    double best = kNoLimit;
    for (double r : {t / a, t != 0.0 ? c / t : kNoLimit})
    {
        if (r > 0.0)
        {
            best = std::min(best, r);
        }
    }
    return std::min(step, best);
}

double max_cone_step(const ConeLayout& layout, const Eigen::VectorXd& x, const Eigen::VectorXd& dx)
{
    double step = kNoLimit;
    for (int i = 0; i < layout.num_linear; ++i)
    {
        if (dx[i] < 0.0)
        {
            step = std::min(step, -x[i] / dx[i]);
        }
    }
    for (std::size_t k = 0; k < layout.soc_dims.size(); ++k)
    {
        const int off = layout.soc_offsets[k];
        const int d = layout.soc_dims[k];
        step = std::min(step, soc_max_step(x.segment(off, d), dx.segment(off, d)));
    }
    return step;
}

} // namespace swapgrid::conic
