#pragma once

// Product-cone algebra for R+^l x Q^{q_1} x ... used by the interior-point
// solver: Jordan products, Nesterov-Todd scalings, step lengths.

#include <Eigen/Dense>

#include <vector>

namespace swapgrid::conic
{

struct ConeLayout
{
    int num_linear = 0;
    std::vector<int> soc_dims;
    std::vector<int> soc_offsets;
    int total = 0;

    ConeLayout(int l, std::vector<int> dims);
};

struct SocScaling
{
    Eigen::MatrixXd W;
    Eigen::MatrixXd W2;
};

/// Symmetric NT scaling W with W z = W^{-1} s.
struct NtScaling
{
    Eigen::VectorXd lp;
    std::vector<SocScaling> soc;

    static NtScaling identity(const ConeLayout& layout);
    static NtScaling compute(const ConeLayout& layout, const Eigen::VectorXd& s, const Eigen::VectorXd& z);

    Eigen::VectorXd apply(const ConeLayout& layout, const Eigen::VectorXd& v) const;
};

Eigen::VectorXd apply_w2(const ConeLayout& layout, const NtScaling& w, const Eigen::VectorXd& v);

/// u o v
Eigen::VectorXd jordan_product(const ConeLayout& layout, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Solves lambda o x = d for x (lambda in the cone interior).
Eigen::VectorXd inverse_product(const ConeLayout& layout, const Eigen::VectorXd& lambda,
                                const Eigen::VectorXd& d);

/// v += alpha * e, e the cone identity.
void add_identity(const ConeLayout& layout, Eigen::VectorXd& v, double alpha);

/// r if r is interior, else r + (1 + shift) e with the smallest shift that
/// reaches the boundary.
Eigen::VectorXd bring_to_cone(const ConeLayout& layout, const Eigen::VectorXd& r);

/// Largest t with x + t dx in the cone (infinity if unbounded).
double max_cone_step(const ConeLayout& layout, const Eigen::VectorXd& x, const Eigen::VectorXd& dx);

/// Largest t with x + t dx in a single second-order cone.
double soc_max_step(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& dx);

} // namespace swapgrid::conic
