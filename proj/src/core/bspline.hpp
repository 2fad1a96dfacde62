#pragma once

#include <Eigen/Dense>

#include <memory>

namespace funcscan {

/// Clamped B-spline basis on [lo, hi] with equally spaced interior knots.
class BSplineBasis {
public:
    /// `order` is degree + 1 (4 = cubic), between 2 and 6.
    BSplineBasis(int order, int interior_knots, double lo, double hi);

    int order() const { return order_; }
    Eigen::Index dimension() const { return static_cast<Eigen::Index>(knots_.size()) - order_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const Eigen::VectorXd& knots() const { return knots_; }

    /// Values (or `deriv`-th derivatives) of every basis function at t.
    /// t is clamped into [lo, hi].
    Eigen::VectorXd evaluate(double t, int deriv = 0) const;

    /// Collocation matrix: one row per time point.
    Eigen::MatrixXd design(const Eigen::VectorXd& times, int deriv = 0) const;

    /// Gram matrix of the `deriv`-th derivatives, int B^(d)_a B^(d)_b dt, by
    /// Gauss-Legendre quadrature exact for the piecewise polynomials involved.
    Eigen::MatrixXd penalty(int deriv) const;

private:
    Eigen::VectorXd values(double t, int order, int deriv) const;

    int order_;
    double lo_;
    double hi_;
    Eigen::VectorXd knots_;
};

/// A fitted spline: coefficients over a shared basis.
class SplineFit {
public:
    SplineFit(std::shared_ptr<const BSplineBasis> basis, Eigen::VectorXd coefficients);

    double operator()(double t) const;
    const BSplineBasis& basis() const { return *basis_; }
    const std::shared_ptr<const BSplineBasis>& basis_ptr() const { return basis_; }
    const Eigen::VectorXd& coefficients() const { return coef_; }

private:
    std::shared_ptr<const BSplineBasis> basis_;
    Eigen::VectorXd coef_;
};

/// Penalised least squares: minimises sum (y - f(t))^2 + lambda * int (f^(q))^2.
/// Throws IllConditionedBasis when the normal equations are singular.
SplineFit fit_penalized_spline(std::shared_ptr<const BSplineBasis> basis, const Eigen::VectorXd& times,
                               const Eigen::VectorXd& values, double lambda, int penalty_order = 2);

}  // namespace funcscan
