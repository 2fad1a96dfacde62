#include "bspline.hpp"

#include "errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace funcscan {

BSplineBasis::BSplineBasis(int order, int interior_knots, double lo, double hi)
    : order_(order), lo_(lo), hi_(hi) {
    if (order < 2 || order > 6)
        fail(ErrorKind::InvalidArgument, "spline order must be between 2 and 6");
    if (interior_knots < 0)
        fail(ErrorKind::InvalidArgument, "interior knot count must be nonnegative");
    if (!(hi > lo))
        fail(ErrorKind::InvalidArgument, "spline domain must have positive length");
    knots_.resize(2 * order + interior_knots);
    for (int i = 0; i < order; ++i) {
        knots_[i] = lo;
        knots_[knots_.size() - 1 - i] = hi;
    }
    for (int i = 1; i <= interior_knots; ++i)
        knots_[order - 1 + i] = lo + (hi - lo) * i / (interior_knots + 1);
}

// Cox-de Boor recursion for order `order` on the full knot vector, with the
// derivative recursion applied `deriv` times.
Eigen::VectorXd BSplineBasis::values(double t, int order, int deriv) const {
    const Eigen::Index len = knots_.size();
    const Eigen::Index count = len - order;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(count);
    if (order == 1) {
        if (deriv > 0)
            return out;
        // Last nonempty span is closed on the right.
        Eigen::Index span = -1;
        for (Eigen::Index i = 0; i < len - 1; ++i) {
            if (knots_[i] < knots_[i + 1] && t >= knots_[i] && (t < knots_[i + 1] || (t == hi_ && knots_[i + 1] == hi_)))
                span = i;
        }
        if (span >= 0)
            out[span] = 1.0;
        return out;
    }
    if (deriv > 0) {
        const Eigen::VectorXd lower = values(t, order - 1, deriv - 1);
        for (Eigen::Index i = 0; i < count; ++i) {
            double v = 0.0;
            const double d1 = knots_[i + order - 1] - knots_[i];
            const double d2 = knots_[i + order] - knots_[i + 1];
            if (d1 > 0.0)
                v += lower[i] / d1;
            if (d2 > 0.0)
                v -= lower[i + 1] / d2;
            out[i] = (order - 1) * v;
        }
        return out;
    }
    const Eigen::VectorXd lower = values(t, order - 1, 0);
    for (Eigen::Index i = 0; i < count; ++i) {
        double v = 0.0;
        const double d1 = knots_[i + order - 1] - knots_[i];
        const double d2 = knots_[i + order] - knots_[i + 1];
        if (d1 > 0.0)
            v += (t - knots_[i]) / d1 * lower[i];
        if (d2 > 0.0)
            v += (knots_[i + order] - t) / d2 * lower[i + 1];
        out[i] = v;
    }
    return out;
}

Eigen::VectorXd BSplineBasis::evaluate(double t, int deriv) const {
    return values(std::clamp(t, lo_, hi_), order_, deriv);
}

Eigen::MatrixXd BSplineBasis::design(const Eigen::VectorXd& times, int deriv) const {
    Eigen::MatrixXd b(times.size(), dimension());
    for (Eigen::Index r = 0; r < times.size(); ++r)
        b.row(r) = evaluate(times[r], deriv).transpose();
    return b;
}

Eigen::MatrixXd BSplineBasis::penalty(int deriv) const {
    // 5-point Gauss-Legendre: exact through degree 9.
    static constexpr std::array<double, 5> nodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                    0.5384693101056831, 0.9061798459386640};
    static constexpr std::array<double, 5> weights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                      0.4786286704993665, 0.2369268850561891};
    const Eigen::Index dim = dimension();
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(dim, dim);
    if (deriv >= order_)
        return omega;
    for (Eigen::Index s = 0; s + 1 < knots_.size(); ++s) {
        const double a = knots_[s];
        const double b = knots_[s + 1];
        if (!(b > a))
            continue;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            // Evaluate strictly inside the span so the right-closed convention never bites.
            const Eigen::VectorXd d = values(mid + half * nodes[q], order_, deriv);
            omega.noalias() += weights[q] * half * d * d.transpose();
        }
    }
    return 0.5 * (omega + omega.transpose());
}

SplineFit::SplineFit(std::shared_ptr<const BSplineBasis> basis, Eigen::VectorXd coefficients)
    : basis_(std::move(basis)), coef_(std::move(coefficients)) {
    if (coef_.size() != basis_->dimension())
        fail(ErrorKind::InvalidArgument, "spline coefficient count does not match the basis");
}

double SplineFit::operator()(double t) const {
    return basis_->evaluate(t).dot(coef_);
}

SplineFit fit_penalized_spline(std::shared_ptr<const BSplineBasis> basis, const Eigen::VectorXd& times,
                               const Eigen::VectorXd& values, double lambda, int penalty_order) {
    if (times.size() != values.size())
        fail(ErrorKind::InvalidArgument, "times and values differ in length");
    if (!(lambda >= 0.0))
        fail(ErrorKind::InvalidArgument, "smoothing parameter must be nonnegative");
    const Eigen::MatrixXd b = basis->design(times);
    Eigen::MatrixXd normal = b.transpose() * b + lambda * basis->penalty(penalty_order);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-13 * d.maxCoeff())
        fail(ErrorKind::IllConditionedBasis, "penalised spline normal equations are singular");
    return SplineFit(std::move(basis), ldlt.solve(b.transpose() * values));
}

}  // namespace funcscan
