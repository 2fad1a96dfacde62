#include "fnspace.hpp"

#include "errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace funcscan {

TimeGrid::TimeGrid(std::vector<double> points) {
    if (points.size() < 2)
        fail(ErrorKind::InvalidArgument, "time grid needs at least two points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double t = points[i];
        if (!std::isfinite(t) || t < 0.0 || t > 1.0)
            fail(ErrorKind::InvalidArgument, "time grid point outside [0,1]: " + std::to_string(t));
        if (i > 0 && !(t > points[i - 1]))
            fail(ErrorKind::InvalidArgument, "time grid points must be strictly increasing");
    }
    auto data = std::make_shared<Data>();
    const auto n = static_cast<Eigen::Index>(points.size());
    data->points = Eigen::Map<const Eigen::VectorXd>(points.data(), n);
    data->weights = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double h = data->points[i + 1] - data->points[i];
        data->weights[i] += 0.5 * h;
        data->weights[i + 1] += 0.5 * h;
    }
    data_ = std::move(data);
}

TimeGrid TimeGrid::uniform(std::size_t count, double lo, double hi) {
    if (count < 2 || !(hi > lo))
        fail(ErrorKind::InvalidArgument, "uniform grid needs count >= 2 and hi > lo");
    std::vector<double> pts(count);
    const double h = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i)
        pts[i] = lo + h * static_cast<double>(i);
    pts.back() = hi;
    return TimeGrid(std::move(pts));
}

bool TimeGrid::operator==(const TimeGrid& other) const {
    if (data_ == other.data_)
        return true;
    return data_->points.size() == other.data_->points.size() && data_->points == other.data_->points;
}

void require_same_grid(const TimeGrid& a, const TimeGrid& b) {
    if (a != b)
        fail(ErrorKind::GridMismatch, "curves are defined on different time grids");
}

Curve::Curve(TimeGrid grid, Eigen::VectorXd values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != grid_.size())
        fail(ErrorKind::InvalidArgument, "curve length does not match its grid");
    if (!values_.allFinite())
        fail(ErrorKind::InvalidArgument, "curve contains non-finite values");
}

Curve Curve::constant(const TimeGrid& grid, double value) {
    return Curve(grid, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()), value));
}

CurveSet::CurveSet(TimeGrid grid, Eigen::MatrixXd values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.cols()) != grid_.size())
        fail(ErrorKind::InvalidArgument, "curve set width does not match its grid");
    if (!values_.allFinite())
        fail(ErrorKind::InvalidArgument, "curve set contains non-finite values");
}

Kernel::Kernel(TimeGrid grid, Eigen::MatrixXd values) : grid_(std::move(grid)), values_(std::move(values)) {
    const auto n = static_cast<Eigen::Index>(grid_.size());
    if (values_.rows() != n || values_.cols() != n)
        fail(ErrorKind::InvalidKernel, "kernel matrix does not match its grid");
    if (!values_.allFinite())
        fail(ErrorKind::InvalidKernel, "kernel contains non-finite values");
    const double scale = values_.cwiseAbs().maxCoeff();
    const double asym = (values_ - values_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
        fail(ErrorKind::InvalidKernel, "kernel is not symmetric");
    // Symmetric to tolerance; store the exact symmetric part.
    values_ = 0.5 * (values_ + values_.transpose()).eval();
    if ((values_.diagonal().array() < -1e-12 * scale).any())
        fail(ErrorKind::InvalidKernel, "kernel has a negative diagonal entry");
}

Eigen::Index EigenSpectrum::positive_count() const {
    if (eigenvalues.size() == 0 || eigenvalues[0] <= 0.0)
        return 0;
    const double floor = 1e-10 * eigenvalues[0];
    Eigen::Index n = 0;
    while (n < eigenvalues.size() && eigenvalues[n] > floor)
        ++n;
    return n;
}

double inner_product(const Curve& f, const Curve& g) {
    require_same_grid(f.grid(), g.grid());
    return (f.grid().weights().array() * f.values().array() * g.values().array()).sum();
}

double l2_norm(const Curve& f) {
    return std::sqrt(inner_product(f, f));
}

Eigen::MatrixXd project(const TimeGrid& grid, const Eigen::MatrixXd& curves, const Eigen::MatrixXd& basis) {
    return curves * grid.weights().asDiagonal() * basis;
}

EigenSpectrum eigendecompose(const Kernel& k, std::size_t max_components) {
    const TimeGrid& grid = k.grid();
    const auto n = static_cast<Eigen::Index>(grid.size());
    const Eigen::VectorXd sqrt_w = grid.weights().array().sqrt();
    const Eigen::MatrixXd weighted = sqrt_w.asDiagonal() * k.values() * sqrt_w.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weighted);
    if (solver.info() != Eigen::Success)
        fail(ErrorKind::InvalidKernel, "symmetric eigensolver did not converge");

    // Eigen returns ascending order.
    Eigen::Index keep = n;
    if (max_components > 0 && static_cast<Eigen::Index>(max_components) < n)
        keep = static_cast<Eigen::Index>(max_components);

    EigenSpectrum out{grid, Eigen::VectorXd(keep), Eigen::MatrixXd(n, keep)};
    for (Eigen::Index i = 0; i < keep; ++i) {
        const Eigen::Index src = n - 1 - i;
        out.eigenvalues[i] = std::max(solver.eigenvalues()[src], 0.0);
        Eigen::VectorXd v = solver.eigenvectors().col(src).cwiseQuotient(sqrt_w);
        // Fix the sign so the largest-magnitude entry is positive.
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0)
            v = -v;
        out.eigenfunctions.col(i) = v;
    }
    return out;
}

double hs_norm(const Kernel& k) {
    const Eigen::VectorXd& w = k.grid().weights();
    return std::sqrt((w.asDiagonal() * k.values().cwiseAbs2() * w.asDiagonal()).sum());
}

double hs_distance(const Kernel& a, const Kernel& b) {
    require_same_grid(a.grid(), b.grid());
    const Eigen::VectorXd& w = a.grid().weights();
    const Eigen::MatrixXd d = a.values() - b.values();
    return std::sqrt((w.asDiagonal() * d.cwiseAbs2() * w.asDiagonal()).sum());
}

double trace(const Kernel& k) {
    return k.grid().weights().dot(k.values().diagonal());
}

}  // namespace funcscan
