#pragma once

// Grid-valued functions on [0,1]: quadrature, inner products and covariance kernels.

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace funcscan {

/// Ordered evaluation points in [0,1] with trapezoidal quadrature weights.
///
/// Copies share the underlying storage, so passing grids around is cheap and
/// two copies of the same grid compare equal without touching the points.
class TimeGrid {
public:
    /// Throws InvalidArgument unless `points` has at least two strictly
    /// increasing entries inside [0,1].
    explicit TimeGrid(std::vector<double> points);

    /// `count` equally spaced points from `lo` to `hi` inclusive.
    static TimeGrid uniform(std::size_t count, double lo = 0.0, double hi = 1.0);

    std::size_t size() const { return data_->points.size(); }
    const Eigen::VectorXd& points() const { return data_->points; }
    const Eigen::VectorXd& weights() const { return data_->weights; }
    double front() const { return data_->points[0]; }
    double back() const { return data_->points[data_->points.size() - 1]; }

    bool operator==(const TimeGrid& other) const;
    bool operator!=(const TimeGrid& other) const { return !(*this == other); }

private:
    struct Data {
        Eigen::VectorXd points;
        Eigen::VectorXd weights;
    };
    std::shared_ptr<const Data> data_;
};

class Curve {
public:
    Curve(TimeGrid grid, Eigen::VectorXd values);

    static Curve constant(const TimeGrid& grid, double value);

    template <typename F>
    static Curve from_function(const TimeGrid& grid, F&& f) {
        Eigen::VectorXd v(grid.size());
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v[i] = f(grid.points()[i]);
        return Curve(grid, std::move(v));
    }

    const TimeGrid& grid() const { return grid_; }
    const Eigen::VectorXd& values() const { return values_; }
    std::size_t size() const { return grid_.size(); }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

private:
    TimeGrid grid_;
    Eigen::VectorXd values_;
};

/// N curves on one grid, stored row-wise (rows = subjects, columns = grid points).
class CurveSet {
public:
    CurveSet(TimeGrid grid, Eigen::MatrixXd values);

    const TimeGrid& grid() const { return grid_; }
    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::Index count() const { return values_.rows(); }
    Curve curve(Eigen::Index n) const { return Curve(grid_, values_.row(n).transpose()); }

private:
    TimeGrid grid_;
    Eigen::MatrixXd values_;
};

/// Symmetric kernel K(t,s) sampled on grid x grid.
class Kernel {
public:
    /// Throws InvalidKernel when the matrix is asymmetric beyond 1e-12 relative
    /// or has a negative diagonal.
    Kernel(TimeGrid grid, Eigen::MatrixXd values);

    template <typename F>
    static Kernel from_function(const TimeGrid& grid, F&& k) {
        const auto n = static_cast<Eigen::Index>(grid.size());
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                m(i, j) = k(grid.points()[i], grid.points()[j]);
        return Kernel(grid, std::move(m));
    }

    const TimeGrid& grid() const { return grid_; }
    const Eigen::MatrixXd& values() const { return values_; }

private:
    TimeGrid grid_;
    Eigen::MatrixXd values_;
};

/// Eigenvalues in descending order; column i of `eigenfunctions` is the
/// L2-normalised eigenfunction for eigenvalues[i].
struct EigenSpectrum {
    TimeGrid grid;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenfunctions;

    Eigen::Index count() const { return eigenvalues.size(); }
    Curve eigenfunction(Eigen::Index i) const { return Curve(grid, eigenfunctions.col(i)); }
    Eigen::Index positive_count() const;
};

double inner_product(const Curve& f, const Curve& g);
double l2_norm(const Curve& f);

/// Quadrature inner products of every row of `curves` with every column of `basis`.
Eigen::MatrixXd project(const TimeGrid& grid, const Eigen::MatrixXd& curves, const Eigen::MatrixXd& basis);

/// Solves the weighted problem W^{1/2} K W^{1/2} u = lambda u and maps u back
/// to L2-orthonormal eigenfunctions. Eigenvalues below 1e-10 * lambda_1 are
/// clamped to zero. `max_components == 0` keeps all of them.
EigenSpectrum eigendecompose(const Kernel& k, std::size_t max_components = 0);

/// Hilbert-Schmidt norm of the integral operator with kernel `k`.
double hs_norm(const Kernel& k);
double hs_distance(const Kernel& a, const Kernel& b);

/// Quadrature integral of the kernel diagonal, i.e. the operator trace.
double trace(const Kernel& k);

void require_same_grid(const TimeGrid& a, const TimeGrid& b);

}  // namespace funcscan
