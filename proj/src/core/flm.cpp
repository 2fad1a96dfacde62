#include "flm.hpp"

#include "errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>

namespace funcscan {

DesignMatrix::DesignMatrix(Eigen::Index rows) : x_(Eigen::MatrixXd::Ones(rows, 1)) {
    roles_.push_back(ColumnRole::Intercept);
    names_.emplace_back("intercept");
}

DesignMatrix& DesignMatrix::add(std::string name, const Eigen::VectorXd& column, ColumnRole role) {
    if (role == ColumnRole::Intercept)
        fail(ErrorKind::InvalidArgument, "design already has its intercept column");
    if (column.size() != x_.rows())
        fail(ErrorKind::InvalidArgument, "column " + name + " has the wrong number of rows");
    if (!column.allFinite())
        fail(ErrorKind::InvalidArgument, "column " + name + " has non-finite entries");
    x_.conservativeResize(Eigen::NoChange, x_.cols() + 1);
    x_.col(x_.cols() - 1) = column;
    roles_.push_back(role);
    names_.push_back(std::move(name));
    return *this;
}

Eigen::Index DesignMatrix::count(ColumnRole role) const {
    return static_cast<Eigen::Index>(std::count(roles_.begin(), roles_.end(), role));
}

std::vector<Eigen::Index> DesignMatrix::indices(ColumnRole role) const {
    std::vector<Eigen::Index> out;
    for (std::size_t j = 0; j < roles_.size(); ++j)
        if (roles_[j] == role)
            out.push_back(static_cast<Eigen::Index>(j));
    return out;
}

DesignMatrix DesignMatrix::select(const std::vector<Eigen::Index>& columns) const {
    DesignMatrix out;
    out.x_.resize(x_.rows(), static_cast<Eigen::Index>(columns.size()));
    bool has_intercept = false;
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const Eigen::Index j = columns[k];
        out.x_.col(static_cast<Eigen::Index>(k)) = x_.col(j);
        out.roles_.push_back(roles_[static_cast<std::size_t>(j)]);
        out.names_.push_back(names_[static_cast<std::size_t>(j)]);
        has_intercept = has_intercept || roles_[static_cast<std::size_t>(j)] == ColumnRole::Intercept;
    }
    if (!has_intercept)
        fail(ErrorKind::InvalidArgument, "selected design must keep the intercept");
    return out;
}

DesignMatrix DesignMatrix::null_model() const {
    std::vector<Eigen::Index> keep;
    for (std::size_t j = 0; j < roles_.size(); ++j)
        if (roles_[j] != ColumnRole::Test)
            keep.push_back(static_cast<Eigen::Index>(j));
    return select(keep);
}

double FunctionalFit::residual_sum_of_squared_norms() const {
    return (residuals.cwiseAbs2() * grid.weights()).sum();
}

namespace {

std::string dependent_columns(const DesignMatrix& x) {
    // Scale columns so the pivoted QR ranks them on shape, not magnitude.
    Eigen::MatrixXd scaled = x.matrix();
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        const double n = scaled.col(j).norm();
        if (n > 0.0)
            scaled.col(j) /= n;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(1e-6);
    const Eigen::Index rank = qr.rank();
    std::string names;
    for (Eigen::Index k = rank; k < scaled.cols(); ++k) {
        const Eigen::Index j = qr.colsPermutation().indices()[k];
        if (!names.empty())
            names += ", ";
        names += x.names()[static_cast<std::size_t>(j)];
    }
    return names.empty() ? std::string("(undetermined)") : names;
}

}  // namespace

Eigen::LLT<Eigen::MatrixXd> factor_design(const DesignMatrix& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (n <= p)
        fail(ErrorKind::InsufficientSamples,
             "need more subjects (" + std::to_string(n) + ") than design columns (" + std::to_string(p) + ")");
    const Eigen::MatrixXd xtx = x.matrix().transpose() * x.matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xtx, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().maxCoeff();
    const double bottom = es.eigenvalues().minCoeff();
    if (!(top > 0.0) || bottom <= 1e-12 * top)
        fail(ErrorKind::RankDeficient, "design is rank deficient; dependent columns: " + dependent_columns(x));
    Eigen::LLT<Eigen::MatrixXd> llt(xtx);
    if (llt.info() != Eigen::Success)
        fail(ErrorKind::RankDeficient, "design is rank deficient; dependent columns: " + dependent_columns(x));
    return llt;
}

Eigen::MatrixXd least_squares_residuals(const DesignMatrix& x, const Eigen::MatrixXd& y) {
    if (y.rows() != x.rows())
        fail(ErrorKind::InvalidArgument, "response and design row counts differ");
    const auto llt = factor_design(x);
    return y - x.matrix() * llt.solve(x.matrix().transpose() * y);
}

FunctionalFit fit(const CurveSet& y, const DesignMatrix& x, const FitOptions& opts) {
    if (y.count() != x.rows())
        fail(ErrorKind::InvalidArgument, "curve count does not match design rows");
    const auto llt = factor_design(x);
    const Eigen::MatrixXd& xm = x.matrix();
    Eigen::MatrixXd beta = llt.solve(xm.transpose() * y.values());
    Eigen::MatrixXd resid = y.values() - xm * beta;
    const Eigen::Index divisor = x.rows() - x.cols();
    Eigen::MatrixXd cov = resid.transpose() * resid / static_cast<double>(divisor);
    cov = 0.5 * (cov + cov.transpose()).eval();
    Kernel kernel(y.grid(), std::move(cov));
    EigenSpectrum spectrum{y.grid(), Eigen::VectorXd(), Eigen::MatrixXd()};
    if (opts.compute_spectrum)
        spectrum = eigendecompose(kernel, opts.max_components);
    const auto p = x.cols();
    return FunctionalFit{y.grid(),
                         std::move(beta),
                         std::move(resid),
                         std::move(kernel),
                         std::move(spectrum),
                         llt.solve(Eigen::MatrixXd::Identity(p, p)),
                         divisor};
}

Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& sigma, Eigen::Index leading) {
    if (sigma.rows() != sigma.cols() || leading <= 0 || leading >= sigma.rows())
        fail(ErrorKind::InvalidArgument, "schur_complement needs a square matrix and 0 < leading < size");
    const Eigen::Index k = sigma.rows() - leading;
    const Eigen::MatrixXd s11 = sigma.topLeftCorner(leading, leading);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(s11);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible())
        fail(ErrorKind::SingularBlock, "leading block of the partitioned matrix is singular");
    Eigen::MatrixXd out = sigma.bottomRightCorner(k, k) -
                          sigma.bottomLeftCorner(k, leading) * lu.solve(sigma.topRightCorner(leading, k));
    return 0.5 * (out + out.transpose());
}

}  // namespace funcscan
