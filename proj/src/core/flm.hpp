#pragma once

// Functional linear model Y_n(t) = X_n^T beta(t) + eps_n(t), fitted pointwise
// by least squares on a shared time grid.

#include "fnspace.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace funcscan {

enum class ColumnRole { Intercept, Adjust, Test };

/// N x (1 + J + K) covariate matrix. The intercept column is created by the
/// constructor; everything else is appended with a role.
class DesignMatrix {
public:
    explicit DesignMatrix(Eigen::Index rows);

    DesignMatrix& add(std::string name, const Eigen::VectorXd& column, ColumnRole role);

    Eigen::Index rows() const { return x_.rows(); }
    Eigen::Index cols() const { return static_cast<Eigen::Index>(roles_.size()); }
    Eigen::Index count(ColumnRole role) const;
    const Eigen::MatrixXd& matrix() const { return x_; }
    const std::vector<ColumnRole>& roles() const { return roles_; }
    const std::vector<std::string>& names() const { return names_; }
    std::vector<Eigen::Index> indices(ColumnRole role) const;

    /// Same rows with every Test column removed.
    DesignMatrix null_model() const;

    /// Keeps only the listed columns (the intercept must be among them).
    DesignMatrix select(const std::vector<Eigen::Index>& columns) const;

private:
    DesignMatrix() = default;

    Eigen::MatrixXd x_;
    std::vector<ColumnRole> roles_;
    std::vector<std::string> names_;
};

struct FitOptions {
    bool compute_spectrum = true;
    std::size_t max_components = 0;   // 0 keeps the full spectrum
};

struct FunctionalFit {
    TimeGrid grid;
    Eigen::MatrixXd coefficients;   // one row per design column
    Eigen::MatrixXd residuals;      // N x T
    Kernel residual_cov;
    EigenSpectrum spectrum;         // empty when not requested
    Eigen::MatrixXd xtx_inverse;
    Eigen::Index dof_divisor = 0;   // N - 1 - J - K

    Curve coefficient(Eigen::Index column) const { return Curve(grid, coefficients.row(column).transpose()); }
    double residual_sum_of_squared_norms() const;
};

/// Throws InsufficientSamples when N <= columns and RankDeficient (naming the
/// offending columns) when X^T X has reciprocal condition number <= 1e-12.
FunctionalFit fit(const CurveSet& y, const DesignMatrix& x, const FitOptions& opts = {});

/// Cholesky factor of X^T X after the rank check described for fit().
Eigen::LLT<Eigen::MatrixXd> factor_design(const DesignMatrix& x);

/// Least-squares residuals of every column of `y` on `x`.
Eigen::MatrixXd least_squares_residuals(const DesignMatrix& x, const Eigen::MatrixXd& y);

/// Sigma_22 - Sigma_21 Sigma_11^{-1} Sigma_12 with the leading block of size `leading`.
/// Throws SingularBlock when the leading block is not invertible.
Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& sigma, Eigen::Index leading);

}  // namespace funcscan
