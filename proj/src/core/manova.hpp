#pragma once

#include "flm.hpp"

#include <Eigen/Dense>

namespace funcscan {

struct WilksResult {
    double wilks = 1.0;   // det(E) / det(E + H)
    double f = 0.0;       // Rao's F approximation (exact when min(p, q) <= 2)
    double df1 = 0.0;
    double df2 = 0.0;
    double p_value = 1.0;
};

/// Multivariate test that the Test-role columns of `x` have no effect on the
/// p responses in `y` (N x p), adjusting for the remaining columns.
/// Throws InsufficientSamples when the error SSCP matrix cannot be full rank.
WilksResult wilks_test(const Eigen::MatrixXd& y, const DesignMatrix& x);

}  // namespace funcscan
