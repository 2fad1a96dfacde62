#include "manova.hpp"

#include "errors.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>

namespace funcscan {

WilksResult wilks_test(const Eigen::MatrixXd& y, const DesignMatrix& x) {
    const Eigen::Index n = y.rows();
    const Eigen::Index p = y.cols();
    const Eigen::Index q = x.count(ColumnRole::Test);
    if (q < 1)
        fail(ErrorKind::InvalidArgument, "design has no test columns");
    const Eigen::Index error_df = n - x.cols();
    if (p < 1 || p >= error_df)
        fail(ErrorKind::InsufficientSamples, "too many responses (" + std::to_string(p) +
                                                 ") for the residual degrees of freedom (" +
                                                 std::to_string(error_df) + ")");

    const Eigen::MatrixXd r_full = least_squares_residuals(x, y);
    const Eigen::MatrixXd r_null = least_squares_residuals(x.null_model(), y);
    const Eigen::MatrixXd e = r_full.transpose() * r_full;
    const Eigen::MatrixXd d = r_null - r_full;
    const Eigen::MatrixXd h = d.transpose() * d;

    Eigen::LLT<Eigen::MatrixXd> llt(e);
    if (llt.info() != Eigen::Success)
        fail(ErrorKind::InsufficientSamples, "error SSCP matrix is singular");
    // Eigenvalues of E^{-1} H via the whitened form L^{-1} H L^{-T}.
    const Eigen::MatrixXd lh = llt.matrixL().solve(h);
    Eigen::MatrixXd whitened = llt.matrixL().solve(lh.transpose());
    whitened = 0.5 * (whitened + whitened.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(whitened, Eigen::EigenvaluesOnly);
    double log_wilks = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        log_wilks -= std::log1p(std::max(es.eigenvalues()[i], 0.0));

    WilksResult out;
    out.wilks = std::exp(log_wilks);
    const double pd = static_cast<double>(p);
    const double qd = static_cast<double>(q);
    const double denom = pd * pd + qd * qd - 5.0;
    const double t = denom > 0.0 ? std::sqrt((pd * pd * qd * qd - 4.0) / denom) : 1.0;
    const double m = static_cast<double>(error_df) - (pd - qd + 1.0) / 2.0;
    out.df1 = pd * qd;
    out.df2 = m * t - (pd * qd - 2.0) / 2.0;
    if (!(out.df2 > 0.0))
        fail(ErrorKind::InsufficientSamples, "Rao F approximation has no denominator degrees of freedom");
    const double root = std::exp(log_wilks / t);
    out.f = (1.0 - root) / root * out.df2 / out.df1;
    if (out.f <= 0.0) {
        out.f = 0.0;
        out.p_value = 1.0;
    } else {
        const boost::math::fisher_f dist(out.df1, out.df2);
        out.p_value = boost::math::cdf(boost::math::complement(dist, out.f));
    }
    return out;
}

}  // namespace funcscan
