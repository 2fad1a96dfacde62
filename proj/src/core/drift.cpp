#include "assoc.hpp"
#include "errors.hpp"
#include "simgen.hpp"

#include <cmath>

namespace funcscan {

std::vector<DriftRow> alternative_drift_check(const DriftConfig& cfg) {
    const double rho = cfg.adjust_correlation;
    if (!(std::abs(rho) < 1.0))
        fail(ErrorKind::InvalidArgument, "adjusting correlation must lie in (-1, 1)");
    if (cfg.replicates < 2)
        fail(ErrorKind::InvalidArgument, "drift check needs at least two replicates");
    const bool two_block = rho != 0.0;
    const TimeGrid grid = TimeGrid::uniform(cfg.grid_points);
    const MaternSpec errors{};
    const MaternSampler sampler(grid.points(), errors);

    // Shape of the normcdf signal rescaled to the requested norm.
    Curve beta = signal_curve(SignalKind::NormCdf, grid);
    beta = Curve(grid, beta.values() * (cfg.beta_norm / l2_norm(beta)));
    if (cfg.null_signal)
        beta = Curve::constant(grid, 0.0);
    const double beta_sq = l2_norm(beta) * l2_norm(beta);

    // Population second moments of (1, Z, X2) or (1, X).
    double predicted = 0.0;
    if (two_block) {
        Eigen::Matrix3d sigma;
        sigma << 1.0, 0.0, 0.0, 0.0, 1.0, rho, 0.0, rho, 1.0;
        predicted = schur_complement(sigma, 2)(0, 0) * beta_sq;
    } else {
        Eigen::Matrix2d sigma;
        sigma << 1.0, 0.0, 0.0, 0.5;   // centred Binomial(2, 1/2): E[X^2] = 1/2
        predicted = schur_complement(sigma, 1)(0, 0) * beta_sq;
    }

    std::vector<DriftRow> rows;
    for (std::size_t s = 0; s < cfg.sample_sizes.size(); ++s) {
        const Eigen::Index n = cfg.sample_sizes[s];
        double sum = 0.0;
        double sum_sq = 0.0;
        double resid_sum = 0.0;
        for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
            const std::uint64_t stream = s * 1000003ULL + rep;
            Rng rng_x(cfg.seed, stream, StreamRole::Covariate);
            Rng rng_e(cfg.seed, stream, StreamRole::Error);
            Eigen::VectorXd snp = draw_snp(n, 0.5, rng_x);
            DesignMatrix x(n);
            if (two_block) {
                Eigen::VectorXd z(n);
                for (Eigen::Index i = 0; i < n; ++i)
                    z[i] = rng_x.normal();
                snp = rho * z + std::sqrt(1.0 - rho * rho) * (snp / std::sqrt(0.5));
                x.add("z", z, ColumnRole::Adjust);
            }
            x.add("snp", snp, ColumnRole::Test);

            Eigen::MatrixXd y = sampler.draw(n, rng_e);
            y.noalias() += snp * beta.values().transpose();
            const CurveSet curves(grid, std::move(y));
            const FunctionalFit full = fit(curves, x, {false, 0});
            const Eigen::MatrixXd diff = least_squares_residuals(x.null_model(), curves.values()) - full.residuals;
            const double lambda = (diff.cwiseAbs2() * grid.weights()).sum();
            sum += lambda / static_cast<double>(n);
            sum_sq += (lambda / static_cast<double>(n)) * (lambda / static_cast<double>(n));

            // Brute force: residualise the tested covariate on the adjusting block.
            const Eigen::VectorXd tilde = least_squares_residuals(x.null_model(), snp);
            resid_sum += tilde.squaredNorm() / static_cast<double>(n) * beta_sq;
        }
        const double reps = static_cast<double>(cfg.replicates);
        const double mean = sum / reps;
        const double var = std::max(0.0, (sum_sq - reps * mean * mean) / (reps - 1.0));
        rows.push_back({n, mean, std::sqrt(var / reps), predicted, resid_sum / reps});
    }
    return rows;
}

}  // namespace funcscan
