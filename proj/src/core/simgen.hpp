#pragma once

// Simulation engine: Matern error processes, SNP covariates, the three
// normalised effect curves, the power study and the per-component R2 profile.

#include "assoc.hpp"
#include "fnspace.hpp"
#include "rng.hpp"
#include "smoothing.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace funcscan {

/// Stationary Matern covariance. Closed forms exist for nu = 1/2, 3/2, 5/2;
/// anything else is rejected with UnsupportedSmoothness.
struct MaternSpec {
    double mean = 0.0;
    double variance = 1.0;
    double nugget = 0.0;
    double scale = 0.25;
    double nu = 2.5;
};

double matern_cov(double distance, const MaternSpec& spec);

/// Draws Gaussian vectors with Matern covariance at fixed time points. The
/// covariance is factorised once; if Cholesky fails a ridge of 1e-10 (times
/// the variance scale) is added, growing tenfold, for at most three retries.
class MaternSampler {
public:
    MaternSampler(const Eigen::VectorXd& times, const MaternSpec& spec);

    /// N x T matrix of independent draws from the given stream.
    Eigen::MatrixXd draw(Eigen::Index n, Rng& rng) const;

    const Eigen::MatrixXd& covariance() const { return cov_; }
    double ridge() const { return ridge_; }

private:
    MaternSpec spec_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd factor_;
    double ridge_ = 0.0;
};

CurveSet draw_error_curves(const TimeGrid& grid, const MaternSpec& spec, Eigen::Index n, std::uint64_t seed);

enum class SignalKind { Null, Linear, NormCdf, Sinusoid };

const char* to_string(SignalKind k);
SignalKind parse_signal(const std::string& name);

double signal_value(SignalKind kind, double t);
Curve signal_curve(SignalKind kind, const TimeGrid& grid);

/// Centred Binomial(2, maf) dosages.
Eigen::VectorXd draw_snp(Eigen::Index n, double maf, Rng& rng);
Eigen::VectorXd draw_snp(Eigen::Index n, double maf, std::uint64_t seed);

/// Rescales to sample mean 0 and sample mean square 1.
Eigen::VectorXd standardize(const Eigen::VectorXd& x);

struct PowerScenario {
    SignalKind signal = SignalKind::NormCdf;
    Eigen::Index n = 200;
    int points_per_curve = 10;   // M
    std::size_t replicates = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    double maf = 0.5;
    MaternSpec errors{};
    SplineConfig smoothing{};
    std::size_t output_grid_points = 50;
    std::vector<Eigen::Index> adaptive_components{3, 4, 5};
    Eigen::Index fixed_components = 5;
    int threads = 0;   // 0 = OpenMP default
};

struct PowerRow {
    std::string method;
    int points_per_curve = 0;
    std::string signal;
    double power = 0.0;
    double se = 0.0;
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
    std::size_t failures = 0;   // replicates where the method could not be evaluated
};

/// Replicates sample M points per curve on the even grid over [1/M, 1],
/// rebuild curves with smooth_subjects, and run L2, PC (max over the
/// adaptive counts), PC5 and MV. Deterministic for a given seed.
std::vector<PowerRow> run_power_study(const PowerScenario& scenario);

/// Per-replicate p-values, one vector per method in the order L2, PC, PC5, MV.
std::vector<std::vector<double>> power_study_pvalues(const PowerScenario& scenario);

struct R2Profile {
    std::vector<double> empirical;     // mean of R2_i over replicates, i = 1..components
    std::vector<double> empirical_se;
    std::vector<double> theoretical;   // <beta, v_i>^2 / lambda_i under the true kernel, standardised covariate
};

struct R2Scenario {
    SignalKind signal = SignalKind::NormCdf;
    Eigen::Index n = 10000;
    std::size_t replicates = 10;
    std::size_t grid_points = 100;
    std::size_t components = 10;
    double maf = 0.5;
    MaternSpec errors{};
    std::uint64_t seed = 7;
};

/// Curves are drawn directly on a dense grid over [0,1]; R2_i uses the
/// standardised SNP and the full-model residual spectrum.
R2Profile r2_profile(const R2Scenario& scenario);

}  // namespace funcscan
