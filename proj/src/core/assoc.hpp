#pragma once

// Tests that the Test-role columns of a design have identically zero
// coefficient curves.

#include "flm.hpp"
#include "qform.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace funcscan {

enum class TestMethod { L2, PC, PCfixed, Weighted, MV };

const char* to_string(TestMethod m);

/// Per-component view of a single test column: scores <beta_hat, v_i> and
/// R2_i = score_i^2 / lambda_i (zero where lambda_i vanishes).
struct PcDiagnostics {
    Eigen::VectorXd scores;
    Eigen::VectorXd r_squared;
    Eigen::VectorXd eigenvalues;
};

struct AssociationResult {
    double statistic = 0.0;
    TestMethod method = TestMethod::L2;
    int df_per_term = 1;
    Eigen::Index truncation_I = 1;
    double p_value = 1.0;
    double p_error = 0.0;            // numerical error bound on p_value, when known
    Eigen::VectorXd weights_used;    // chi-square weights of the reference distribution
    std::optional<double> wilks;     // MANOVA-based methods only
    std::optional<PcDiagnostics> diagnostics;
};

struct TestOptions {
    TruncationPolicy truncation{};
    ImhofOptions imhof{};
};

/// Reduction in the sum of squared residual norms from adding the test columns,
/// referred to sum_i lambda_i chi2_i(K) with lambda_i the full-model residual
/// covariance eigenvalues. Carries PcDiagnostics when K == 1.
AssociationResult lambda_test(const CurveSet& y, const DesignMatrix& x, const TestOptions& opts = {});

/// Same statistic as lambda_test against a precomputed full-model fit.
AssociationResult lambda_test(const CurveSet& y, const DesignMatrix& x, const FunctionalFit& full,
                              const TestOptions& opts = {});

/// Projects the curves onto the leading `components` residual eigenfunctions and
/// runs a Wilks MANOVA of the test columns on the score vectors. The reported
/// statistic is sum_i ||(H - H_1) s_i||^2 / lambda_i, which for a single
/// standardised covariate is sum_i N <beta_hat, v_i>^2 / lambda_i.
/// Throws TooManyComponents when `components` exceeds the positive spectrum.
AssociationResult pc_test(const CurveSet& y, const DesignMatrix& x, Eigen::Index components);

/// Largest pc_test p-value over the listed component counts.
AssociationResult pc_adaptive_test(const CurveSet& y, const DesignMatrix& x,
                                   const std::vector<Eigen::Index>& component_counts = {3, 4, 5});

struct WeightRule {
    enum class Kind { Eigenvalue, Leading, Explicit };
    Kind kind = Kind::Eigenvalue;
    Eigen::Index leading = 0;
    Eigen::VectorXd explicit_weights;

    static WeightRule eigenvalues() { return {}; }
    static WeightRule first(Eigen::Index i) { return {Kind::Leading, i, {}}; }
    static WeightRule vector(Eigen::VectorXd w) { return {Kind::Explicit, 0, std::move(w)}; }
};

/// sum_i w(i) * ||(H - H_1) s_i||^2 / lambda_i, i.e. N sum_i w(i) R2_i for a
/// standardised single covariate. Eigenvalue weights give the lambda_test
/// statistic and indicator weights the PC statistic. Throws InvalidWeights for
/// negative weights.
AssociationResult weighted_test(const CurveSet& y, const DesignMatrix& x, const WeightRule& rule,
                                const TestOptions& opts = {});

/// Wilks MANOVA on raw observed points (N x M). Throws InsufficientSamples
/// unless M < N - columns.
AssociationResult mv_test(const Eigen::MatrixXd& points, const DesignMatrix& x);

/// Diagnostics for the single test column of `x` under the spectrum of `fit`.
PcDiagnostics pc_diagnostics(const FunctionalFit& fit, const DesignMatrix& x);

/// Variance-explained form: sum_n (<Y_n, v> - <Y_n - X_n beta_hat, v>)^2 / sum_n <Y_n, v>^2
/// for every column v of `basis`.
Eigen::VectorXd explained_variance_by_component(const CurveSet& y, const FunctionalFit& fit,
                                                const Eigen::MatrixXd& basis);

// ---------------------------------------------------------------------------
// Drift of the statistic under alternatives.

struct DriftConfig {
    std::vector<Eigen::Index> sample_sizes{500, 5000};
    std::size_t replicates = 200;
    std::size_t grid_points = 50;
    std::uint64_t seed = 20240601;
    /// Correlation between the adjusting covariate and the tested SNP in the
    /// two-block design; 0 runs the single-covariate design.
    double adjust_correlation = 0.0;
    double beta_norm = 0.18;
    bool null_signal = false;
};

struct DriftRow {
    Eigen::Index n = 0;
    double mean_lambda_over_n = 0.0;
    double se = 0.0;
    double predicted_drift = 0.0;     // closed form: int beta^T Sigma_{2:1} beta
    double residualized_drift = 0.0;  // brute force: mean of residualised X_2^2 times ||beta||^2
};

/// Monte Carlo mean of Lambda / N against the closed-form drift. With
/// adjust_correlation = 0 the design is a single centred Binomial(2, 1/2) SNP;
/// otherwise an adjusting covariate Z ~ N(0,1) is added and the SNP is
/// rho * Z + sqrt(1 - rho^2) * U with U a standardised Binomial(2, 1/2).
std::vector<DriftRow> alternative_drift_check(const DriftConfig& cfg);

}  // namespace funcscan
