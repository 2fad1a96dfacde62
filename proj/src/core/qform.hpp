#pragma once

// Tail probabilities of Q = sum_i lambda_i * chi2_i(K) with independent terms.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace funcscan {

class WeightedChiSq {
public:
    /// Drops zero weights and sorts the rest descending. Throws InvalidWeights
    /// for negative or non-finite weights, or when nothing positive remains;
    /// InvalidArgument when df < 1.
    WeightedChiSq(const Eigen::VectorXd& weights, int df);

    const Eigen::VectorXd& weights() const { return weights_; }
    int df() const { return df_; }
    Eigen::Index terms() const { return weights_.size(); }
    double mean() const { return df_ * weights_.sum(); }

private:
    Eigen::VectorXd weights_;
    int df_;
};

struct TruncationPolicy {
    double coverage = 0.9999;       // fraction of the trace to keep
    std::size_t max_terms = 100;
};

/// Leading eigenvalues until their cumulative sum reaches `coverage` of the
/// total, capped at `max_terms`. Non-positive entries are ignored. Returns an
/// empty vector when no eigenvalue is positive.
Eigen::VectorXd truncate_spectrum(const Eigen::VectorXd& eigenvalues, const TruncationPolicy& policy = {});

struct ImhofOptions {
    double abs_tolerance = 1e-14;
    std::size_t max_half_periods = 20000;
};

struct SurvivalResult {
    double p = 1.0;
    double error_bound = 0.0;   // estimated absolute error of p
    bool converged = true;
};

/// P(Q > x) by numerical inversion of the characteristic function
/// (Imhof 1961). The integral is split into a smooth head, integrated
/// adaptively up to the point where the phase starts decreasing
/// monotonically, and an alternating tail summed half-period by half-period
/// with Wynn's epsilon acceleration. Throws Domain for x < 0.
SurvivalResult imhof_survival(const WeightedChiSq& dist, double x, const ImhofOptions& opts = {});

/// Monte Carlo estimate of P(Q > x) from `reps` draws of the seeded stream.
/// Each chi2(K) term is drawn as a sum of K squared standard normals.
double mc_survival(const WeightedChiSq& dist, double x, std::size_t reps, std::uint64_t seed);

}  // namespace funcscan
