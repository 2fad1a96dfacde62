#pragma once

// Per-subject trajectories from sparse noisy visits: penalised B-spline fits,
// leave-one-subject-out choice of the smoothing parameter, and a kriging
// refinement under the pooled mean/covariance/nugget estimates.

#include "bspline.hpp"
#include "fnspace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace funcscan {

struct LongitudinalRecord {
    std::string subject_id;
    double time = 0.0;   // in [0,1]
    double value = 0.0;
};

/// Affine map from study time to [0,1].
struct TimeMapping {
    double origin = 0.0;
    double span = 1.0;

    double to_unit(double t) const { return (t - origin) / span; }
    double to_study(double u) const { return origin + span * u; }
};

/// Rescales record times so that the study window [min, max] becomes [0,1].
TimeMapping rescale_times(std::vector<LongitudinalRecord>& records);

struct SplineConfig {
    int basis_order = 4;
    int num_knots = 0;   // interior knots; 0 picks min(20, max visits per subject + 2)
    int penalty_order = 2;
    std::vector<double> lambda_grid = default_lambda_grid();
    int refinement_passes = 1;
    std::optional<double> nugget_override;   // skip nugget estimation and use this value

    static std::vector<double> default_lambda_grid();
};

struct DroppedSubject {
    std::string subject_id;
    std::size_t observations = 0;
};

struct SmoothedSample {
    TimeGrid grid;
    std::vector<std::string> subject_ids;
    CurveSet curves;
    std::vector<SplineFit> fits;   // refined per-subject fits, aligned with subject_ids
    double chosen_lambda = 0.0;
    std::vector<double> cv_scores;   // aligned with the lambda grid
    Curve mean_curve;
    Kernel covariance;
    double nugget = 0.0;
    std::vector<DroppedSubject> dropped;
};

/// Smooths every subject and resamples onto `out_grid`. Subjects with fewer
/// than `basis_order` visits are dropped and listed in `dropped`; throws
/// SubjectTooSparse when no subject survives and IllConditionedBasis when a
/// subject's penalised normal equations are singular.
SmoothedSample smooth_subjects(const std::vector<LongitudinalRecord>& records, const SplineConfig& cfg,
                               const TimeGrid& out_grid);

/// Evaluates a spline fit on `grid`.
Curve resample(const SplineFit& fit, const TimeGrid& grid);

}  // namespace funcscan
