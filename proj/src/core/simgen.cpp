#include "simgen.hpp"

#include "errors.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace funcscan {

double matern_cov(double distance, const MaternSpec& spec) {
    if (!(distance >= 0.0))
        fail(ErrorKind::Domain, "Matern distance must be nonnegative");
    if (!(spec.scale > 0.0) || spec.variance < 0.0 || spec.nugget < 0.0)
        fail(ErrorKind::InvalidArgument, "Matern scale must be positive; variance and nugget nonnegative");
    const double r = distance / spec.scale;
    double c = 0.0;
    if (spec.nu == 2.5) {
        const double a = std::sqrt(5.0) * r;
        c = (1.0 + a + 5.0 * r * r / 3.0) * std::exp(-a);
    } else if (spec.nu == 1.5) {
        const double a = std::sqrt(3.0) * r;
        c = (1.0 + a) * std::exp(-a);
    } else if (spec.nu == 0.5) {
        c = std::exp(-r);
    } else {
        fail(ErrorKind::UnsupportedSmoothness, "Matern smoothness must be 1/2, 3/2 or 5/2");
    }
    return spec.variance * c + (distance == 0.0 ? spec.nugget : 0.0);
}

MaternSampler::MaternSampler(const Eigen::VectorXd& times, const MaternSpec& spec) : spec_(spec) {
    const Eigen::Index t = times.size();
    cov_.resize(t, t);
    for (Eigen::Index i = 0; i < t; ++i)
        for (Eigen::Index j = 0; j < t; ++j)
            cov_(i, j) = matern_cov(std::abs(times[i] - times[j]), spec);

    const double scale = std::max(cov_.diagonal().maxCoeff(), std::numeric_limits<double>::min());
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    double ridge = 1e-10 * scale;
    for (int attempt = 0; llt.info() != Eigen::Success; ++attempt) {
        if (attempt == 3)
            fail(ErrorKind::NumericallySingularCovariance, "Matern covariance is not positive definite even after jitter");
        Eigen::MatrixXd jittered = cov_;
        jittered.diagonal().array() += ridge;
        llt.compute(jittered);
        ridge_ = ridge;
        ridge *= 10.0;
    }
    factor_ = llt.matrixL();
}

Eigen::MatrixXd MaternSampler::draw(Eigen::Index n, Rng& rng) const {
    const Eigen::Index t = cov_.rows();
    Eigen::MatrixXd z(t, n);
    // Column-major fill: each curve's normals are consecutive in the stream.
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < t; ++r)
            z(r, c) = rng.normal();
    Eigen::MatrixXd out = (factor_.triangularView<Eigen::Lower>() * z).transpose();
    out.array() += spec_.mean;
    return out;
}

CurveSet draw_error_curves(const TimeGrid& grid, const MaternSpec& spec, Eigen::Index n, std::uint64_t seed) {
    MaternSampler sampler(grid.points(), spec);
    Rng rng(seed, 0, StreamRole::Error);
    return CurveSet(grid, sampler.draw(n, rng));
}

const char* to_string(SignalKind k) {
    switch (k) {
    case SignalKind::Null: return "null";
    case SignalKind::Linear: return "linear";
    case SignalKind::NormCdf: return "normcdf";
    case SignalKind::Sinusoid: return "sinusoid";
    }
    return "?";
}

SignalKind parse_signal(const std::string& name) {
    if (name == "null") return SignalKind::Null;
    if (name == "linear") return SignalKind::Linear;
    if (name == "normcdf") return SignalKind::NormCdf;
    if (name == "sinusoid") return SignalKind::Sinusoid;
    fail(ErrorKind::InvalidArgument, "unknown signal '" + name + "' (expected null, linear, normcdf or sinusoid)");
}

double signal_value(SignalKind kind, double t) {
    switch (kind) {
    case SignalKind::Null:
        return 0.0;
    case SignalKind::Linear:
        return 0.18 * 2.0 * (t - 0.5) / 0.5773;
    case SignalKind::NormCdf: {
        const double phi = 0.5 * std::erfc(-7.5 * (t - 0.5) / std::numbers::sqrt2);
        return 0.18 * phi / 0.6517;
    }
    case SignalKind::Sinusoid:
        return 0.18 * std::numbers::sqrt2 * std::cos(2.0 * std::numbers::pi * t);
    }
    return 0.0;
}

Curve signal_curve(SignalKind kind, const TimeGrid& grid) {
    return Curve::from_function(grid, [kind](double t) { return signal_value(kind, t); });
}

Eigen::VectorXd draw_snp(Eigen::Index n, double maf, Rng& rng) {
    if (!(maf > 0.0 && maf <= 0.5))
        fail(ErrorKind::InvalidArgument, "minor allele frequency must lie in (0, 0.5]");
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i)
        x[i] = static_cast<double>(rng.binomial(2, maf)) - 2.0 * maf;
    return x;
}

Eigen::VectorXd draw_snp(Eigen::Index n, double maf, std::uint64_t seed) {
    Rng rng(seed, 0, StreamRole::Genotype);
    return draw_snp(n, maf, rng);
}

Eigen::VectorXd standardize(const Eigen::VectorXd& x) {
    const Eigen::VectorXd centred = x.array() - x.mean();
    const double ms = centred.squaredNorm() / static_cast<double>(x.size());
    if (!(ms > 0.0))
        fail(ErrorKind::RankDeficient, "cannot standardise a constant covariate");
    return centred / std::sqrt(ms);
}

namespace {

enum Method { kL2 = 0, kPC, kPC5, kMV, kMethods };
constexpr const char* kMethodNames[kMethods] = {"L2", "PC", "PC5", "MV"};

std::vector<double> replicate_pvalues(const PowerScenario& sc, const MaternSampler& sampler,
                                      const Eigen::VectorXd& times, const TimeGrid& out_grid, std::size_t rep) {
    std::vector<double> p(kMethods, std::numeric_limits<double>::quiet_NaN());
    Rng rng_x(sc.seed, rep, StreamRole::Covariate);
    Rng rng_e(sc.seed, rep, StreamRole::Error);
    const Eigen::VectorXd snp = draw_snp(sc.n, sc.maf, rng_x);
    Eigen::MatrixXd points = sampler.draw(sc.n, rng_e);
    for (Eigen::Index j = 0; j < times.size(); ++j)
        points.col(j) += snp * signal_value(sc.signal, times[j]);

    std::vector<LongitudinalRecord> records;
    records.reserve(static_cast<std::size_t>(sc.n * times.size()));
    for (Eigen::Index i = 0; i < sc.n; ++i)
        for (Eigen::Index j = 0; j < times.size(); ++j)
            records.push_back({std::to_string(i), times[j], points(i, j)});

    DesignMatrix x(sc.n);
    x.add("snp", snp, ColumnRole::Test);

    try {
        const SmoothedSample sample = smooth_subjects(records, sc.smoothing, out_grid);
        const CurveSet& curves = sample.curves;
        const FunctionalFit full = fit(curves, x);
        p[kL2] = lambda_test(curves, x, full).p_value;
        const Eigen::Index positive = full.spectrum.positive_count();
        double worst = 0.0;
        for (Eigen::Index c : sc.adaptive_components)
            worst = std::max(worst, pc_test(curves, x, std::min(c, positive)).p_value);
        p[kPC] = worst;
        p[kPC5] = pc_test(curves, x, std::min(sc.fixed_components, positive)).p_value;
    } catch (const Error&) {
        // Leave the curve-based methods as NaN; counted as failures.
    }
    try {
        p[kMV] = mv_test(points, x).p_value;
    } catch (const Error&) {
    }
    return p;
}

}  // namespace

std::vector<std::vector<double>> power_study_pvalues(const PowerScenario& sc) {
    if (sc.points_per_curve < 2 || sc.replicates < 1 || sc.n < 3)
        fail(ErrorKind::InvalidArgument, "power scenario needs M >= 2, N >= 3 and at least one replicate");
    const int m = sc.points_per_curve;
    Eigen::VectorXd times(m);
    for (int j = 0; j < m; ++j)
        times[j] = static_cast<double>(j + 1) / m;
    const TimeGrid out_grid = TimeGrid::uniform(sc.output_grid_points, times[0], 1.0);
    const MaternSampler sampler(times, sc.errors);

    std::vector<std::vector<double>> per_rep(sc.replicates);
    const int threads = sc.threads > 0 ? sc.threads : omp_get_max_threads();
    const auto reps = static_cast<long>(sc.replicates);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long r = 0; r < reps; ++r)
        per_rep[static_cast<std::size_t>(r)] = replicate_pvalues(sc, sampler, times, out_grid, static_cast<std::size_t>(r));

    std::vector<std::vector<double>> out(kMethods, std::vector<double>(sc.replicates));
    for (std::size_t r = 0; r < sc.replicates; ++r)
        for (int k = 0; k < kMethods; ++k)
            out[static_cast<std::size_t>(k)][r] = per_rep[r][static_cast<std::size_t>(k)];
    return out;
}

std::vector<PowerRow> run_power_study(const PowerScenario& sc) {
    const auto pvals = power_study_pvalues(sc);
    std::vector<PowerRow> rows;
    for (int k = 0; k < kMethods; ++k) {
        std::size_t rejected = 0;
        std::size_t failures = 0;
        for (double p : pvals[static_cast<std::size_t>(k)]) {
            if (std::isnan(p))
                ++failures;
            else if (p < sc.alpha)
                ++rejected;
        }
        const double n = static_cast<double>(sc.replicates);
        const double power = static_cast<double>(rejected) / n;
        rows.push_back({kMethodNames[k], sc.points_per_curve, to_string(sc.signal), power,
                        std::sqrt(power * (1.0 - power) / n), sc.replicates, sc.seed, failures});
    }
    return rows;
}

R2Profile r2_profile(const R2Scenario& sc) {
    const TimeGrid grid = TimeGrid::uniform(sc.grid_points);
    const MaternSampler sampler(grid.points(), sc.errors);
    const Curve beta = signal_curve(sc.signal, grid);
    const auto k = static_cast<Eigen::Index>(sc.components);

    R2Profile out;
    out.empirical.assign(sc.components, 0.0);
    out.empirical_se.assign(sc.components, 0.0);
    std::vector<double> sum_sq(sc.components, 0.0);

    for (std::size_t rep = 0; rep < sc.replicates; ++rep) {
        Rng rng_x(sc.seed, rep, StreamRole::Covariate);
        Rng rng_e(sc.seed, rep, StreamRole::Error);
        const Eigen::VectorXd snp = draw_snp(sc.n, sc.maf, rng_x);
        Eigen::MatrixXd y = sampler.draw(sc.n, rng_e);
        y.noalias() += snp * beta.values().transpose();
        DesignMatrix x(sc.n);
        x.add("snp", standardize(snp), ColumnRole::Test);
        const FunctionalFit f = fit(CurveSet(grid, std::move(y)), x, {true, sc.components});
        const PcDiagnostics d = pc_diagnostics(f, x);
        for (Eigen::Index i = 0; i < k && i < d.r_squared.size(); ++i) {
            out.empirical[static_cast<std::size_t>(i)] += d.r_squared[i];
            sum_sq[static_cast<std::size_t>(i)] += d.r_squared[i] * d.r_squared[i];
        }
    }
    const double reps = static_cast<double>(sc.replicates);
    for (std::size_t i = 0; i < sc.components; ++i) {
        const double mean = out.empirical[i] / reps;
        out.empirical[i] = mean;
        const double var = sc.replicates > 1 ? std::max(0.0, (sum_sq[i] - reps * mean * mean) / (reps - 1.0)) : 0.0;
        out.empirical_se[i] = std::sqrt(var / reps);
    }

    // Population version: true kernel, beta per standard deviation of the SNP.
    const Kernel truth = Kernel::from_function(grid, [&](double t, double s) { return matern_cov(std::abs(t - s), sc.errors); });
    const EigenSpectrum sp = eigendecompose(truth, sc.components);
    const double sd2 = 2.0 * sc.maf * (1.0 - sc.maf);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double score = inner_product(beta, sp.eigenfunction(i));
        out.theoretical.push_back(sp.eigenvalues[i] > 0.0 ? sd2 * score * score / sp.eigenvalues[i] : 0.0);
    }
    return out;
}

}  // namespace funcscan
