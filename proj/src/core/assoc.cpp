#include "assoc.hpp"

#include "errors.hpp"
#include "manova.hpp"

#include <algorithm>
#include <cmath>

namespace funcscan {

const char* to_string(TestMethod m) {
    switch (m) {
    case TestMethod::L2: return "L2";
    case TestMethod::PC: return "PC";
    case TestMethod::PCfixed: return "PC5";
    case TestMethod::Weighted: return "Weighted";
    case TestMethod::MV: return "MV";
    }
    return "?";
}

namespace {

void require_test_columns(const DesignMatrix& x) {
    if (x.count(ColumnRole::Test) < 1)
        fail(ErrorKind::InvalidArgument, "design has no test columns");
}

// (H - H_1) Y: the part of the fitted values attributable to the test columns.
Eigen::MatrixXd test_component(const CurveSet& y, const DesignMatrix& x, const FunctionalFit& full) {
    return least_squares_residuals(x.null_model(), y.values()) - full.residuals;
}

double integrated_sum_of_squares(const TimeGrid& grid, const Eigen::MatrixXd& m) {
    return (m.cwiseAbs2() * grid.weights()).sum();
}

// ||(H - H_1) s_i||^2 for every eigenfunction i.
Eigen::VectorXd component_contributions(const TimeGrid& grid, const Eigen::MatrixXd& diff,
                                        const EigenSpectrum& spectrum) {
    const Eigen::MatrixXd scores = project(grid, diff, spectrum.eigenfunctions);
    return scores.cwiseAbs2().colwise().sum().transpose();
}

void attach_pvalue(AssociationResult& r, const Eigen::VectorXd& weights, const ImhofOptions& imhof) {
    r.weights_used = weights;
    if (weights.size() == 0 || (weights.array() <= 0.0).all()) {
        r.truncation_I = std::max<Eigen::Index>(1, weights.size());
        r.p_value = r.statistic > 0.0 ? 0.0 : 1.0;
        return;
    }
    const WeightedChiSq dist(weights, r.df_per_term);
    r.truncation_I = dist.terms();
    const auto s = imhof_survival(dist, std::max(r.statistic, 0.0), imhof);
    r.p_value = s.p;
    r.p_error = s.error_bound;
}

}  // namespace

PcDiagnostics pc_diagnostics(const FunctionalFit& fit, const DesignMatrix& x) {
    const auto tests = x.indices(ColumnRole::Test);
    if (tests.size() != 1)
        fail(ErrorKind::InvalidArgument, "per-component diagnostics need exactly one test column");
    const Eigen::VectorXd beta = fit.coefficients.row(tests.front()).transpose();
    const EigenSpectrum& sp = fit.spectrum;
    PcDiagnostics d;
    d.eigenvalues = sp.eigenvalues;
    d.scores = sp.eigenfunctions.transpose() * fit.grid.weights().asDiagonal() * beta;
    d.r_squared = Eigen::VectorXd::Zero(sp.count());
    const Eigen::Index positive = sp.positive_count();
    for (Eigen::Index i = 0; i < positive; ++i)
        d.r_squared[i] = d.scores[i] * d.scores[i] / sp.eigenvalues[i];
    return d;
}

Eigen::VectorXd explained_variance_by_component(const CurveSet& y, const FunctionalFit& fit,
                                                const Eigen::MatrixXd& basis) {
    const Eigen::MatrixXd total = project(y.grid(), y.values(), basis);
    const Eigen::MatrixXd resid = project(y.grid(), fit.residuals, basis);
    const Eigen::VectorXd num = (total - resid).cwiseAbs2().colwise().sum().transpose();
    const Eigen::VectorXd den = total.cwiseAbs2().colwise().sum().transpose();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.cols());
    for (Eigen::Index i = 0; i < out.size(); ++i)
        if (den[i] > 0.0)
            out[i] = num[i] / den[i];
    return out;
}

AssociationResult lambda_test(const CurveSet& y, const DesignMatrix& x, const FunctionalFit& full,
                              const TestOptions& opts) {
    require_test_columns(x);
    const Eigen::MatrixXd diff = test_component(y, x, full);
    AssociationResult r;
    r.method = TestMethod::L2;
    r.df_per_term = static_cast<int>(x.count(ColumnRole::Test));
    r.statistic = integrated_sum_of_squares(y.grid(), diff);
    attach_pvalue(r, truncate_spectrum(full.spectrum.eigenvalues, opts.truncation), opts.imhof);
    if (r.df_per_term == 1)
        r.diagnostics = pc_diagnostics(full, x);
    return r;
}

AssociationResult lambda_test(const CurveSet& y, const DesignMatrix& x, const TestOptions& opts) {
    require_test_columns(x);
    return lambda_test(y, x, fit(y, x), opts);
}

AssociationResult pc_test(const CurveSet& y, const DesignMatrix& x, Eigen::Index components) {
    require_test_columns(x);
    if (components < 1)
        fail(ErrorKind::InvalidArgument, "PC test needs at least one component");
    const FunctionalFit full = fit(y, x);
    const EigenSpectrum& sp = full.spectrum;
    if (components > sp.positive_count())
        fail(ErrorKind::TooManyComponents, "requested " + std::to_string(components) +
                                               " components but only " + std::to_string(sp.positive_count()) +
                                               " eigenvalues are positive");
    const Eigen::MatrixXd basis = sp.eigenfunctions.leftCols(components);
    const Eigen::MatrixXd scores = project(y.grid(), y.values(), basis);
    const WilksResult w = wilks_test(scores, x);

    const Eigen::VectorXd contrib = component_contributions(y.grid(), test_component(y, x, full), sp);
    AssociationResult r;
    r.method = TestMethod::PCfixed;
    r.df_per_term = static_cast<int>(x.count(ColumnRole::Test));
    r.truncation_I = components;
    for (Eigen::Index i = 0; i < components; ++i)
        r.statistic += contrib[i] / sp.eigenvalues[i];
    r.p_value = w.p_value;
    r.wilks = w.wilks;
    r.weights_used = Eigen::VectorXd::Ones(components);
    if (r.df_per_term == 1)
        r.diagnostics = pc_diagnostics(full, x);
    return r;
}

AssociationResult pc_adaptive_test(const CurveSet& y, const DesignMatrix& x,
                                   const std::vector<Eigen::Index>& component_counts) {
    if (component_counts.empty())
        fail(ErrorKind::InvalidArgument, "no component counts given");
    AssociationResult worst;
    bool first = true;
    for (Eigen::Index c : component_counts) {
        AssociationResult r = pc_test(y, x, c);
        if (first || r.p_value > worst.p_value) {
            worst = std::move(r);
            first = false;
        }
    }
    worst.method = TestMethod::PC;
    return worst;
}

AssociationResult weighted_test(const CurveSet& y, const DesignMatrix& x, const WeightRule& rule,
                                const TestOptions& opts) {
    require_test_columns(x);
    const FunctionalFit full = fit(y, x);
    const EigenSpectrum& sp = full.spectrum;
    const Eigen::Index positive = sp.positive_count();
    const Eigen::VectorXd contrib = component_contributions(y.grid(), test_component(y, x, full), sp);

    AssociationResult r;
    r.method = TestMethod::Weighted;
    r.df_per_term = static_cast<int>(x.count(ColumnRole::Test));
    if (r.df_per_term == 1)
        r.diagnostics = pc_diagnostics(full, x);

    if (rule.kind == WeightRule::Kind::Eigenvalue) {
        // w(i) / lambda_i == 1 for every component, including null directions.
        r.statistic = contrib.sum();
        attach_pvalue(r, truncate_spectrum(sp.eigenvalues, opts.truncation), opts.imhof);
        return r;
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(positive);
    if (rule.kind == WeightRule::Kind::Leading) {
        if (rule.leading < 1 || rule.leading > positive)
            fail(ErrorKind::TooManyComponents, "indicator weights reach past the positive spectrum");
        w.head(rule.leading).setOnes();
    } else {
        const Eigen::VectorXd& given = rule.explicit_weights;
        if (!given.allFinite() || (given.array() < 0.0).any())
            fail(ErrorKind::InvalidWeights, "weights must be finite and nonnegative");
        const Eigen::Index n = std::min(given.size(), positive);
        w.head(n) = given.head(n);
    }
    for (Eigen::Index i = 0; i < positive; ++i)
        r.statistic += w[i] * contrib[i] / sp.eigenvalues[i];
    attach_pvalue(r, w, opts.imhof);
    return r;
}

AssociationResult mv_test(const Eigen::MatrixXd& points, const DesignMatrix& x) {
    require_test_columns(x);
    if (points.rows() != x.rows())
        fail(ErrorKind::InvalidArgument, "observed points and design row counts differ");
    const WilksResult w = wilks_test(points, x);
    AssociationResult r;
    r.method = TestMethod::MV;
    r.df_per_term = static_cast<int>(x.count(ColumnRole::Test));
    r.truncation_I = points.cols();
    r.statistic = w.f;
    r.p_value = w.p_value;
    r.wilks = w.wilks;
    return r;
}

}  // namespace funcscan
