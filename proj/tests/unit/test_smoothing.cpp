#include "simgen.hpp"
#include "smoothing.hpp"

#include "helpers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace funcscan;
using testutil::error_kind_of;

namespace {

std::vector<LongitudinalRecord> records_from(const std::vector<std::string>& ids, const std::vector<Eigen::VectorXd>& t,
                                             const std::vector<Eigen::VectorXd>& y) {
    std::vector<LongitudinalRecord> out;
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (Eigen::Index j = 0; j < t[i].size(); ++j)
            out.push_back({ids[i], t[i][j], y[i][j]});
    return out;
}

Eigen::VectorXd sorted_uniform(int m, Rng& rng) {
    Eigen::VectorXd t(m);
    for (int j = 0; j < m; ++j)
        t[j] = rng.uniform();
    std::sort(t.data(), t.data() + m);
    return t;
}

}  // namespace

TEST_SUITE("smoothing") {

TEST_CASE("B-spline basis is a partition of unity") {
    const BSplineBasis b(4, 6, 0.0, 1.0);
    CHECK(b.dimension() == 10);
    for (double t : {0.0, 0.13, 0.5, 0.77, 1.0})
        CHECK(b.evaluate(t).sum() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(b.evaluate(0.4, 1).sum() == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("penalised fit reproduces a straight line for any lambda") {
    auto basis = std::make_shared<const BSplineBasis>(4, 5, 0.0, 1.0);
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(9, 0.05, 0.95);
    const Eigen::VectorXd y = (2.0 - 3.0 * t.array()).matrix();
    for (double lambda : {1e-8, 1.0, 100.0}) {
        const SplineFit f = fit_penalized_spline(basis, t, y, lambda);
        for (double s = 0.0; s <= 1.0; s += 0.1)
            CHECK(std::abs(f(s) - (2.0 - 3.0 * s)) < 1e-8);
    }
}

TEST_CASE("residual sum of squares grows with lambda") {
    auto basis = std::make_shared<const BSplineBasis>(4, 8, 0.0, 1.0);
    Rng rng(4);
    const Eigen::VectorXd t = sorted_uniform(15, rng);
    Eigen::VectorXd y(15);
    for (int j = 0; j < 15; ++j)
        y[j] = std::sin(6.0 * t[j]) + 0.1 * rng.normal();
    double prev = 0.0;
    for (double lambda : SplineConfig::default_lambda_grid()) {
        const SplineFit f = fit_penalized_spline(basis, t, y, lambda);
        double rss = 0.0;
        for (int j = 0; j < 15; ++j)
            rss += std::pow(y[j] - f(t[j]), 2);
        CHECK(rss >= prev - 1e-12);
        prev = rss;
    }
}

TEST_CASE("constant subjects give a constant mean and zero covariance") {
    std::vector<std::string> ids;
    std::vector<Eigen::VectorXd> ts, ys;
    Rng rng(8);
    for (int i = 0; i < 12; ++i) {
        ids.push_back("s" + std::to_string(i));
        ts.push_back(sorted_uniform(6, rng));
        ys.push_back(Eigen::VectorXd::Constant(6, 2.5));
    }
    const TimeGrid grid = TimeGrid::uniform(21);
    const SmoothedSample s = smooth_subjects(records_from(ids, ts, ys), SplineConfig{}, grid);
    CHECK((s.mean_curve.values().array() - 2.5).abs().maxCoeff() < 1e-8);
    CHECK(s.covariance.values().cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.nugget == doctest::Approx(0.0).scale(1.0));
    CHECK((s.curves.values().array() - 2.5).abs().maxCoeff() < 1e-8);
}

TEST_CASE("sparse subjects are dropped, all-sparse input fails") {
    std::vector<LongitudinalRecord> recs;
    Rng rng(2);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 6; ++j)
            recs.push_back({"a" + std::to_string(i), rng.uniform(), rng.normal()});
    recs.push_back({"thin", 0.2, 1.0});
    recs.push_back({"thin", 0.6, 1.0});
    const SmoothedSample s = smooth_subjects(recs, SplineConfig{}, TimeGrid::uniform(11));
    REQUIRE(s.dropped.size() == 1);
    CHECK(s.dropped[0].subject_id == "thin");
    CHECK(s.dropped[0].observations == 2);
    CHECK(s.curves.count() == 5);

    const std::vector<LongitudinalRecord> thin{{"x", 0.1, 1.0}, {"x", 0.5, 2.0}, {"y", 0.3, 0.0}};
    CHECK(error_kind_of([&] { smooth_subjects(thin, SplineConfig{}, TimeGrid::uniform(5)); }) ==
          ErrorKind::SubjectTooSparse);
}

TEST_CASE("bad lambda grid is rejected") {
    SplineConfig cfg;
    cfg.lambda_grid = {1.0, 0.1};
    const std::vector<LongitudinalRecord> r{{"x", 0.1, 1.0}};
    CHECK(error_kind_of([&] { smooth_subjects(r, cfg, TimeGrid::uniform(5)); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("kriging with zero nugget interpolates the observations") {
    Rng rng(31);
    std::vector<std::string> ids;
    std::vector<Eigen::VectorXd> ts, ys;
    for (int i = 0; i < 60; ++i) {
        ids.push_back("k" + std::to_string(i));
        Eigen::VectorXd t(6);
        for (int j = 0; j < 6; ++j)
            t[j] = (j + 0.2 + 0.6 * rng.uniform()) / 6.0;
        ts.push_back(t);
        Eigen::VectorXd y(6);
        for (int j = 0; j < 6; ++j)
            y[j] = rng.normal();
        ys.push_back(y);
    }
    // White-noise data with a tiny penalty keep the coefficient covariance full rank.
    SplineConfig cfg;
    cfg.lambda_grid = {1e-6};
    cfg.nugget_override = 0.0;
    const SmoothedSample s = smooth_subjects(records_from(ids, ts, ys), cfg, TimeGrid::uniform(25));
    double worst = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (int j = 0; j < 6; ++j)
            worst = std::max(worst, std::abs(s.fits[i](ts[i][j]) - ys[i][j]));
    CHECK(worst < 1e-6);
}

TEST_CASE("refined smoothing beats linear interpolation on a noisy shared curve") {
    const int n = 100, m = 10;
    const TimeGrid dense = TimeGrid::uniform(101);
    const auto truth = [](double t) { return std::sin(2.0 * std::numbers::pi * t) + t; };
    Rng rng(78);
    std::vector<std::string> ids;
    std::vector<Eigen::VectorXd> ts, ys;
    for (int i = 0; i < n; ++i) {
        ids.push_back("m" + std::to_string(i));
        Eigen::VectorXd t = sorted_uniform(m, rng), y(m);
        for (int j = 0; j < m; ++j)
            y[j] = truth(t[j]) + 0.1 * rng.normal();
        ts.push_back(t);
        ys.push_back(y);
    }
    // Repeated kriging passes; a single pass leaves this example just short of linear interpolation.
    SplineConfig cfg;
    cfg.refinement_passes = 3;
    const SmoothedSample s = smooth_subjects(records_from(ids, ts, ys), cfg, dense);
    double mise_smooth = 0.0, mise_linear = 0.0;
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < 101; ++k) {
            const double u = dense.points()[k];
            double lin;
            if (u <= ts[i][0]) {
                lin = ys[i][0];
            } else if (u >= ts[i][m - 1]) {
                lin = ys[i][m - 1];
            } else {
                int j = 0;
                while (ts[i][j + 1] < u)
                    ++j;
                const double w = (u - ts[i][j]) / (ts[i][j + 1] - ts[i][j]);
                lin = (1 - w) * ys[i][j] + w * ys[i][j + 1];
            }
            mise_smooth += dense.weights()[k] * std::pow(s.curves.values()(i, k) - truth(u), 2);
            mise_linear += dense.weights()[k] * std::pow(lin - truth(u), 2);
        }
    }
    CHECK(mise_smooth < mise_linear);
}

TEST_CASE("covariance estimate is positive semidefinite") {
    Rng rng(12);
    std::vector<LongitudinalRecord> recs;
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 7; ++j)
            recs.push_back({"p" + std::to_string(i), rng.uniform(), rng.normal()});
    const SmoothedSample s = smooth_subjects(recs, SplineConfig{}, TimeGrid::uniform(30));
    const EigenSpectrum sp = eigendecompose(s.covariance);
    CHECK((sp.eigenvalues.array() >= 0.0).all());
    CHECK(s.cv_scores.size() == SplineConfig::default_lambda_grid().size());
}

TEST_CASE("resampling") {
    auto basis = std::make_shared<const BSplineBasis>(4, 10, 0.0, 1.0);
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(60, 0.0, 1.0);
    const Eigen::VectorXd y = (t.array().cube() - 2.0 * t.array().square() + 0.5).matrix();
    const SplineFit f = fit_penalized_spline(basis, t, y, 1e-14);
    const TimeGrid fine = TimeGrid::uniform(119);
    const Curve c = resample(f, fine);
    for (Eigen::Index k = 0; k < 119; ++k) {
        const double u = fine.points()[k];
        CHECK(std::abs(c.values()[k] - (u * u * u - 2 * u * u + 0.5)) < 1e-8);
    }
    const SplineFit flat(basis, Eigen::VectorXd::Constant(basis->dimension(), -1.0));
    CHECK((resample(flat, fine).values().array() + 1.0).abs().maxCoeff() < 1e-13);
}

TEST_CASE("time rescaling") {
    std::vector<LongitudinalRecord> r{{"a", 3.0, 0}, {"a", 7.0, 0}, {"b", 5.0, 0}};
    const TimeMapping m = rescale_times(r);
    CHECK(r[0].time == 0.0);
    CHECK(r[1].time == 1.0);
    CHECK(r[2].time == doctest::Approx(0.5));
    CHECK(m.to_study(0.25) == doctest::Approx(4.0));
}

}
