#include "flm.hpp"
#include "simgen.hpp"

#include "helpers.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace funcscan;
using testutil::error_kind_of;

TEST_SUITE("flm") {

TEST_CASE("zero phenotypes give zero coefficients and covariance") {
    const TimeGrid g = TimeGrid::uniform(15);
    Rng rng(1);
    DesignMatrix x(20);
    x.add("z", testutil::normal_vector(20, rng), ColumnRole::Test);
    const FunctionalFit f = fit(CurveSet(g, Eigen::MatrixXd::Zero(20, 15)), x);
    CHECK(f.coefficients.cwiseAbs().maxCoeff() == 0.0);
    CHECK(f.residual_cov.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("intercept-only model returns the mean curve") {
    const TimeGrid g = TimeGrid::uniform(10);
    Rng rng(2);
    const Eigen::MatrixXd y = testutil::normal_matrix(30, 10, rng);
    const FunctionalFit f = fit(CurveSet(g, y), DesignMatrix(30));
    CHECK((f.coefficients.row(0) - y.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(f.dof_divisor == 29);
}

TEST_CASE("centred covariate with curves t and -t recovers beta(t) = t") {
    const TimeGrid g = TimeGrid::uniform(11);
    const Eigen::VectorXd t = g.points();
    // Two copies of the two-subject example so the residual covariance is defined.
    Eigen::MatrixXd y(4, 11);
    y << t.transpose(), -t.transpose(), t.transpose(), -t.transpose();
    Eigen::VectorXd xv(4);
    xv << 1, -1, 1, -1;
    DesignMatrix x(4);
    x.add("x", xv, ColumnRole::Test);
    const FunctionalFit f = fit(CurveSet(g, y), x);
    CHECK((f.coefficients.row(1).transpose() - t).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(f.residuals.cwiseAbs().maxCoeff() < 1e-12);

    DesignMatrix two(2);
    two.add("x", Eigen::Vector2d(1, -1), ColumnRole::Test);
    CHECK(error_kind_of([&] { fit(CurveSet(g, y.topRows(2)), two); }) == ErrorKind::InsufficientSamples);
}

TEST_CASE("residuals satisfy the normal equations") {
    const TimeGrid g = TimeGrid::uniform(25);
    Rng rng(3);
    DesignMatrix x(50);
    x.add("a", testutil::normal_vector(50, rng), ColumnRole::Adjust);
    x.add("b", testutil::normal_vector(50, rng), ColumnRole::Test);
    const FunctionalFit f = fit(CurveSet(g, testutil::normal_matrix(50, 25, rng)), x);
    CHECK((x.matrix().transpose() * f.residuals).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(f.dof_divisor == 50 - 1 - 1 - 1);
    // Covariance matches the residual cross-product over the divisor.
    const Eigen::MatrixXd c = f.residuals.transpose() * f.residuals / 47.0;
    CHECK((c - f.residual_cov.values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rank deficiency names the dependent column") {
    Rng rng(4);
    const Eigen::VectorXd a = testutil::normal_vector(12, rng);
    DesignMatrix x(12);
    x.add("a", a, ColumnRole::Adjust);
    x.add("twice_a", 2.0 * a, ColumnRole::Test);
    const CurveSet y(TimeGrid::uniform(5), testutil::normal_matrix(12, 5, rng));
    try {
        fit(y, x);
        FAIL("expected RankDeficient");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RankDeficient);
        CHECK(std::string(e.what()).find("twice_a") != std::string::npos);
    }
    DesignMatrix wide(3);
    wide.add("a", Eigen::Vector3d(1, 2, 3), ColumnRole::Test);
    wide.add("b", Eigen::Vector3d(0, 1, 5), ColumnRole::Test);
    CHECK(error_kind_of([&] { fit(CurveSet(TimeGrid::uniform(5), Eigen::MatrixXd::Zero(3, 5)), wide); }) ==
          ErrorKind::InsufficientSamples);
}

TEST_CASE("Schur complement") {
    Eigen::Matrix2d diag;
    diag << 2, 0, 0, 3;
    CHECK(schur_complement(diag, 1)(0, 0) == doctest::Approx(3.0));
    Eigen::Matrix2d corr;
    corr << 1, 0.5, 0.5, 1;
    CHECK(schur_complement(corr, 1)(0, 0) == doctest::Approx(0.75));
    Eigen::Matrix2d sing;
    sing << 0, 0, 0, 1;
    CHECK(error_kind_of([&] { schur_complement(sing, 1); }) == ErrorKind::SingularBlock);

    // Against explicit inversion on a random SPD matrix.
    Rng rng(5);
    const Eigen::MatrixXd a = testutil::normal_matrix(6, 9, rng);
    const Eigen::MatrixXd s = a * a.transpose();
    const Eigen::MatrixXd expect =
        s.bottomRightCorner(4, 4) - s.bottomLeftCorner(4, 2) * s.topLeftCorner(2, 2).inverse() * s.topRightCorner(2, 4);
    CHECK((schur_complement(s, 2) - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("nested models never fit worse") {
    const TimeGrid g = TimeGrid::uniform(20);
    Rng rng(6);
    for (int rep = 0; rep < 10; ++rep) {
        DesignMatrix x(40);
        x.add("a", testutil::normal_vector(40, rng), ColumnRole::Adjust);
        x.add("b", testutil::normal_vector(40, rng), ColumnRole::Adjust);
        x.add("c", testutil::normal_vector(40, rng), ColumnRole::Test);
        const CurveSet y(g, testutil::normal_matrix(40, 20, rng));
        const double full = fit(y, x).residual_sum_of_squared_norms();
        const double sub = fit(y, x.select({0, 2})).residual_sum_of_squared_norms();
        const double null = fit(y, x.null_model()).residual_sum_of_squared_norms();
        CHECK(full <= sub + 1e-10);
        CHECK(full <= null + 1e-10);
        CHECK(null <= sub + 1e-10);
    }
}

TEST_CASE("covariance eigenvalues move no more than the Hilbert-Schmidt distance") {
    const TimeGrid g = TimeGrid::uniform(30);
    const MaternSpec spec{};
    for (int rep = 0; rep < 20; ++rep) {
        const CurveSet a = draw_error_curves(g, spec, 80, 100 + rep);
        const CurveSet b = draw_error_curves(g, spec, 80, 500 + rep);
        const FunctionalFit fa = fit(a, DesignMatrix(80));
        const FunctionalFit fb = fit(b, DesignMatrix(80));
        const double sup = (fa.spectrum.eigenvalues - fb.spectrum.eigenvalues).cwiseAbs().maxCoeff();
        CHECK(sup <= hs_distance(fa.residual_cov, fb.residual_cov) + 1e-10);
    }
}

TEST_CASE("covariance estimate converges as N grows") {
    const TimeGrid g = TimeGrid::uniform(30);
    const MaternSpec spec{};
    const Kernel truth = Kernel::from_function(g, [&](double t, double s) { return matern_cov(std::abs(t - s), spec); });
    int closer = 0;
    const int pairs = 40;
    for (int rep = 0; rep < pairs; ++rep) {
        const Kernel small = fit(draw_error_curves(g, spec, 200, 1000 + rep), DesignMatrix(200)).residual_cov;
        const Kernel large = fit(draw_error_curves(g, spec, 2000, 3000 + rep), DesignMatrix(2000)).residual_cov;
        if (hs_distance(large, truth) < hs_distance(small, truth))
            ++closer;
    }
    CHECK(closer >= 38);
}

TEST_CASE("least-squares residuals match the fit") {
    const TimeGrid g = TimeGrid::uniform(8);
    Rng rng(9);
    DesignMatrix x(25);
    x.add("a", testutil::normal_vector(25, rng), ColumnRole::Test);
    const Eigen::MatrixXd y = testutil::normal_matrix(25, 8, rng);
    CHECK((least_squares_residuals(x, y) - fit(CurveSet(g, y), x).residuals).cwiseAbs().maxCoeff() < 1e-12);
}

}
