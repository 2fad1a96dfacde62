#include "qform.hpp"

#include "helpers.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>

using namespace funcscan;
using testutil::error_kind_of;

namespace {

double chi2_sf(double df, double x) {
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

}  // namespace

TEST_SUITE("qform") {

TEST_CASE("chi-square critical values") {
    CHECK(imhof_survival(WeightedChiSq(vec({1.0}), 1), 3.841459).p == doctest::Approx(0.05).epsilon(1e-4));
    CHECK(imhof_survival(WeightedChiSq(vec({1.0, 1.0}), 1), 5.991465).p == doctest::Approx(0.05).epsilon(1e-4));
    CHECK(imhof_survival(WeightedChiSq(vec({1.0}), 2), 5.991465).p == doctest::Approx(0.05).epsilon(1e-4));
}

TEST_CASE("boundary and domain") {
    const WeightedChiSq d(vec({2.0, 0.5}), 1);
    CHECK(imhof_survival(d, 0.0).p == 1.0);
    CHECK(error_kind_of([&] { imhof_survival(d, -0.1); }) == ErrorKind::Domain);
}

TEST_CASE("equal weights reduce to a scaled chi-square") {
    for (double c : {0.3, 1.0, 4.0}) {
        for (int k = 1; k <= 3; ++k) {
            for (int terms : {1, 4}) {
                const WeightedChiSq d(Eigen::VectorXd::Constant(terms, c), k);
                for (double q : {0.2, 1.0, 3.0, 8.0}) {
                    const double x = q * c * terms * k;
                    CHECK(std::abs(imhof_survival(d, x).p - chi2_sf(terms * k, x / c)) < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("deep tail keeps relative accuracy") {
    boost::math::chi_squared chi1(1.0);
    for (double target : {1e-6, 1e-8}) {
        const double x = boost::math::quantile(boost::math::complement(chi1, target));
        const double p = imhof_survival(WeightedChiSq(vec({1.0}), 1), x).p;
        CHECK(testutil::rel_diff(p, target) < 1e-3);
    }
}

TEST_CASE("survival is nonincreasing in x") {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd w(6);
        for (Eigen::Index i = 0; i < 6; ++i)
            w[i] = std::abs(rng.normal()) + 0.01;
        const WeightedChiSq d(w, 1 + rep % 3);
        double prev = 1.0;
        for (double x = 0.0; x < 6.0 * d.mean(); x += 0.25 * d.mean()) {
            const double p = imhof_survival(d, x).p;
            CHECK(p <= prev + 1e-10);
            CHECK(p >= 0.0);
            prev = p;
        }
    }
}

TEST_CASE("scaling weights and threshold together leaves p unchanged") {
    const Eigen::VectorXd w = vec({1.0, 0.5, 0.25});
    for (double s : {0.01, 7.0}) {
        for (double x : {0.5, 2.0, 6.0}) {
            const double a = imhof_survival(WeightedChiSq(w, 2), x).p;
            const double b = imhof_survival(WeightedChiSq(s * w, 2), s * x).p;
            CHECK(std::abs(a - b) < 1e-10);
        }
    }
}

TEST_CASE("Monte Carlo agreement") {
    const WeightedChiSq d(vec({1.0, 0.5, 0.25}), 1);
    const double p = imhof_survival(d, 2.0).p;
    const std::size_t reps = 1000000;
    const double mc = mc_survival(d, 2.0, reps, 42);
    CHECK(std::abs(p - mc) <= 3.0 * std::sqrt(mc * (1 - mc) / reps));
    CHECK(mc_survival(d, 0.0, 1000, 1) == 1.0);
}

TEST_CASE("Monte Carlo scaling under a shared seed") {
    const double q = 1.3;
    const double a = mc_survival(WeightedChiSq(vec({0.5}), 1), q, 20000, 9);
    const double b = mc_survival(WeightedChiSq(vec({1.0}), 1), 2 * q, 20000, 9);
    CHECK(a == b);
}

TEST_CASE("weight validation") {
    const WeightedChiSq d(vec({0.0, 0.2, 1.5, 0.0}), 1);
    CHECK(d.terms() == 2);
    CHECK(d.weights()[0] == 1.5);
    CHECK(error_kind_of([] { WeightedChiSq(vec({1.0, -0.1}), 1); }) == ErrorKind::InvalidWeights);
    CHECK(error_kind_of([] { WeightedChiSq(vec({0.0}), 1); }) == ErrorKind::InvalidWeights);
    CHECK(error_kind_of([] { WeightedChiSq(vec({std::nan("")}), 1); }) == ErrorKind::InvalidWeights);
    CHECK(error_kind_of([] { WeightedChiSq(vec({1.0}), 0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("spectrum truncation") {
    const Eigen::VectorXd ev = vec({4.0, 2.0, 1.0, 0.5, 0.0, -1e-9});
    CHECK(truncate_spectrum(ev).size() == 4);
    CHECK(truncate_spectrum(ev, {0.5, 100}).size() == 1);
    CHECK(truncate_spectrum(ev, {0.9, 100}).size() == 3);
    CHECK(truncate_spectrum(ev, {1.0, 2}).size() == 2);
    CHECK(truncate_spectrum(vec({0.0, -1.0})).size() == 0);
}

TEST_CASE("reported error bound is small and converged") {
    const SurvivalResult r = imhof_survival(WeightedChiSq(vec({3.0, 1.0, 0.2, 0.1}), 1), 5.0);
    CHECK(r.converged);
    CHECK(r.error_bound < 1e-8);
}

}
