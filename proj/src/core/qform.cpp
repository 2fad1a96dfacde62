#include "qform.hpp"

#include "errors.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace funcscan {

WeightedChiSq::WeightedChiSq(const Eigen::VectorXd& weights, int df) : df_(df) {
    if (df < 1)
        fail(ErrorKind::InvalidArgument, "chi-square degrees of freedom must be >= 1");
    std::vector<double> kept;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (!std::isfinite(w) || w < 0.0)
            fail(ErrorKind::InvalidWeights, "chi-square weights must be finite and nonnegative");
        if (w > 0.0)
            kept.push_back(w);
    }
    if (kept.empty())
        fail(ErrorKind::InvalidWeights, "weighted chi-square needs at least one positive weight");
    std::sort(kept.begin(), kept.end(), std::greater<>());
    weights_ = Eigen::Map<Eigen::VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
}

Eigen::VectorXd truncate_spectrum(const Eigen::VectorXd& eigenvalues, const TruncationPolicy& policy) {
    std::vector<double> pos;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
        if (eigenvalues[i] > 0.0)
            pos.push_back(eigenvalues[i]);
    std::sort(pos.begin(), pos.end(), std::greater<>());
    double total = 0.0;
    for (double v : pos)
        total += v;
    std::size_t keep = 0;
    double running = 0.0;
    while (keep < pos.size() && keep < policy.max_terms) {
        running += pos[keep++];
        if (running >= policy.coverage * total)
            break;
    }
    return Eigen::Map<Eigen::VectorXd>(pos.data(), static_cast<Eigen::Index>(keep));
}

namespace {

// Phase and log-amplitude of the inversion integrand at u.
class ImhofIntegrand {
public:
    ImhofIntegrand(const WeightedChiSq& dist, double x)
        : w_(dist.weights()), half_df_(0.5 * dist.df()), x_(x) {}

    double theta(double u) const {
        double s = 0.0;
        for (Eigen::Index i = 0; i < w_.size(); ++i)
            s += std::atan(w_[i] * u);
        return half_df_ * s - 0.5 * x_ * u;
    }

    double theta_slope(double u) const {
        double s = 0.0;
        for (Eigen::Index i = 0; i < w_.size(); ++i)
            s += w_[i] / (1.0 + w_[i] * w_[i] * u * u);
        return half_df_ * s - 0.5 * x_;
    }

    double log_rho(double u) const {
        double s = 0.0;
        for (Eigen::Index i = 0; i < w_.size(); ++i)
            s += std::log1p(w_[i] * w_[i] * u * u);
        return 0.5 * half_df_ * s;
    }

    double operator()(double u) const {
        if (u == 0.0)
            return theta_slope(0.0);
        return std::sin(theta(u)) / (u * std::exp(log_rho(u)));
    }

private:
    const Eigen::VectorXd& w_;
    double half_df_;
    double x_;
};

// Smallest u >= lo with theta(u) <= target, theta decreasing on [lo, inf).
double solve_decreasing(const ImhofIntegrand& f, double lo, double target) {
    double step = 1.0;
    double hi = lo + step;
    while (f.theta(hi) > target) {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f.theta(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

// Wynn's epsilon algorithm on a sequence of partial sums; returns the
// highest even-column entry.
double wynn_epsilon(const std::vector<double>& sums) {
    const std::size_t n = sums.size();
    std::vector<double> prev(n + 1, 0.0);
    std::vector<double> cur(sums.begin(), sums.end());
    double best = sums.back();
    for (std::size_t k = 1; cur.size() > 1; ++k) {
        std::vector<double> next(cur.size() - 1);
        for (std::size_t j = 0; j + 1 < cur.size(); ++j) {
            const double diff = cur[j + 1] - cur[j];
            if (diff == 0.0)
                return cur[j + 1];
            next[j] = prev[j + 1] + 1.0 / diff;
        }
        prev.assign(cur.begin(), cur.end());
        cur = std::move(next);
        if (k % 2 == 0 && !cur.empty())
            best = cur.back();
    }
    return best;
}

}  // namespace

SurvivalResult imhof_survival(const WeightedChiSq& dist, double x, const ImhofOptions& opts) {
    if (!(x >= 0.0))
        fail(ErrorKind::Domain, "imhof_survival requires x >= 0");
    if (x == 0.0)
        return {1.0, 0.0, true};

    const ImhofIntegrand f(dist, x);
    const double tol = opts.abs_tolerance * std::numbers::pi;

    // theta' is decreasing in u; past its root theta is monotone.
    double u_turn = 0.0;
    if (f.theta_slope(0.0) > 0.0) {
        double lo = 0.0;
        double hi = 1.0;
        while (f.theta_slope(hi) > 0.0) {
            lo = hi;
            hi *= 2.0;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (f.theta_slope(mid) > 0.0 ? lo : hi) = mid;
        }
        u_turn = hi;
    }

    // First zero of sin(theta) at or after the turning point.
    const double pi = std::numbers::pi;
    double level = std::floor(f.theta(u_turn) / pi) * pi;
    double u_start = u_turn;
    if (f.theta(u_turn) != level)
        u_start = solve_decreasing(f, u_turn, level);

    double head = 0.0;
    double err = 0.0;
    if (u_start > 0.0) {
        // Split the head into unit-phase chunks so the adaptive rule sees smooth pieces.
        const int chunks = std::clamp(static_cast<int>(std::ceil(u_start * (std::abs(f.theta_slope(0.0)) + 0.5 * x))), 1, 4096);
        const double h = u_start / chunks;
        for (int c = 0; c < chunks; ++c) {
            const auto e = quad::adaptive_gk15(f, c * h, (c + 1) * h, tol / chunks);
            head += e.value;
            err += e.error;
        }
    }

    // Alternating tail, one half-period between consecutive zeros at a time.
    std::vector<double> sums;
    sums.reserve(64);
    double partial = 0.0;
    double u_lo = u_start;
    double estimate = 0.0;
    double last_estimate = 0.0;
    int stable = 0;
    bool converged = false;
    double tail_err = 0.0;
    for (std::size_t j = 0; j < opts.max_half_periods; ++j) {
        level -= pi;
        const double u_hi = solve_decreasing(f, u_lo, level);
        const auto piece = quad::adaptive_gk15(f, u_lo, u_hi, 0.1 * tol);
        err += piece.error;
        partial += piece.value;
        u_lo = u_hi;
        sums.push_back(partial);
        if (sums.size() > 24)
            sums.erase(sums.begin());

        if (std::abs(piece.value) < 0.1 * tol) {
            estimate = partial;
            tail_err = std::abs(piece.value);
            converged = true;
            break;
        }
        if (sums.size() >= 6) {
            estimate = wynn_epsilon(sums);
            const double delta = std::abs(estimate - last_estimate);
            last_estimate = estimate;
            stable = delta < 0.1 * tol ? stable + 1 : 0;
            tail_err = delta;
            if (stable >= 3) {
                converged = true;
                break;
            }
        }
    }
    if (!converged)
        estimate = sums.empty() ? 0.0 : (sums.size() >= 6 ? wynn_epsilon(sums) : sums.back());

    const double integral = head + estimate;
    const double p = 0.5 + integral / pi;
    const double bound = (err + tail_err) / pi + 4.0 * std::numeric_limits<double>::epsilon();
    return {std::clamp(p, 0.0, 1.0), bound, converged};
}

double mc_survival(const WeightedChiSq& dist, double x, std::size_t reps, std::uint64_t seed) {
    if (reps == 0)
        fail(ErrorKind::InvalidArgument, "mc_survival needs at least one replicate");
    Rng rng(seed);
    const Eigen::VectorXd& w = dist.weights();
    std::size_t exceed = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        double q = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            double chi = 0.0;
            for (int k = 0; k < dist.df(); ++k) {
                const double z = rng.normal();
                chi += z * z;
            }
            q += w[i] * chi;
        }
        if (q > x)
            ++exceed;
    }
    return static_cast<double>(exceed) / static_cast<double>(reps);
}

}  // namespace funcscan
