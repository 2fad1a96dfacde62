#include "smoothing.hpp"

#include "errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace funcscan {

std::vector<double> SplineConfig::default_lambda_grid() {
    std::vector<double> grid;
    for (int e = -8; e <= 0; ++e)
        grid.push_back(std::pow(10.0, e));
    return grid;
}

TimeMapping rescale_times(std::vector<LongitudinalRecord>& records) {
    if (records.empty())
        fail(ErrorKind::InvalidArgument, "no longitudinal records");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : records) {
        lo = std::min(lo, r.time);
        hi = std::max(hi, r.time);
    }
    if (!(hi > lo))
        fail(ErrorKind::InvalidArgument, "all visits share one time point; cannot rescale");
    const TimeMapping map{lo, hi - lo};
    for (auto& r : records)
        r.time = std::clamp(map.to_unit(r.time), 0.0, 1.0);
    return map;
}

Curve resample(const SplineFit& fit, const TimeGrid& grid) {
    return Curve(grid, fit.basis().design(grid.points()) * fit.coefficients());
}

namespace {

struct Subject {
    std::string id;
    Eigen::VectorXd t;
    Eigen::VectorXd y;
    std::size_t design = 0;
};

// Subjects visited at identical times share one collocation matrix.
struct VisitDesign {
    Eigen::VectorXd t;
    Eigen::MatrixXd b;
    Eigen::MatrixXd btb;
};

// Solves A x = r for symmetric PSD A, discarding directions with eigenvalue
// below 1e-12 of the largest.
Eigen::VectorXd psd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& r) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double top = ev.size() > 0 ? ev.maxCoeff() : 0.0;
    if (!(top > 0.0))
        return Eigen::VectorXd::Zero(r.size());
    Eigen::VectorXd coeff = es.eigenvectors().transpose() * r;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        coeff[i] = ev[i] > 1e-12 * top ? coeff[i] / ev[i] : 0.0;
    return es.eigenvectors() * coeff;
}

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

Moments coefficient_moments(const std::vector<Eigen::VectorXd>& coefs) {
    const auto n = static_cast<Eigen::Index>(coefs.size());
    const Eigen::Index dim = coefs.front().size();
    Moments m{Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
    for (const auto& c : coefs)
        m.mean += c;
    m.mean /= static_cast<double>(n);
    if (n < 2)
        return m;
    for (const auto& c : coefs) {
        const Eigen::VectorXd d = c - m.mean;
        m.cov.noalias() += d * d.transpose();
    }
    m.cov /= static_cast<double>(n - 1);
    return m;
}

double mean_residual_variance(const std::vector<Subject>& subjects, const std::vector<VisitDesign>& designs,
                              const std::vector<Eigen::VectorXd>& coefs) {
    double total = 0.0;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const auto& s = subjects[i];
        const Eigen::VectorXd r = s.y - designs[s.design].b * coefs[i];
        total += r.squaredNorm() / static_cast<double>(r.size());
    }
    return total / static_cast<double>(subjects.size());
}

}  // namespace

SmoothedSample smooth_subjects(const std::vector<LongitudinalRecord>& records, const SplineConfig& cfg,
                               const TimeGrid& out_grid) {
    if (cfg.lambda_grid.empty())
        fail(ErrorKind::InvalidArgument, "lambda grid is empty");
    for (std::size_t i = 0; i < cfg.lambda_grid.size(); ++i) {
        if (!(cfg.lambda_grid[i] > 0.0) || (i > 0 && !(cfg.lambda_grid[i] > cfg.lambda_grid[i - 1])))
            fail(ErrorKind::InvalidArgument, "lambda grid must be strictly positive and increasing");
    }
    if (cfg.refinement_passes < 0)
        fail(ErrorKind::InvalidArgument, "refinement passes must be nonnegative");

    // Group by subject in first-appearance order.
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<std::pair<double, double>>> visits;
    double lo = out_grid.front();
    double hi = out_grid.back();
    for (const auto& r : records) {
        if (!std::isfinite(r.value) || !(r.time >= 0.0 && r.time <= 1.0))
            fail(ErrorKind::InvalidArgument, "record for subject " + r.subject_id + " has a time outside [0,1] or a non-finite value");
        auto [it, inserted] = visits.try_emplace(r.subject_id);
        if (inserted)
            order.push_back(r.subject_id);
        it->second.emplace_back(r.time, r.value);
        lo = std::min(lo, r.time);
        hi = std::max(hi, r.time);
    }

    std::vector<DroppedSubject> dropped;
    std::vector<Subject> subjects;
    std::size_t max_visits = 0;
    for (const auto& id : order) {
        auto& v = visits[id];
        std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        if (static_cast<int>(v.size()) < cfg.basis_order) {
            dropped.push_back({id, v.size()});
            continue;
        }
        Subject s{id, Eigen::VectorXd(v.size()), Eigen::VectorXd(v.size()), 0};
        for (std::size_t j = 0; j < v.size(); ++j) {
            s.t[static_cast<Eigen::Index>(j)] = v[j].first;
            s.y[static_cast<Eigen::Index>(j)] = v[j].second;
        }
        max_visits = std::max(max_visits, v.size());
        subjects.push_back(std::move(s));
    }
    if (subjects.empty())
        fail(ErrorKind::SubjectTooSparse, "every subject has fewer visits than the spline order");

    const int knots = cfg.num_knots > 0 ? cfg.num_knots : std::min<int>(20, static_cast<int>(max_visits) + 2);
    auto basis = std::make_shared<const BSplineBasis>(cfg.basis_order, knots, lo, hi);
    const Eigen::MatrixXd omega = basis->penalty(cfg.penalty_order);

    std::vector<VisitDesign> designs;
    for (auto& s : subjects) {
        auto same = std::find_if(designs.begin(), designs.end(), [&](const VisitDesign& d) {
            return d.t.size() == s.t.size() && d.t == s.t;
        });
        if (same == designs.end()) {
            VisitDesign d{s.t, basis->design(s.t), {}};
            d.btb = d.b.transpose() * d.b;
            designs.push_back(std::move(d));
            same = designs.end() - 1;
        }
        s.design = static_cast<std::size_t>(same - designs.begin());
    }

    const auto n_subj = static_cast<Eigen::Index>(subjects.size());
    const std::size_t n_lambda = cfg.lambda_grid.size();
    std::vector<std::vector<Eigen::VectorXd>> coefs(n_lambda, std::vector<Eigen::VectorXd>(subjects.size()));
    std::vector<double> scores(n_lambda, 0.0);

    for (std::size_t l = 0; l < n_lambda; ++l) {
        std::vector<Eigen::LDLT<Eigen::MatrixXd>> solvers;
        solvers.reserve(designs.size());
        for (const auto& d : designs) {
            solvers.emplace_back(d.btb + cfg.lambda_grid[l] * omega);
            const Eigen::VectorXd piv = solvers.back().vectorD().cwiseAbs();
            if (solvers.back().info() != Eigen::Success || piv.minCoeff() <= 1e-13 * piv.maxCoeff())
                fail(ErrorKind::IllConditionedBasis, "penalised spline normal equations are singular");
        }
        for (Eigen::Index i = 0; i < n_subj; ++i) {
            const auto& s = subjects[static_cast<std::size_t>(i)];
            coefs[l][static_cast<std::size_t>(i)] = solvers[s.design].solve(designs[s.design].b.transpose() * s.y);
        }
        if (n_subj < 2)
            continue;
        Eigen::VectorXd total = Eigen::VectorXd::Zero(basis->dimension());
        for (const auto& c : coefs[l])
            total += c;
        // Held-out subject versus the mean of everyone else's smoothed curve.
        std::vector<double> per_subject(subjects.size());
        for (Eigen::Index i = 0; i < n_subj; ++i) {
            const auto& s = subjects[static_cast<std::size_t>(i)];
            const Eigen::VectorXd others = (total - coefs[l][static_cast<std::size_t>(i)]) / static_cast<double>(n_subj - 1);
            per_subject[static_cast<std::size_t>(i)] = (s.y - designs[s.design].b * others).squaredNorm();
        }
        for (double v : per_subject)
            scores[l] += v;
    }

    std::size_t best = 0;
    for (std::size_t l = 1; l < n_lambda; ++l)
        if (scores[l] < scores[best] * (1.0 - 1e-12))
            best = l;

    std::vector<Eigen::VectorXd> current = coefs[best];
    Moments moments = coefficient_moments(current);
    double nugget = cfg.nugget_override ? *cfg.nugget_override : mean_residual_variance(subjects, designs, current);
    if (nugget < 0.0)
        fail(ErrorKind::InvalidArgument, "nugget must be nonnegative");

    for (int pass = 0; pass < cfg.refinement_passes; ++pass) {
        if (pass > 0) {
            moments = coefficient_moments(current);
            if (!cfg.nugget_override)
                nugget = mean_residual_variance(subjects, designs, current);
        }
        std::vector<Eigen::VectorXd> kriged(subjects.size());
        for (Eigen::Index i = 0; i < n_subj; ++i) {
            const auto& s = subjects[static_cast<std::size_t>(i)];
            const Eigen::MatrixXd& b = designs[s.design].b;
            const Eigen::MatrixXd cross = moments.cov * b.transpose();
            Eigen::MatrixXd c_tt = b * cross;
            c_tt.diagonal().array() += nugget;
            const Eigen::VectorXd resid = s.y - b * moments.mean;
            kriged[static_cast<std::size_t>(i)] = moments.mean + cross * psd_solve(0.5 * (c_tt + c_tt.transpose()), resid);
        }
        current = std::move(kriged);
    }

    const Eigen::MatrixXd b_out = basis->design(out_grid.points());
    Eigen::MatrixXd values(n_subj, static_cast<Eigen::Index>(out_grid.size()));
    std::vector<SplineFit> fits;
    std::vector<std::string> ids;
    fits.reserve(subjects.size());
    for (Eigen::Index i = 0; i < n_subj; ++i) {
        values.row(i) = (b_out * current[static_cast<std::size_t>(i)]).transpose();
        fits.emplace_back(basis, current[static_cast<std::size_t>(i)]);
        ids.push_back(subjects[static_cast<std::size_t>(i)].id);
    }
    Eigen::MatrixXd cov = b_out * moments.cov * b_out.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    cov.diagonal() = cov.diagonal().cwiseMax(0.0);

    return SmoothedSample{out_grid,
                          std::move(ids),
                          CurveSet(out_grid, std::move(values)),
                          std::move(fits),
                          cfg.lambda_grid[best],
                          std::move(scores),
                          Curve(out_grid, b_out * moments.mean),
                          Kernel(out_grid, std::move(cov)),
                          nugget,
                          std::move(dropped)};
}

}  // namespace funcscan
