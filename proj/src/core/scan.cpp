#include "scan.hpp"

#include "errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace funcscan {

const char* to_string(ScanStatus s) {
    switch (s) {
    case ScanStatus::Ok: return "ok";
    case ScanStatus::SkippedMaf: return "skipped_maf";
    case ScanStatus::SkippedRank: return "skipped_rank";
    case ScanStatus::SkippedMissing: return "skipped_missing";
    }
    return "?";
}

MissingPolicy parse_missing_policy(const std::string& name) {
    if (name == "mean_impute")
        return MissingPolicy::MeanImpute;
    if (name == "drop_subject")
        return MissingPolicy::DropSubject;
    fail(ErrorKind::InvalidArgument, "unknown missing-genotype policy '" + name + "'");
}

double GenotypeTable::missing_fraction(Eigen::Index snp) const {
    const auto row = dosages.row(snp);
    Eigen::Index missing = 0;
    for (Eigen::Index j = 0; j < row.size(); ++j)
        missing += std::isnan(row[j]) ? 1 : 0;
    return row.size() ? static_cast<double>(missing) / static_cast<double>(row.size()) : 0.0;
}

GenotypeTable read_genotypes(const std::string& dosage_path, const std::string& map_path) {
    const auto map = read_snp_map(map_path);
    GenotypeReader reader(dosage_path);
    std::vector<GenotypeReader::Row> rows;
    while (reader.next_chunk(4096, rows)) {
    }
    GenotypeTable t;
    t.subject_ids = reader.subject_ids();
    t.dosages.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.subject_ids.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto it = map.find(rows[i].snp_id);
        if (it == map.end())
            fail(ErrorKind::Parse, dosage_path + ":" + std::to_string(rows[i].line) + ": SNP " + rows[i].snp_id +
                                       " is missing from " + map_path);
        t.snps.push_back(it->second);
        for (std::size_t j = 0; j < rows[i].dosages.size(); ++j)
            t.dosages(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].dosages[j];
    }
    return t;
}

DesignMatrix covariate_design(const CovariateTable& table, const std::vector<std::size_t>& rows,
                              const std::vector<std::string>& names) {
    DesignMatrix x(static_cast<Eigen::Index>(rows.size()));
    for (const auto& name : names) {
        if (table.is_numeric(name)) {
            x.add(name, table.numeric(name, rows), ColumnRole::Adjust);
            continue;
        }
        const auto levels = table.levels(name, rows);
        if (levels.size() < 2)
            fail(ErrorKind::DegenerateFactor, "factor '" + name + "' has a single level");
        const auto& col = table.raw(name);
        for (std::size_t l = 1; l < levels.size(); ++l) {
            Eigen::VectorXd d(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i)
                d[static_cast<Eigen::Index>(i)] = col[rows[i]] == levels[l] ? 1.0 : 0.0;
            x.add(name + "=" + levels[l], d, ColumnRole::Adjust);
        }
    }
    return x;
}

namespace {

CurveSet subset_rows(const CurveSet& y, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), y.values().cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        v.row(static_cast<Eigen::Index>(i)) = y.values().row(rows[i]);
    return CurveSet(y.grid(), std::move(v));
}

DesignMatrix subset_rows(const DesignMatrix& x, const std::vector<Eigen::Index>& rows) {
    DesignMatrix out(static_cast<Eigen::Index>(rows.size()));
    for (Eigen::Index j = 1; j < x.cols(); ++j) {
        Eigen::VectorXd c(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            c[static_cast<Eigen::Index>(i)] = x.matrix()(rows[i], j);
        out.add(x.names()[static_cast<std::size_t>(j)], c, x.roles()[static_cast<std::size_t>(j)]);
    }
    return out;
}

bool skippable(const Error& e) {
    return e.numerical() || e.kind() == ErrorKind::InsufficientSamples || e.kind() == ErrorKind::InvalidWeights;
}

int worker_count(int requested) {
#ifdef _OPENMP
    return requested > 0 ? requested : omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

// Evaluates f(i) for i in [0, n) on `threads` workers; the first exception is rethrown.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            f(i);
        } catch (...) {
#pragma omp critical(funcscan_scan_error)
            if (!error)
                error = std::current_exception();
        }
    }
    if (error)
        std::rethrow_exception(error);
}

}  // namespace

ScanContext::ScanContext(const CurveSet& curves, const std::vector<std::string>& curve_ids,
                         const CovariateTable* covariates, const std::vector<std::string>& genotype_subjects,
                         ScanConfig cfg)
    : cfg_(std::move(cfg)), curves_(curves), null_(1) {
    if (static_cast<Eigen::Index>(curve_ids.size()) != curves.count())
        fail(ErrorKind::InvalidArgument, "subject id count does not match curve count");
    if (!(cfg_.maf_threshold >= 0.0 && cfg_.maf_threshold <= 0.5))
        fail(ErrorKind::InvalidArgument, "maf threshold must lie in [0, 0.5]");
    if (!cfg_.adjust.empty() && covariates == nullptr)
        fail(ErrorKind::InvalidArgument, "adjusting covariates requested without a covariate table");
    if (cfg_.chunk_size == 0)
        cfg_.chunk_size = 1;

    std::unordered_map<std::string, std::size_t> geno_index;
    for (std::size_t j = 0; j < genotype_subjects.size(); ++j)
        geno_index.emplace(genotype_subjects[j], j);

    std::vector<Eigen::Index> keep;
    std::vector<std::size_t> cov_rows;
    join_.phenotype_subjects = curve_ids.size();
    for (std::size_t i = 0; i < curve_ids.size(); ++i) {
        std::optional<std::size_t> cov_row;
        if (covariates) {
            cov_row = covariates->row_of(curve_ids[i]);
            if (!cov_row) {
                ++join_.missing_covariates;
                continue;
            }
        }
        const auto g = geno_index.find(curve_ids[i]);
        if (g == geno_index.end()) {
            ++join_.missing_genotypes;
            continue;
        }
        keep.push_back(static_cast<Eigen::Index>(i));
        geno_columns_.push_back(g->second);
        if (cov_row)
            cov_rows.push_back(*cov_row);
    }
    join_.used_subjects = keep.size();
    if (keep.empty())
        fail(ErrorKind::InvalidArgument, "no subject is shared by the phenotype, covariate and genotype inputs");

    curves_ = subset_rows(curves, keep);
    const auto n = static_cast<Eigen::Index>(keep.size());
    null_ = covariates ? covariate_design(*covariates, cov_rows, cfg_.adjust) : DesignMatrix(n);
    null_llt_ = factor_design(null_);
    null_matrix_ = null_.matrix();
    null_xtx_ = null_matrix_.transpose() * null_matrix_;
    const Eigen::MatrixXd& y = curves_.values();
    null_resid_ = y - null_matrix_ * null_llt_.solve(null_matrix_.transpose() * y);
    null_sscp_ = null_resid_.transpose() * null_resid_;
    null_sscp_ = 0.5 * (null_sscp_ + null_sscp_.transpose()).eval();

    if (cfg_.shared_null_spectrum) {
        const Kernel k(curves_.grid(), null_sscp_ / static_cast<double>(n - null_.cols()));
        shared_weights_ = truncate_spectrum(eigendecompose(k).eigenvalues, cfg_.test.truncation);
    }
}

ScanRecord ScanContext::finish(ScanRecord r, double lambda, const Eigen::MatrixXd& resid_sscp,
                               Eigen::Index divisor) const {
    r.lambda = std::max(lambda, 0.0);
    Eigen::VectorXd weights;
    if (cfg_.shared_null_spectrum) {
        weights = shared_weights_;
    } else {
        const Kernel k(curves_.grid(), resid_sscp / static_cast<double>(divisor));
        weights = truncate_spectrum(eigendecompose(k).eigenvalues, cfg_.test.truncation);
    }
    if (weights.size() == 0) {
        r.truncation_I = 0;
        r.p_value = r.lambda > 0.0 ? 0.0 : 1.0;
        return r;
    }
    const WeightedChiSq dist(weights, 1);
    r.truncation_I = dist.terms();
    r.p_value = imhof_survival(dist, r.lambda, cfg_.test.imhof).p;
    return r;
}

ScanRecord ScanContext::test(const SnpInfo& snp, const double* dosages) const {
    ScanRecord r;
    r.snp_id = snp.id;
    r.chromosome = snp.chromosome;
    r.position = snp.position;
    r.lambda = std::numeric_limits<double>::quiet_NaN();
    r.p_value = std::numeric_limits<double>::quiet_NaN();

    const auto n = static_cast<Eigen::Index>(geno_columns_.size());
    Eigen::VectorXd g(n);
    Eigen::Index observed = 0;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        g[i] = dosages[geno_columns_[static_cast<std::size_t>(i)]];
        if (!std::isnan(g[i])) {
            ++observed;
            sum += g[i];
        }
    }
    r.n_used = observed;
    if (observed == 0) {
        r.status = ScanStatus::SkippedMissing;
        return r;
    }
    const double freq = sum / (2.0 * static_cast<double>(observed));
    r.maf = std::min(freq, 1.0 - freq);
    if (r.maf < cfg_.maf_threshold) {
        r.status = ScanStatus::SkippedMaf;
        return r;
    }
    if (observed < n && cfg_.missing == MissingPolicy::DropSubject)
        return test_direct(snp, dosages);
    if (observed < n) {
        const double mean = sum / static_cast<double>(observed);
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::isnan(g[i]))
                g[i] = mean;
        r.n_used = n;
    }

    const Eigen::Index p1 = null_.cols();
    if (n <= p1 + 1) {
        r.status = ScanStatus::SkippedMissing;
        return r;
    }
    // Same conditioning rule as the generic fit, on the bordered cross-product matrix.
    const Eigen::VectorXd xg = null_matrix_.transpose() * g;
    Eigen::MatrixXd xtx(p1 + 1, p1 + 1);
    xtx.topLeftCorner(p1, p1) = null_xtx_;
    xtx.topRightCorner(p1, 1) = xg;
    xtx.bottomLeftCorner(1, p1) = xg.transpose();
    xtx(p1, p1) = g.squaredNorm();
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(xtx, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(ev.maxCoeff() > 0.0) || ev.minCoeff() <= 1e-12 * ev.maxCoeff()) {
        r.status = ScanStatus::SkippedRank;
        return r;
    }

    const Eigen::VectorXd tilde = g - null_matrix_ * null_llt_.solve(xg);
    const double s = tilde.squaredNorm();
    const Eigen::VectorXd c = null_resid_.transpose() * tilde;
    const double lambda = c.cwiseAbs2().dot(curves_.grid().weights()) / s;
    Eigen::MatrixXd sscp = null_sscp_;
    sscp.noalias() -= c * c.transpose() / s;
    try {
        return finish(std::move(r), lambda, sscp, n - p1 - 1);
    } catch (const Error& e) {
        if (!skippable(e))
            throw;
        r.status = ScanStatus::SkippedRank;
        r.lambda = std::numeric_limits<double>::quiet_NaN();
        r.p_value = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
}

ScanRecord ScanContext::test_direct(const SnpInfo& snp, const double* dosages) const {
    ScanRecord r;
    r.snp_id = snp.id;
    r.chromosome = snp.chromosome;
    r.position = snp.position;
    r.lambda = std::numeric_limits<double>::quiet_NaN();
    r.p_value = std::numeric_limits<double>::quiet_NaN();

    const auto n = static_cast<Eigen::Index>(geno_columns_.size());
    std::vector<Eigen::Index> rows;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = dosages[geno_columns_[static_cast<std::size_t>(i)]];
        if (!std::isnan(d)) {
            rows.push_back(i);
            sum += d;
        }
    }
    if (rows.empty()) {
        r.status = ScanStatus::SkippedMissing;
        return r;
    }
    const double freq = sum / (2.0 * static_cast<double>(rows.size()));
    r.maf = std::min(freq, 1.0 - freq);
    if (r.maf < cfg_.maf_threshold) {
        r.n_used = static_cast<Eigen::Index>(rows.size());
        r.status = ScanStatus::SkippedMaf;
        return r;
    }
    if (cfg_.missing == MissingPolicy::MeanImpute) {
        rows.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i)
            rows[static_cast<std::size_t>(i)] = i;
    }
    const double mean = sum / static_cast<double>(std::count_if(
                                  geno_columns_.begin(), geno_columns_.end(),
                                  [&](std::size_t c) { return !std::isnan(dosages[c]); }));
    Eigen::VectorXd g(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double d = dosages[geno_columns_[static_cast<std::size_t>(rows[i])]];
        g[static_cast<Eigen::Index>(i)] = std::isnan(d) ? mean : d;
    }
    r.n_used = g.size();
    if (r.n_used <= null_.cols() + 1) {
        r.status = ScanStatus::SkippedMissing;
        return r;
    }

    try {
        const CurveSet y = subset_rows(curves_, rows);
        DesignMatrix x = subset_rows(null_, rows);
        x.add("snp", g, ColumnRole::Test);
        const FunctionalFit full = fit(y, x);
        const AssociationResult a = lambda_test(y, x, full, cfg_.test);
        if (!cfg_.shared_null_spectrum) {
            r.lambda = a.statistic;
            r.p_value = a.p_value;
            r.truncation_I = a.truncation_I;
            return r;
        }
        const Eigen::MatrixXd sscp = full.residuals.transpose() * full.residuals;
        return finish(std::move(r), a.statistic, sscp, full.dof_divisor);
    } catch (const Error& e) {
        if (!skippable(e))
            throw;
        r.status = ScanStatus::SkippedRank;
        r.lambda = std::numeric_limits<double>::quiet_NaN();
        r.p_value = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
}

std::vector<ScanRecord> run_scan(const ScanContext& ctx, const GenotypeTable& genotypes) {
    if (genotypes.snps.size() != static_cast<std::size_t>(genotypes.snp_count()))
        fail(ErrorKind::InvalidArgument, "genotype table has mismatched SNP annotations");
    const auto count = static_cast<std::size_t>(genotypes.snp_count());
    std::vector<ScanRecord> out(count);
    // Row-major copy so each SNP's dosages are contiguous.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = genotypes.dosages;
    parallel_for(count, worker_count(ctx.config().threads), [&](std::size_t i) {
        out[i] = ctx.test(genotypes.snps[i], rows.row(static_cast<Eigen::Index>(i)).data());
    });
    return out;
}

void run_scan(const ScanContext& ctx, GenotypeReader& reader, const std::unordered_map<std::string, SnpInfo>& map,
              const std::function<void(const ScanRecord&)>& sink) {
    const int threads = worker_count(ctx.config().threads);
    std::vector<GenotypeReader::Row> chunk;
    std::vector<ScanRecord> out;
    std::vector<const SnpInfo*> info;
    for (;;) {
        chunk.clear();
        if (!reader.next_chunk(ctx.config().chunk_size, chunk))
            break;
        info.resize(chunk.size());
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            const auto it = map.find(chunk[i].snp_id);
            if (it == map.end())
                fail(ErrorKind::Parse, "line " + std::to_string(chunk[i].line) + ": SNP " + chunk[i].snp_id +
                                           " has no entry in the SNP map");
            info[i] = &it->second;
        }
        out.assign(chunk.size(), ScanRecord{});
        parallel_for(chunk.size(), threads,
                     [&](std::size_t i) { out[i] = ctx.test(*info[i], chunk[i].dosages.data()); });
        for (const auto& r : out)
            sink(r);
    }
}

std::string format_scan_header() {
    return "snp_id\tchromosome\tposition\tmaf\tn_used\tlambda\tp_value\ttruncation_I\tstatus";
}

std::string format_scan_record(const ScanRecord& r) {
    char buf[256];
    if (r.status == ScanStatus::Ok) {
        std::snprintf(buf, sizeof buf, "\t%lld\t%.6f\t%lld\t%.10g\t%.6e\t%lld\t%s", static_cast<long long>(r.position),
                      r.maf, static_cast<long long>(r.n_used), r.lambda, r.p_value,
                      static_cast<long long>(r.truncation_I), to_string(r.status));
    } else {
        std::snprintf(buf, sizeof buf, "\t%lld\t%.6f\t%lld\tNA\tNA\tNA\t%s", static_cast<long long>(r.position), r.maf,
                      static_cast<long long>(r.n_used), to_string(r.status));
    }
    return r.snp_id + "\t" + r.chromosome + buf;
}

InteractionResult interaction_test(const CurveSet& curves, const std::vector<std::string>& curve_ids,
                                   const CovariateTable& covariates, const Eigen::VectorXd& snp,
                                   const std::string& treatment, const std::vector<std::string>& adjust,
                                   const TestOptions& opts) {
    if (static_cast<Eigen::Index>(curve_ids.size()) != curves.count() || snp.size() != curves.count())
        fail(ErrorKind::InvalidArgument, "curves, subject ids and SNP column must have the same length");
    std::vector<Eigen::Index> keep;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < curve_ids.size(); ++i) {
        const auto row = covariates.row_of(curve_ids[i]);
        if (!row || std::isnan(snp[static_cast<Eigen::Index>(i)]))
            continue;
        keep.push_back(static_cast<Eigen::Index>(i));
        rows.push_back(*row);
    }
    if (keep.empty())
        fail(ErrorKind::InvalidArgument, "no subject has both curves and covariates");

    const auto levels = covariates.levels(treatment, rows);
    if (levels.size() < 2)
        fail(ErrorKind::DegenerateFactor, "treatment '" + treatment + "' has a single level");

    std::vector<std::string> others;
    for (const auto& a : adjust)
        if (a != treatment)
            others.push_back(a);
    DesignMatrix x = covariate_design(covariates, rows, others);
    const auto n = static_cast<Eigen::Index>(keep.size());
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i)
        g[i] = snp[keep[static_cast<std::size_t>(i)]];

    const auto& col = covariates.raw(treatment);
    std::vector<Eigen::VectorXd> dummies;
    for (std::size_t l = 1; l < levels.size(); ++l) {
        Eigen::VectorXd d(n);
        for (Eigen::Index i = 0; i < n; ++i)
            d[i] = col[rows[static_cast<std::size_t>(i)]] == levels[l] ? 1.0 : 0.0;
        x.add(treatment + "=" + levels[l], d, ColumnRole::Adjust);
        dummies.push_back(std::move(d));
    }
    x.add("snp", g, ColumnRole::Adjust);
    InteractionResult out;
    out.baseline = levels.front();
    for (std::size_t l = 1; l < levels.size(); ++l) {
        out.terms.push_back("snp:" + treatment + "=" + levels[l]);
        x.add(out.terms.back(), g.cwiseProduct(dummies[l - 1]), ColumnRole::Test);
    }

    const CurveSet y = subset_rows(curves, keep);
    const FunctionalFit full = fit(y, x);
    out.test = lambda_test(y, x, full, opts);
    const Eigen::VectorXd var_t = full.residual_cov.values().diagonal().cwiseMax(0.0);
    for (Eigen::Index j : x.indices(ColumnRole::Test)) {
        const Eigen::VectorXd beta = full.coefficients.row(j).transpose();
        const Eigen::VectorXd se = (full.xtx_inverse(j, j) * var_t).cwiseSqrt();
        out.coefficients.emplace_back(y.grid(), beta);
        out.lower.emplace_back(y.grid(), beta - 2.0 * se);
        out.upper.emplace_back(y.grid(), beta + 2.0 * se);
    }
    return out;
}

std::vector<QqPoint> qq_points(std::vector<double> pvalues) {
    std::sort(pvalues.begin(), pvalues.end(), std::greater<>());
    const double n = static_cast<double>(pvalues.size());
    std::vector<QqPoint> out;
    out.reserve(pvalues.size());
    for (std::size_t k = 0; k < pvalues.size(); ++k) {
        const double rank = n - static_cast<double>(k);
        const double p = std::max(pvalues[k], 1e-300);
        out.push_back({-std::log10(rank / (n + 1.0)), p >= 1.0 ? 0.0 : -std::log10(p)});
    }
    return out;
}

namespace {

struct SvgPoint {
    double x;
    double y;
};

void write_svg(const std::string& path, const std::vector<SvgPoint>& pts, const std::string& xlabel,
               const std::string& ylabel, bool diagonal) {
    const double w = 640.0, h = 400.0, m = 48.0;
    double xmax = 1e-12, ymax = 1e-12;
    for (const auto& p : pts) {
        xmax = std::max(xmax, p.x);
        ymax = std::max(ymax, p.y);
    }
    if (diagonal)
        xmax = ymax = std::max(xmax, ymax);
    auto sx = [&](double x) { return m + (w - 2 * m) * x / xmax; };
    auto sy = [&](double y) { return h - m - (h - 2 * m) * y / ymax; };
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f)
        fail(ErrorKind::Io, "cannot write " + path);
    std::fprintf(f, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n", w, h);
    std::fprintf(f, "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n");
    std::fprintf(f, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", m, h - m, w - m, h - m);
    std::fprintf(f, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", m, h - m, m, m);
    if (diagonal)
        std::fprintf(f, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"grey\"/>\n", sx(0), sy(0),
                     sx(xmax), sy(ymax));
    std::fprintf(f, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"12\">%s</text>\n", w / 2, h - 12,
                 xlabel.c_str());
    std::fprintf(f, "<text x=\"14\" y=\"%.1f\" font-size=\"12\" transform=\"rotate(-90 14 %.1f)\">%s</text>\n", h / 2,
                 h / 2, ylabel.c_str());
    for (const auto& p : pts)
        std::fprintf(f, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.5\" fill=\"steelblue\"/>\n", sx(p.x), sy(p.y));
    std::fputs("</svg>\n", f);
    std::fclose(f);
}

}  // namespace

ExportPaths qq_manhattan_export(const std::vector<ScanRecord>& records, const std::string& prefix, bool svg) {
    ExportPaths paths{prefix + ".manhattan.tsv", prefix + ".qq.tsv", "", ""};
    std::vector<double> pvalues;
    std::vector<SvgPoint> manhattan_pts;
    std::map<std::string, double> chrom_offset;
    std::map<std::string, double> chrom_span;
    for (const auto& r : records)
        if (r.status == ScanStatus::Ok)
            chrom_span[r.chromosome] = std::max(chrom_span[r.chromosome], static_cast<double>(r.position));
    double offset = 0.0;
    for (const auto& [chrom, span] : chrom_span) {
        chrom_offset[chrom] = offset;
        offset += span + 1.0;
    }

    std::FILE* f = std::fopen(paths.manhattan.c_str(), "w");
    if (!f)
        fail(ErrorKind::Io, "cannot write " + paths.manhattan);
    std::fputs("snp_id\tchromosome\tposition\tneg_log10_p\n", f);
    for (const auto& r : records) {
        if (r.status != ScanStatus::Ok)
            continue;
        const double y = r.p_value >= 1.0 ? 0.0 : -std::log10(std::max(r.p_value, 1e-300));
        std::fprintf(f, "%s\t%s\t%lld\t%.6f\n", r.snp_id.c_str(), r.chromosome.c_str(),
                     static_cast<long long>(r.position), y);
        pvalues.push_back(r.p_value);
        manhattan_pts.push_back({chrom_offset[r.chromosome] + static_cast<double>(r.position), y});
    }
    std::fclose(f);

    const auto qq = qq_points(pvalues);
    f = std::fopen(paths.qq.c_str(), "w");
    if (!f)
        fail(ErrorKind::Io, "cannot write " + paths.qq);
    std::fputs("expected\tobserved\n", f);
    std::vector<SvgPoint> qq_pts;
    for (const auto& q : qq) {
        std::fprintf(f, "%.6f\t%.6f\n", q.expected, q.observed);
        qq_pts.push_back({q.expected, q.observed});
    }
    std::fclose(f);

    if (svg) {
        paths.manhattan_svg = prefix + ".manhattan.svg";
        paths.qq_svg = prefix + ".qq.svg";
        write_svg(paths.manhattan_svg, manhattan_pts, "genome position", "-log10 p", false);
        write_svg(paths.qq_svg, qq_pts, "expected -log10 p", "observed -log10 p", true);
    }
    return paths;
}

SyntheticPanel make_synthetic_panel(const PanelSpec& spec) {
    if (spec.subjects < 10 || spec.snps == 0 || spec.grid_points < 2)
        fail(ErrorKind::InvalidArgument, "panel needs at least 10 subjects, one SNP and two grid points");
    if (spec.treatment_levels < 1 || spec.treatment_levels > 26)
        fail(ErrorKind::InvalidArgument, "treatment levels must be between 1 and 26");
    if (!(spec.min_maf > 0.0 && spec.min_maf <= 0.5) || !(spec.causal_maf > 0.0 && spec.causal_maf <= 0.5))
        fail(ErrorKind::InvalidArgument, "allele frequencies must lie in (0, 0.5]");
    const bool causal = spec.planted || spec.interaction_norm != 0.0;
    if (causal && spec.causal_index >= spec.snps)
        fail(ErrorKind::InvalidArgument, "causal SNP index is outside the panel");

    const Eigen::Index n = spec.subjects;
    const TimeGrid grid = TimeGrid::uniform(spec.grid_points);
    const Eigen::VectorXd& t = grid.points();

    std::vector<std::string> ids;
    char buf[64];
    for (Eigen::Index i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "S%05lld", static_cast<long long>(i + 1));
        ids.emplace_back(buf);
    }

    Rng cov_rng(spec.seed, 0, StreamRole::Covariate);
    Rng trt_rng(spec.seed, 0, StreamRole::Treatment);
    std::vector<std::string> age(static_cast<std::size_t>(n)), gender(age.size()), arm(age.size());
    Eigen::VectorXd age_v(n), male(n), arm_index(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        age_v[i] = std::round(10.0 * (5.0 + 7.0 * cov_rng.uniform())) / 10.0;
        male[i] = cov_rng.uniform() < 0.5 ? 1.0 : 0.0;
        arm_index[i] = std::floor(trt_rng.uniform() * spec.treatment_levels);
        std::snprintf(buf, sizeof buf, "%.1f", age_v[i]);
        age[static_cast<std::size_t>(i)] = buf;
        gender[static_cast<std::size_t>(i)] = male[i] > 0.5 ? "M" : "F";
        arm[static_cast<std::size_t>(i)] = std::string(1, static_cast<char>('A' + static_cast<int>(arm_index[i])));
    }

    GenotypeTable geno;
    geno.subject_ids = ids;
    geno.dosages.resize(static_cast<Eigen::Index>(spec.snps), n);
    const std::size_t per_chrom = (spec.snps + 21) / 22;
    std::string causal_id;
    for (std::size_t s = 0; s < spec.snps; ++s) {
        Rng rng(spec.seed, s, StreamRole::Genotype);
        const bool is_causal = causal && s == spec.causal_index;
        const double maf = is_causal ? spec.causal_maf : spec.min_maf + (0.5 - spec.min_maf) * rng.uniform();
        for (Eigen::Index i = 0; i < n; ++i)
            geno.dosages(static_cast<Eigen::Index>(s), i) = rng.binomial(2, maf);
        std::snprintf(buf, sizeof buf, "rs%07zu", s + 1);
        geno.snps.push_back({buf, std::to_string(1 + s / per_chrom),
                             static_cast<std::int64_t>(10000 + 5000 * (s % per_chrom))});
        if (is_causal)
            causal_id = buf;
    }

    const MaternSampler sampler(t, spec.errors);
    Rng err_rng(spec.seed, 0, StreamRole::Error);
    Eigen::MatrixXd y = sampler.draw(n, err_rng);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double shift = 0.02 * (age_v[i] - 8.5) + 0.1 * male[i];
        y.row(i).array() += (1.0 + 0.5 * t.array() + shift + 0.05 * arm_index[i] * t.array()).transpose();
    }
    if (causal) {
        Curve shape = signal_curve(spec.signal == SignalKind::Null ? SignalKind::NormCdf : spec.signal, grid);
        const Eigen::VectorXd unit = shape.values() / l2_norm(shape);
        const Eigen::VectorXd g = geno.dosages.row(static_cast<Eigen::Index>(spec.causal_index)).transpose();
        const Eigen::VectorXd centred = g.array() - 2.0 * spec.causal_maf;
        if (spec.planted && spec.signal != SignalKind::Null)
            y.noalias() += centred * (spec.beta_norm * unit).transpose();
        if (spec.interaction_norm != 0.0) {
            const double last = spec.treatment_levels - 1;
            for (Eigen::Index i = 0; i < n; ++i)
                if (arm_index[i] == last)
                    y.row(i) += centred[i] * spec.interaction_norm * unit.transpose();
        }
    }

    CovariateTable covariates(ids, {"age", "gender", "treatment"}, {age, gender, arm});
    return SyntheticPanel{ids, CurveSet(grid, std::move(y)), std::move(covariates), std::move(geno), causal_id};
}

void write_panel(const SyntheticPanel& panel, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        fail(ErrorKind::Io, "cannot create directory " + dir + ": " + ec.message());
    write_curves(dir + "/curves.tsv", panel.subject_ids, panel.curves);

    std::ofstream cov(dir + "/covar.csv");
    if (!cov)
        fail(ErrorKind::Io, "cannot write " + dir + "/covar.csv");
    cov << "subject_id";
    for (const auto& name : panel.covariates.names())
        cov << ',' << name;
    cov << '\n';
    for (std::size_t i = 0; i < panel.covariates.subject_ids().size(); ++i) {
        cov << panel.covariates.subject_ids()[i];
        for (const auto& name : panel.covariates.names())
            cov << ',' << panel.covariates.raw(name)[i];
        cov << '\n';
    }

    std::ofstream geno(dir + "/geno.tsv");
    std::ofstream map(dir + "/snps.tsv");
    if (!geno || !map)
        fail(ErrorKind::Io, "cannot write genotype files in " + dir);
    geno << "snp_id";
    for (const auto& id : panel.genotypes.subject_ids)
        geno << '\t' << id;
    geno << '\n';
    map << "snp_id\tchromosome\tposition\n";
    const auto& d = panel.genotypes.dosages;
    for (Eigen::Index s = 0; s < d.rows(); ++s) {
        const auto& info = panel.genotypes.snps[static_cast<std::size_t>(s)];
        geno << info.id;
        for (Eigen::Index i = 0; i < d.cols(); ++i) {
            if (std::isnan(d(s, i)))
                geno << "\tNA";
            else
                geno << '\t' << static_cast<int>(d(s, i));
        }
        geno << '\n';
        map << info.id << '\t' << info.chromosome << '\t' << info.position << '\n';
    }
}

void write_visits(const SyntheticPanel& panel, const std::string& path, int visits, double noise_sd,
                  std::uint64_t seed) {
    const auto& grid = panel.curves.grid();
    const auto t_count = static_cast<int>(grid.size());
    if (visits < 1 || visits > t_count)
        fail(ErrorKind::InvalidArgument, "visits per subject must lie in [1, grid size]");
    if (!(noise_sd >= 0.0))
        fail(ErrorKind::InvalidArgument, "measurement noise must be nonnegative");
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f)
        fail(ErrorKind::Io, "cannot write " + path);
    std::fputs("subject_id,time,value\n", f);
    std::vector<int> slots(static_cast<std::size_t>(t_count));
    for (Eigen::Index i = 0; i < panel.curves.count(); ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i), StreamRole::Measurement);
        for (int k = 0; k < t_count; ++k)
            slots[static_cast<std::size_t>(k)] = k;
        std::shuffle(slots.begin(), slots.end(), rng.engine());
        std::sort(slots.begin(), slots.begin() + visits);
        for (int k = 0; k < visits; ++k) {
            const int j = slots[static_cast<std::size_t>(k)];
            const double v = panel.curves.values()(i, j) + noise_sd * rng.normal();
            std::fprintf(f, "%s,%.10g,%.10g\n", panel.subject_ids[static_cast<std::size_t>(i)].c_str(),
                         grid.points()[j], v);
        }
    }
    if (std::fclose(f) != 0)
        fail(ErrorKind::Io, "error while writing " + path);
}

}  // namespace funcscan
