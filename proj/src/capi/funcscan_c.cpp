#include "funcscan/funcscan.h"

#include "assoc.hpp"
#include "errors.hpp"
#include "qform.hpp"
#include "scan.hpp"
#include "simgen.hpp"
#include "smoothing.hpp"
#include "table.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>

struct fs_curves {
    std::vector<std::string> ids;
    funcscan::CurveSet curves;
};

struct fs_table {
    funcscan::CovariateTable table;
};

namespace {

using namespace funcscan;

thread_local std::string last_error;

fs_status status_of(ErrorKind k) {
    switch (k) {
    case ErrorKind::InvalidArgument: return FS_ERR_INVALID_ARGUMENT;
    case ErrorKind::GridMismatch: return FS_ERR_GRID_MISMATCH;
    case ErrorKind::InvalidKernel: return FS_ERR_INVALID_KERNEL;
    case ErrorKind::Domain: return FS_ERR_DOMAIN;
    case ErrorKind::SubjectTooSparse: return FS_ERR_SUBJECT_TOO_SPARSE;
    case ErrorKind::IllConditionedBasis: return FS_ERR_ILL_CONDITIONED_BASIS;
    case ErrorKind::RankDeficient: return FS_ERR_RANK_DEFICIENT;
    case ErrorKind::InsufficientSamples: return FS_ERR_INSUFFICIENT_SAMPLES;
    case ErrorKind::SingularBlock: return FS_ERR_SINGULAR_BLOCK;
    case ErrorKind::TooManyComponents: return FS_ERR_TOO_MANY_COMPONENTS;
    case ErrorKind::InvalidWeights: return FS_ERR_INVALID_WEIGHTS;
    case ErrorKind::UnsupportedSmoothness: return FS_ERR_UNSUPPORTED_SMOOTHNESS;
    case ErrorKind::NumericallySingularCovariance: return FS_ERR_SINGULAR_COVARIANCE;
    case ErrorKind::DegenerateFactor: return FS_ERR_DEGENERATE_FACTOR;
    case ErrorKind::Parse: return FS_ERR_PARSE;
    case ErrorKind::Io: return FS_ERR_IO;
    }
    return FS_ERR_INTERNAL;
}

template <typename F>
fs_status guarded(F&& f) {
    try {
        f();
        return FS_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return FS_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return FS_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok)
        fail(ErrorKind::InvalidArgument, what);
}

std::vector<std::string> names(const char* const* list, size_t n) {
    require(n == 0 || list != nullptr, "column list is NULL");
    std::vector<std::string> out;
    for (size_t i = 0; i < n; ++i) {
        require(list[i] != nullptr, "column name is NULL");
        out.emplace_back(list[i]);
    }
    return out;
}

// Rows of `table` matching the curve subjects; subjects without covariates are dropped.
struct Joined {
    std::vector<Eigen::Index> curve_rows;
    std::vector<std::size_t> table_rows;
};

Joined join(const fs_curves& c, const CovariateTable& t) {
    Joined j;
    for (std::size_t i = 0; i < c.ids.size(); ++i) {
        if (const auto row = t.row_of(c.ids[i])) {
            j.curve_rows.push_back(static_cast<Eigen::Index>(i));
            j.table_rows.push_back(*row);
        }
    }
    if (j.curve_rows.empty())
        fail(ErrorKind::InvalidArgument, "no curve subject appears in the covariate table");
    return j;
}

void fill(fs_test_result* out, const AssociationResult& r) {
    out->statistic = r.statistic;
    out->p_value = r.p_value;
    out->p_error = r.p_error;
    out->df_per_term = r.df_per_term;
    out->truncation = static_cast<int>(r.truncation_I);
    out->wilks = r.wilks ? *r.wilks : std::numeric_limits<double>::quiet_NaN();
}

void copy_id(char* dst, size_t size, const std::string& src) {
    if (dst == nullptr || size == 0)
        return;
    std::snprintf(dst, size, "%s", src.c_str());
}

}  // namespace

extern "C" {

const char* fs_version(void) { return "0.1.0"; }

const char* fs_last_error(void) { return last_error.c_str(); }

const char* fs_status_name(fs_status status) {
    switch (status) {
    case FS_OK: return "ok";
    case FS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FS_ERR_GRID_MISMATCH: return "grid mismatch";
    case FS_ERR_INVALID_KERNEL: return "invalid kernel";
    case FS_ERR_DOMAIN: return "domain error";
    case FS_ERR_SUBJECT_TOO_SPARSE: return "subject too sparse";
    case FS_ERR_ILL_CONDITIONED_BASIS: return "ill-conditioned basis";
    case FS_ERR_RANK_DEFICIENT: return "rank deficient design";
    case FS_ERR_INSUFFICIENT_SAMPLES: return "insufficient samples";
    case FS_ERR_SINGULAR_BLOCK: return "singular block";
    case FS_ERR_TOO_MANY_COMPONENTS: return "too many components";
    case FS_ERR_INVALID_WEIGHTS: return "invalid weights";
    case FS_ERR_UNSUPPORTED_SMOOTHNESS: return "unsupported smoothness";
    case FS_ERR_SINGULAR_COVARIANCE: return "numerically singular covariance";
    case FS_ERR_DEGENERATE_FACTOR: return "degenerate factor";
    case FS_ERR_PARSE: return "parse error";
    case FS_ERR_IO: return "I/O error";
    case FS_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

int fs_status_is_numerical(fs_status status) {
    switch (status) {
    case FS_ERR_ILL_CONDITIONED_BASIS:
    case FS_ERR_RANK_DEFICIENT:
    case FS_ERR_SINGULAR_BLOCK:
    case FS_ERR_SINGULAR_COVARIANCE:
    case FS_ERR_TOO_MANY_COMPONENTS:
        return 1;
    default:
        return 0;
    }
}

fs_status fs_curves_create(size_t n_subjects, size_t n_points, const double* grid, const double* values,
                           const char* const* ids, fs_curves** out) {
    return guarded([&] {
        require(out != nullptr && grid != nullptr && values != nullptr, "NULL argument");
        require(n_subjects > 0, "need at least one subject");
        TimeGrid g(std::vector<double>(grid, grid + n_points));
        Eigen::MatrixXd v(static_cast<Eigen::Index>(n_subjects), static_cast<Eigen::Index>(n_points));
        for (size_t i = 0; i < n_subjects; ++i)
            for (size_t j = 0; j < n_points; ++j)
                v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * n_points + j];
        require(v.allFinite(), "curve values must be finite");
        std::vector<std::string> labels;
        for (size_t i = 0; i < n_subjects; ++i)
            labels.push_back(ids && ids[i] ? std::string(ids[i]) : "S" + std::to_string(i + 1));
        *out = new fs_curves{std::move(labels), CurveSet(g, std::move(v))};
    });
}

fs_status fs_curves_read(const char* path, fs_curves** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "NULL argument");
        auto t = read_curves(path);
        *out = new fs_curves{std::move(t.subject_ids), std::move(t.curves)};
    });
}

fs_status fs_curves_write(const fs_curves* curves, const char* path) {
    return guarded([&] {
        require(curves != nullptr && path != nullptr, "NULL argument");
        write_curves(path, curves->ids, curves->curves);
    });
}

size_t fs_curves_count(const fs_curves* curves) { return curves ? curves->ids.size() : 0; }

size_t fs_curves_points(const fs_curves* curves) { return curves ? curves->curves.grid().size() : 0; }

fs_status fs_curves_grid(const fs_curves* curves, double* out) {
    return guarded([&] {
        require(curves != nullptr && out != nullptr, "NULL argument");
        const auto& p = curves->curves.grid().points();
        std::copy(p.data(), p.data() + p.size(), out);
    });
}

fs_status fs_curves_values(const fs_curves* curves, double* out) {
    return guarded([&] {
        require(curves != nullptr && out != nullptr, "NULL argument");
        const auto& v = curves->curves.values();
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            for (Eigen::Index j = 0; j < v.cols(); ++j)
                out[i * v.cols() + j] = v(i, j);
    });
}

const char* fs_curves_subject_id(const fs_curves* curves, size_t index) {
    if (!curves || index >= curves->ids.size())
        return nullptr;
    return curves->ids[index].c_str();
}

void fs_curves_free(fs_curves* curves) { delete curves; }

fs_smooth_options fs_smooth_options_default(void) {
    const SplineConfig cfg;
    return {cfg.basis_order, cfg.num_knots, cfg.penalty_order, cfg.refinement_passes, -1.0};
}

fs_status fs_smooth_file(const char* pheno_path, size_t grid_points, const fs_smooth_options* options,
                         fs_curves** out, fs_smooth_report* report) {
    return guarded([&] {
        require(pheno_path != nullptr && out != nullptr, "NULL argument");
        require(grid_points >= 2, "output grid needs at least two points");
        const fs_smooth_options opts = options ? *options : fs_smooth_options_default();
        SplineConfig cfg;
        cfg.basis_order = opts.basis_order;
        cfg.num_knots = opts.num_knots;
        cfg.penalty_order = opts.penalty_order;
        cfg.refinement_passes = opts.refinement_passes;
        if (opts.nugget >= 0.0)
            cfg.nugget_override = opts.nugget;
        auto records = read_long_format(pheno_path);
        const TimeMapping mapping = rescale_times(records);
        SmoothedSample s = smooth_subjects(records, cfg, TimeGrid::uniform(grid_points));
        if (report) {
            report->chosen_lambda = s.chosen_lambda;
            report->nugget = s.nugget;
            report->subjects_used = s.subject_ids.size();
            report->subjects_dropped = s.dropped.size();
            report->time_origin = mapping.origin;
            report->time_span = mapping.span;
        }
        *out = new fs_curves{std::move(s.subject_ids), std::move(s.curves)};
    });
}

fs_status fs_table_read(const char* path, fs_table** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "NULL argument");
        *out = new fs_table{CovariateTable::read(path)};
    });
}

void fs_table_free(fs_table* table) { delete table; }

fs_status fs_test(const fs_curves* curves, const fs_table* table, const char* const* test_columns, size_t n_test,
                  const char* const* adjust, size_t n_adjust, fs_method method, int components,
                  fs_test_result* out) {
    return guarded([&] {
        require(curves != nullptr && table != nullptr && out != nullptr, "NULL argument");
        require(n_test > 0, "no test columns given");
        const auto tests = names(test_columns, n_test);
        const auto adj = names(adjust, n_adjust);
        const Joined j = join(*curves, table->table);
        DesignMatrix x = covariate_design(table->table, j.table_rows, adj);
        const DesignMatrix t = covariate_design(table->table, j.table_rows, tests);
        for (Eigen::Index c = 1; c < t.cols(); ++c)
            x.add(t.names()[static_cast<std::size_t>(c)], t.matrix().col(c), ColumnRole::Test);

        Eigen::MatrixXd v(static_cast<Eigen::Index>(j.curve_rows.size()), curves->curves.values().cols());
        for (std::size_t i = 0; i < j.curve_rows.size(); ++i)
            v.row(static_cast<Eigen::Index>(i)) = curves->curves.values().row(j.curve_rows[i]);
        const CurveSet y(curves->curves.grid(), std::move(v));

        switch (method) {
        case FS_METHOD_L2: fill(out, lambda_test(y, x)); break;
        case FS_METHOD_PC: fill(out, pc_adaptive_test(y, x)); break;
        case FS_METHOD_PC_FIXED: fill(out, pc_test(y, x, components)); break;
        case FS_METHOD_WEIGHTED: fill(out, weighted_test(y, x, WeightRule::first(components))); break;
        default: fail(ErrorKind::InvalidArgument, "unknown test method");
        }
    });
}

fs_status fs_interaction(const fs_curves* curves, const fs_table* table, const char* snp_column,
                         const char* treatment, const char* const* adjust, size_t n_adjust, const char* bands_path,
                         fs_test_result* out) {
    return guarded([&] {
        require(curves && table && snp_column && treatment && out, "NULL argument");
        const auto& tab = table->table;
        Eigen::VectorXd snp(static_cast<Eigen::Index>(curves->ids.size()));
        const auto& raw = tab.raw(snp_column);
        for (std::size_t i = 0; i < curves->ids.size(); ++i) {
            const auto row = tab.row_of(curves->ids[i]);
            snp[static_cast<Eigen::Index>(i)] = row ? parse_number(raw[*row], std::string("column ") + snp_column)
                                                    : std::numeric_limits<double>::quiet_NaN();
        }
        const InteractionResult r =
            interaction_test(curves->curves, curves->ids, tab, snp, treatment, names(adjust, n_adjust));
        fill(out, r.test);
        if (bands_path == nullptr)
            return;
        std::FILE* f = std::fopen(bands_path, "w");
        if (!f)
            fail(ErrorKind::Io, std::string("cannot write ") + bands_path);
        std::fprintf(f, "term\ttime\testimate\tlower\tupper\n");
        for (std::size_t k = 0; k < r.terms.size(); ++k) {
            const auto& c = r.coefficients[k];
            for (std::size_t t = 0; t < c.size(); ++t)
                std::fprintf(f, "%s\t%.10g\t%.10g\t%.10g\t%.10g\n", r.terms[k].c_str(), c.grid().points()[t], c[t],
                             r.lower[k][t], r.upper[k][t]);
        }
        std::fclose(f);
    });
}

fs_status fs_pvalue(const double* weights, size_t n_weights, int df, double x, double* p, double* error) {
    return guarded([&] {
        require(weights != nullptr && p != nullptr, "NULL argument");
        Eigen::VectorXd w(static_cast<Eigen::Index>(n_weights));
        for (size_t i = 0; i < n_weights; ++i)
            w[static_cast<Eigen::Index>(i)] = weights[i];
        const auto s = imhof_survival(WeightedChiSq(w, df), x);
        *p = s.p;
        if (error)
            *error = s.error_bound;
    });
}

fs_scan_options fs_scan_options_default(void) {
    const ScanConfig cfg;
    return {cfg.maf_threshold, FS_MISSING_MEAN_IMPUTE, cfg.threads, 0, cfg.chunk_size, nullptr, 0};
}

fs_status fs_scan_files(const fs_curves* curves, const fs_table* table, const char* geno_path, const char* map_path,
                        const fs_scan_options* options, const char* out_path, const char* export_prefix, int svg,
                        fs_scan_summary* summary) {
    return guarded([&] {
        require(curves && geno_path && map_path && out_path, "NULL argument");
        const fs_scan_options opts = options ? *options : fs_scan_options_default();
        ScanConfig cfg;
        cfg.maf_threshold = opts.maf_threshold;
        cfg.missing = opts.missing == FS_MISSING_DROP_SUBJECT ? MissingPolicy::DropSubject : MissingPolicy::MeanImpute;
        cfg.threads = opts.threads;
        cfg.shared_null_spectrum = opts.shared_null_spectrum != 0;
        cfg.chunk_size = opts.chunk_size;
        cfg.adjust = names(opts.adjust, opts.n_adjust);

        const auto map = read_snp_map(map_path);
        GenotypeReader reader(geno_path);
        const ScanContext ctx(curves->curves, curves->ids, table ? &table->table : nullptr, reader.subject_ids(), cfg);

        std::FILE* f = std::fopen(out_path, "w");
        if (!f)
            fail(ErrorKind::Io, std::string("cannot write ") + out_path);
        std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(f, &std::fclose);
        std::fprintf(f, "%s\n", format_scan_header().c_str());

        fs_scan_summary s{};
        s.min_p = 1.0;
        std::vector<ScanRecord> kept;
        const bool keep = export_prefix != nullptr;
        run_scan(ctx, reader, map, [&](const ScanRecord& r) {
            std::fprintf(f, "%s\n", format_scan_record(r).c_str());
            ++s.snps;
            switch (r.status) {
            case ScanStatus::Ok:
                ++s.ok;
                if (r.p_value < s.min_p || s.best_snp[0] == '\0') {
                    s.min_p = r.p_value;
                    copy_id(s.best_snp, sizeof s.best_snp, r.snp_id);
                }
                break;
            case ScanStatus::SkippedMaf: ++s.skipped_maf; break;
            case ScanStatus::SkippedRank: ++s.skipped_rank; break;
            case ScanStatus::SkippedMissing: ++s.skipped_missing; break;
            }
            if (keep)
                kept.push_back(r);
        });
        if (std::ferror(f))
            fail(ErrorKind::Io, std::string("error while writing ") + out_path);
        if (keep && s.ok > 0)
            qq_manhattan_export(kept, export_prefix, svg != 0);
        s.subjects_used = ctx.join().used_subjects;
        s.missing_covariates = ctx.join().missing_covariates;
        s.missing_genotypes = ctx.join().missing_genotypes;
        if (summary)
            *summary = s;
    });
}

fs_panel_options fs_panel_options_default(void) {
    const PanelSpec spec;
    return {static_cast<size_t>(spec.subjects),
            spec.snps,
            spec.grid_points,
            spec.planted ? 1 : 0,
            spec.causal_index,
            spec.causal_maf,
            "normcdf",
            spec.beta_norm,
            spec.errors.variance,
            spec.treatment_levels,
            spec.interaction_norm,
            0,
            0.1,
            spec.seed};
}

fs_status fs_simulate_panel(const fs_panel_options* options, const char* dir, char* causal_id,
                            size_t causal_id_size) {
    return guarded([&] {
        require(options != nullptr && dir != nullptr, "NULL argument");
        const fs_panel_options& o = *options;
        PanelSpec spec;
        spec.subjects = static_cast<Eigen::Index>(o.subjects);
        spec.snps = o.snps;
        spec.grid_points = o.grid_points;
        spec.planted = o.planted != 0;
        spec.causal_index = o.causal_index;
        spec.causal_maf = o.causal_maf;
        spec.signal = parse_signal(o.signal ? o.signal : "normcdf");
        spec.beta_norm = o.beta_norm;
        spec.errors.variance = o.error_variance;
        spec.treatment_levels = o.treatment_levels;
        spec.interaction_norm = o.interaction_norm;
        spec.seed = o.seed;
        const SyntheticPanel panel = make_synthetic_panel(spec);
        write_panel(panel, dir);
        if (o.visits > 0)
            write_visits(panel, std::string(dir) + "/pheno.csv", o.visits, o.visit_noise_sd, o.seed);
        copy_id(causal_id, causal_id_size, panel.causal_snp);
    });
}

fs_power_options fs_power_options_default(void) {
    const PowerScenario sc;
    return {"normcdf", static_cast<size_t>(sc.n), sc.points_per_curve, sc.replicates, sc.alpha, sc.maf,
            sc.output_grid_points, sc.threads, sc.seed};
}

fs_status fs_power(const fs_power_options* options, fs_power_row rows[4]) {
    return guarded([&] {
        require(options != nullptr && rows != nullptr, "NULL argument");
        PowerScenario sc;
        sc.signal = parse_signal(options->signal ? options->signal : "normcdf");
        sc.n = static_cast<Eigen::Index>(options->subjects);
        sc.points_per_curve = options->points_per_curve;
        sc.replicates = options->replicates;
        sc.alpha = options->alpha;
        sc.maf = options->maf;
        sc.output_grid_points = options->output_grid_points;
        sc.threads = options->threads;
        sc.seed = options->seed;
        const auto result = run_power_study(sc);
        require(result.size() == 4, "power study returned an unexpected number of methods");
        for (std::size_t k = 0; k < 4; ++k) {
            copy_id(rows[k].method, sizeof rows[k].method, result[k].method);
            rows[k].power = result[k].power;
            rows[k].se = result[k].se;
            rows[k].replicates = result[k].replicates;
            rows[k].failures = result[k].failures;
        }
    });
}

}  // extern "C"
