#ifndef FUNCSCAN_FUNCSCAN_H
#define FUNCSCAN_FUNCSCAN_H

/*
 * C interface to the funcscan library: curve smoothing, functional
 * association tests, weighted chi-square tail probabilities, genome scans
 * and the simulation engine.
 *
 * Every call returns an fs_status. On failure a description is available from
 * fs_last_error() on the same thread until the next failing call.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(FUNCSCAN_BUILDING)
#define FS_API __attribute__((visibility("default")))
#else
#define FS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fs_status {
    FS_OK = 0,
    FS_ERR_INVALID_ARGUMENT = 1,
    FS_ERR_GRID_MISMATCH = 2,
    FS_ERR_INVALID_KERNEL = 3,
    FS_ERR_DOMAIN = 4,
    FS_ERR_SUBJECT_TOO_SPARSE = 5,
    FS_ERR_ILL_CONDITIONED_BASIS = 6,
    FS_ERR_RANK_DEFICIENT = 7,
    FS_ERR_INSUFFICIENT_SAMPLES = 8,
    FS_ERR_SINGULAR_BLOCK = 9,
    FS_ERR_TOO_MANY_COMPONENTS = 10,
    FS_ERR_INVALID_WEIGHTS = 11,
    FS_ERR_UNSUPPORTED_SMOOTHNESS = 12,
    FS_ERR_SINGULAR_COVARIANCE = 13,
    FS_ERR_DEGENERATE_FACTOR = 14,
    FS_ERR_PARSE = 15,
    FS_ERR_IO = 16,
    FS_ERR_INTERNAL = 99
} fs_status;

FS_API const char* fs_version(void);
FS_API const char* fs_last_error(void);
FS_API const char* fs_status_name(fs_status status);

/* Nonzero when the status reports a numerical failure rather than bad input. */
FS_API int fs_status_is_numerical(fs_status status);

/* ------------------------------------------------------------------------ */
/* Curves: one row of values per subject on a shared grid in [0,1].          */

typedef struct fs_curves fs_curves;

/* `values` is row-major, n_subjects x n_points. `ids` may be NULL. */
FS_API fs_status fs_curves_create(size_t n_subjects, size_t n_points, const double* grid, const double* values,
                                  const char* const* ids, fs_curves** out);
FS_API fs_status fs_curves_read(const char* path, fs_curves** out);
FS_API fs_status fs_curves_write(const fs_curves* curves, const char* path);
FS_API size_t fs_curves_count(const fs_curves* curves);
FS_API size_t fs_curves_points(const fs_curves* curves);
FS_API fs_status fs_curves_grid(const fs_curves* curves, double* out);
FS_API fs_status fs_curves_values(const fs_curves* curves, double* out);
FS_API const char* fs_curves_subject_id(const fs_curves* curves, size_t index);
FS_API void fs_curves_free(fs_curves* curves);

/* ------------------------------------------------------------------------ */
/* Smoothing of long-format visits (subject_id, time, value).                */

typedef struct fs_smooth_options {
    int basis_order;       /* 4 = cubic */
    int num_knots;         /* interior knots; 0 picks automatically */
    int penalty_order;
    int refinement_passes;
    double nugget;         /* < 0 estimates the measurement-error variance */
} fs_smooth_options;

typedef struct fs_smooth_report {
    double chosen_lambda;
    double nugget;
    size_t subjects_used;
    size_t subjects_dropped;
    double time_origin;    /* study time mapped to 0 */
    double time_span;      /* study-time length mapped to 1 */
} fs_smooth_report;

FS_API fs_smooth_options fs_smooth_options_default(void);

/* Rescales visit times to [0,1] and evaluates the smoothed curves on
 * `grid_points` equally spaced points. `report` may be NULL. */
FS_API fs_status fs_smooth_file(const char* pheno_path, size_t grid_points, const fs_smooth_options* options,
                                fs_curves** out, fs_smooth_report* report);

/* ------------------------------------------------------------------------ */
/* Covariate tables: first column subject_id, then named columns.            */

typedef struct fs_table fs_table;

FS_API fs_status fs_table_read(const char* path, fs_table** out);
FS_API void fs_table_free(fs_table* table);

/* ------------------------------------------------------------------------ */
/* Association tests.                                                        */

typedef enum fs_method {
    FS_METHOD_L2 = 0,       /* reduction in integrated residual sum of squares */
    FS_METHOD_PC = 1,       /* MANOVA on leading components, max p over 3, 4, 5 */
    FS_METHOD_PC_FIXED = 2, /* MANOVA on a fixed number of components */
    FS_METHOD_WEIGHTED = 3  /* indicator weights on the leading components */
} fs_method;

typedef struct fs_test_result {
    double statistic;
    double p_value;
    double p_error;
    int df_per_term;
    int truncation;
    double wilks;          /* NaN unless a MANOVA method was used */
} fs_test_result;

/* Tests the named columns of `table` while adjusting for `adjust`.
 * Categorical columns are dummy coded against their first sorted level.
 * `components` is used by FS_METHOD_PC_FIXED and FS_METHOD_WEIGHTED. */
FS_API fs_status fs_test(const fs_curves* curves, const fs_table* table, const char* const* test_columns,
                         size_t n_test, const char* const* adjust, size_t n_adjust, fs_method method, int components,
                         fs_test_result* out);

/* SNP x treatment interaction. When `bands_path` is non-NULL the interaction
 * coefficient curves and their +-2 SE bands are written there. */
FS_API fs_status fs_interaction(const fs_curves* curves, const fs_table* table, const char* snp_column,
                                const char* treatment, const char* const* adjust, size_t n_adjust,
                                const char* bands_path, fs_test_result* out);

/* P(sum_i w_i chi2_i(df) > x). `error` may be NULL. */
FS_API fs_status fs_pvalue(const double* weights, size_t n_weights, int df, double x, double* p, double* error);

/* ------------------------------------------------------------------------ */
/* Genome scan.                                                              */

typedef enum fs_missing_policy { FS_MISSING_MEAN_IMPUTE = 0, FS_MISSING_DROP_SUBJECT = 1 } fs_missing_policy;

typedef struct fs_scan_options {
    double maf_threshold;
    fs_missing_policy missing;
    int threads;                 /* 0 = all available */
    int shared_null_spectrum;
    size_t chunk_size;
    const char* const* adjust;
    size_t n_adjust;
} fs_scan_options;

typedef struct fs_scan_summary {
    size_t snps;
    size_t ok;
    size_t skipped_maf;
    size_t skipped_rank;
    size_t skipped_missing;
    size_t subjects_used;
    size_t missing_covariates;
    size_t missing_genotypes;
    double min_p;
    char best_snp[64];
} fs_scan_summary;

FS_API fs_scan_options fs_scan_options_default(void);

/* Scans every SNP of the dosage file and writes one result line per SNP to
 * `out_path` in file order. `table` may be NULL when nothing is adjusted.
 * With `export_prefix` set, Manhattan and QQ tables are written as well
 * (and SVG renderings when `svg` is nonzero). `summary` may be NULL. */
FS_API fs_status fs_scan_files(const fs_curves* curves, const fs_table* table, const char* geno_path,
                               const char* map_path, const fs_scan_options* options, const char* out_path,
                               const char* export_prefix, int svg, fs_scan_summary* summary);

/* ------------------------------------------------------------------------ */
/* Simulation.                                                               */

typedef struct fs_panel_options {
    size_t subjects;
    size_t snps;
    size_t grid_points;
    int planted;
    size_t causal_index;
    double causal_maf;
    const char* signal;          /* "null", "linear", "normcdf", "sinusoid" */
    double beta_norm;
    double error_variance;
    int treatment_levels;
    double interaction_norm;
    int visits;                  /* > 0 also writes pheno.csv with this many visits per subject */
    double visit_noise_sd;
    uint64_t seed;
} fs_panel_options;

FS_API fs_panel_options fs_panel_options_default(void);

/* Writes curves.tsv, covar.csv, geno.tsv, snps.tsv (and pheno.csv) into `dir`.
 * The planted SNP id is copied to `causal_id` when it is non-NULL. */
FS_API fs_status fs_simulate_panel(const fs_panel_options* options, const char* dir, char* causal_id,
                                   size_t causal_id_size);

typedef struct fs_power_options {
    const char* signal;
    size_t subjects;
    int points_per_curve;
    size_t replicates;
    double alpha;
    double maf;
    size_t output_grid_points;
    int threads;
    uint64_t seed;
} fs_power_options;

typedef struct fs_power_row {
    char method[8];
    double power;
    double se;
    size_t replicates;
    size_t failures;
} fs_power_row;

FS_API fs_power_options fs_power_options_default(void);

/* Fills four rows in the order L2, PC, PC5, MV. */
FS_API fs_status fs_power(const fs_power_options* options, fs_power_row rows[4]);

#ifdef __cplusplus
}
#endif

#endif
