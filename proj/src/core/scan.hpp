#pragma once

// Genome scan: per-SNP functional association tests against a shared,
// covariate-adjusted phenotype structure, plus interaction follow-up and
// Manhattan / QQ export.

#include "assoc.hpp"
#include "simgen.hpp"
#include "table.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace funcscan {

enum class MissingPolicy { MeanImpute, DropSubject };
enum class ScanStatus { Ok, SkippedMaf, SkippedRank, SkippedMissing };

const char* to_string(ScanStatus s);
MissingPolicy parse_missing_policy(const std::string& name);

struct ScanConfig {
    double maf_threshold = 0.05;
    MissingPolicy missing = MissingPolicy::MeanImpute;
    std::vector<std::string> adjust;   // covariate columns; categorical ones are dummy coded
    int threads = 0;                   // 0 = OpenMP default
    bool shared_null_spectrum = false; // reuse the covariates-only spectrum for every SNP
    std::size_t chunk_size = 4096;
    TestOptions test{};
};

struct ScanRecord {
    std::string snp_id;
    std::string chromosome;
    std::int64_t position = 0;
    double maf = 0.0;
    Eigen::Index n_used = 0;
    double lambda = 0.0;
    double p_value = 1.0;
    Eigen::Index truncation_I = 0;
    ScanStatus status = ScanStatus::Ok;
};

/// In-memory dosage matrix, rows = SNPs, columns = subjects; NaN marks a missing call.
struct GenotypeTable {
    std::vector<std::string> subject_ids;
    std::vector<SnpInfo> snps;
    Eigen::MatrixXd dosages;

    Eigen::Index snp_count() const { return dosages.rows(); }
    double missing_fraction(Eigen::Index snp) const;
};

/// Loads a whole dosage file together with its SNP map.
GenotypeTable read_genotypes(const std::string& dosage_path, const std::string& map_path);

/// Intercept plus the named covariates for the given table rows. Numeric
/// columns enter as-is; others are dummy coded against their first sorted
/// level. Columns constant over the rows are rejected with DegenerateFactor.
DesignMatrix covariate_design(const CovariateTable& table, const std::vector<std::size_t>& rows,
                              const std::vector<std::string>& names);

struct JoinSummary {
    std::size_t phenotype_subjects = 0;
    std::size_t used_subjects = 0;
    std::size_t missing_covariates = 0;
    std::size_t missing_genotypes = 0;
};

/// Immutable per-scan state: the joined subjects, the covariates-only fit and
/// its residual cross-products. Shared read-only by all workers.
class ScanContext {
public:
    /// Joins curve subjects with covariate and genotype subjects, keeping the
    /// curve order. Throws InvalidArgument when no subject survives the join.
    ScanContext(const CurveSet& curves, const std::vector<std::string>& curve_ids, const CovariateTable* covariates,
                const std::vector<std::string>& genotype_subjects, ScanConfig cfg);

    const JoinSummary& join() const { return join_; }
    const ScanConfig& config() const { return cfg_; }
    const CurveSet& curves() const { return curves_; }
    const DesignMatrix& null_design() const { return null_; }

    /// Tests one SNP given its dosages in genotype-file column order.
    ScanRecord test(const SnpInfo& snp, const double* dosages) const;

    /// Reference path: the same test through the generic model fit.
    ScanRecord test_direct(const SnpInfo& snp, const double* dosages) const;

private:
    ScanRecord finish(ScanRecord r, double lambda, const Eigen::MatrixXd& resid_sscp, Eigen::Index divisor) const;

    ScanConfig cfg_;
    JoinSummary join_;
    CurveSet curves_;                       // joined subjects only
    std::vector<std::size_t> geno_columns_; // genotype column per joined subject
    DesignMatrix null_;
    Eigen::MatrixXd null_matrix_;
    Eigen::LLT<Eigen::MatrixXd> null_llt_;
    Eigen::MatrixXd null_xtx_;
    Eigen::MatrixXd null_resid_;
    Eigen::MatrixXd null_sscp_;
    Eigen::VectorXd shared_weights_;
};

/// Runs every SNP of the table; records come back in table order.
std::vector<ScanRecord> run_scan(const ScanContext& ctx, const GenotypeTable& genotypes);

/// Streams a dosage file chunk by chunk, handing records to `sink` in file order.
/// Every SNP must appear in `map`.
void run_scan(const ScanContext& ctx, GenotypeReader& reader,
              const std::unordered_map<std::string, SnpInfo>& map,
              const std::function<void(const ScanRecord&)>& sink);

/// Tab-separated result line; NA marks statistics of skipped SNPs.
std::string format_scan_header();
std::string format_scan_record(const ScanRecord& r);

struct InteractionResult {
    AssociationResult test;
    std::vector<std::string> terms;   // one per non-baseline treatment level
    std::string baseline;
    std::vector<Curve> coefficients;
    std::vector<Curve> lower;         // coefficient - 2 SE
    std::vector<Curve> upper;         // coefficient + 2 SE
};

/// SNP x treatment test. The design holds the adjust covariates, treatment
/// dummies and the SNP main effect; the test block is the SNP times each
/// non-baseline dummy. Throws DegenerateFactor for a single-level treatment.
InteractionResult interaction_test(const CurveSet& curves, const std::vector<std::string>& curve_ids,
                                   const CovariateTable& covariates, const Eigen::VectorXd& snp,
                                   const std::string& treatment, const std::vector<std::string>& adjust,
                                   const TestOptions& opts = {});

struct QqPoint {
    double expected = 0.0;   // -log10(i / (n + 1))
    double observed = 0.0;   // -log10 p_(i)
};

/// Sorted from the largest p-value (smallest expected) upwards.
std::vector<QqPoint> qq_points(std::vector<double> pvalues);

struct ExportPaths {
    std::string manhattan;
    std::string qq;
    std::string manhattan_svg;
    std::string qq_svg;
};

/// Writes `<prefix>.manhattan.tsv` and `<prefix>.qq.tsv` from the records with
/// status ok, and SVG renderings of both when `svg` is set.
ExportPaths qq_manhattan_export(const std::vector<ScanRecord>& records, const std::string& prefix, bool svg = false);

// ---------------------------------------------------------------------------
// Synthetic panels.

struct PanelSpec {
    Eigen::Index subjects = 540;
    std::size_t snps = 10000;
    std::size_t grid_points = 50;
    bool planted = true;
    std::size_t causal_index = 4999;
    double causal_maf = 0.4;
    SignalKind signal = SignalKind::NormCdf;
    double beta_norm = 0.18;
    double min_maf = 0.02;   // null SNP MAFs are uniform on [min_maf, 0.5]
    MaternSpec errors{0.0, 0.25, 0.0, 0.25, 2.5};
    int treatment_levels = 3;
    double interaction_norm = 0.0;   // extra effect of the causal SNP in the last treatment arm
    std::uint64_t seed = 1;
};

struct SyntheticPanel {
    std::vector<std::string> subject_ids;
    CurveSet curves;
    CovariateTable covariates;   // age, gender, treatment
    GenotypeTable genotypes;
    std::string causal_snp;      // empty when nothing was planted
};

SyntheticPanel make_synthetic_panel(const PanelSpec& spec);

/// Writes curves.tsv, covar.csv, geno.tsv and snps.tsv into `dir`.
void write_panel(const SyntheticPanel& panel, const std::string& dir);

/// Long-format visits drawn from the panel curves: `visits` distinct grid
/// points per subject, each value perturbed by N(0, noise_sd^2).
void write_visits(const SyntheticPanel& panel, const std::string& path, int visits, double noise_sd,
                  std::uint64_t seed);

}  // namespace funcscan
