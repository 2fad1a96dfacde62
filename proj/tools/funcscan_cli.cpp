#include "funcscan/funcscan.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNumerical = 3;

int report(fs_status s) {
    if (s == FS_OK)
        return 0;
    std::fprintf(stderr, "funcscan: %s: %s\n", fs_status_name(s), fs_last_error());
    return fs_status_is_numerical(s) ? kNumerical : kData;
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
    std::vector<const char*> out;
    for (const auto& s : v)
        out.push_back(s.c_str());
    return out;
}

struct Curves {
    fs_curves* ptr = nullptr;
    ~Curves() { fs_curves_free(ptr); }
};

struct Table {
    fs_table* ptr = nullptr;
    ~Table() { fs_table_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Functional association testing for longitudinal phenotypes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", fs_version());

    // smooth
    auto* smooth = app.add_subcommand("smooth", "Smooth sparse visits into curves on a common grid");
    std::string pheno, smooth_out;
    std::size_t grid = 50;
    fs_smooth_options sopt = fs_smooth_options_default();
    smooth->add_option("--pheno", pheno, "Long-format CSV: subject_id,time,value")->required();
    smooth->add_option("--grid", grid, "Number of output grid points")->check(CLI::Range(2, 100000));
    smooth->add_option("--out", smooth_out, "Output curves TSV")->required();
    smooth->add_option("--knots", sopt.num_knots, "Interior knots (0 = automatic)")->check(CLI::NonNegativeNumber);
    smooth->add_option("--order", sopt.basis_order, "B-spline order")->check(CLI::Range(2, 6));
    smooth->add_option("--passes", sopt.refinement_passes, "Kriging refinement passes")->check(CLI::Range(0, 20));
    smooth->add_option("--nugget", sopt.nugget, "Fixed measurement-error variance (negative = estimate)");

    // scan
    auto* scan = app.add_subcommand("scan", "Test every SNP of a dosage matrix against the curves");
    std::string curves_path, covar_path, geno_path, map_path, scan_out, export_prefix, missing = "mean_impute";
    std::vector<std::string> adjust;
    fs_scan_options scan_opt = fs_scan_options_default();
    bool shared = false, svg = false;
    scan->add_option("--curves", curves_path, "Curves TSV")->required();
    scan->add_option("--covar", covar_path, "Covariate table");
    scan->add_option("--geno", geno_path, "Dosage matrix, rows = SNPs")->required();
    scan->add_option("--map", map_path, "SNP map: snp_id, chromosome, position")->required();
    scan->add_option("--maf", scan_opt.maf_threshold, "Minor allele frequency threshold")->check(CLI::Range(0.0, 0.5));
    scan->add_option("--adjust", adjust, "Adjusting covariates")->delimiter(',');
    scan->add_option("--threads", scan_opt.threads, "Worker threads (0 = all)")->check(CLI::NonNegativeNumber);
    scan->add_option("--missing", missing, "Missing genotypes")->check(CLI::IsMember({"mean_impute", "drop_subject"}));
    scan->add_flag("--shared-null", shared, "Reuse the covariates-only spectrum for every SNP");
    scan->add_option("--out", scan_out, "Results TSV")->required();
    scan->add_option("--export", export_prefix, "Prefix for Manhattan and QQ tables");
    scan->add_flag("--svg", svg, "Also render the Manhattan and QQ plots");

    // test
    auto* test = app.add_subcommand("test", "Test covariate columns, or a SNP x treatment interaction");
    std::string t_curves, t_covar, interaction, bands, method = "l2";
    std::vector<std::string> t_columns, t_adjust;
    int components = 5;
    test->add_option("--curves", t_curves, "Curves TSV")->required();
    test->add_option("--covar", t_covar, "Covariate table")->required();
    test->add_option("--test", t_columns, "Columns to test")->delimiter(',')->required();
    test->add_option("--adjust", t_adjust, "Adjusting covariates")->delimiter(',');
    test->add_option("--method", method, "l2, pc, pc5 or weighted")->check(CLI::IsMember({"l2", "pc", "pc5", "weighted"}));
    test->add_option("--components", components, "Components for pc5 / weighted")->check(CLI::PositiveNumber);
    test->add_option("--interaction", interaction, "Treatment factor; tests SNP x treatment for the single --test column");
    test->add_option("--bands", bands, "Write interaction curves with +-2 SE bands here");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Write a synthetic panel");
    fs_panel_options popt = fs_panel_options_default();
    std::string sim_dir, sim_signal = "normcdf";
    bool no_plant = false;
    sim->add_option("--out", sim_dir, "Output directory")->required();
    sim->add_option("--subjects", popt.subjects)->check(CLI::Range(10, 10000000));
    sim->add_option("--snps", popt.snps)->check(CLI::PositiveNumber);
    sim->add_option("--grid", popt.grid_points)->check(CLI::Range(2, 100000));
    sim->add_option("--causal-index", popt.causal_index);
    sim->add_option("--causal-maf", popt.causal_maf)->check(CLI::Range(0.0, 0.5));
    sim->add_option("--signal", sim_signal)->check(CLI::IsMember({"null", "linear", "normcdf", "sinusoid"}));
    sim->add_option("--beta-norm", popt.beta_norm);
    sim->add_option("--error-variance", popt.error_variance)->check(CLI::PositiveNumber);
    sim->add_option("--treatments", popt.treatment_levels)->check(CLI::Range(1, 26));
    sim->add_option("--interaction-norm", popt.interaction_norm);
    sim->add_option("--visits", popt.visits, "Also write pheno.csv with this many visits per subject")
        ->check(CLI::NonNegativeNumber);
    sim->add_option("--visit-noise", popt.visit_noise_sd)->check(CLI::NonNegativeNumber);
    sim->add_flag("--no-plant", no_plant, "Leave every SNP null");
    sim->add_option("--seed", popt.seed);

    // power
    auto* power = app.add_subcommand("power", "Monte Carlo power of L2, PC, PC5 and MV");
    fs_power_options wopt = fs_power_options_default();
    std::string power_signal = "normcdf";
    power->add_option("--signal", power_signal)->check(CLI::IsMember({"null", "linear", "normcdf", "sinusoid"}));
    power->add_option("--subjects", wopt.subjects)->check(CLI::Range(10, 10000000));
    power->add_option("--points", wopt.points_per_curve, "Observed points per curve")->check(CLI::Range(2, 1000));
    power->add_option("--replicates", wopt.replicates)->check(CLI::PositiveNumber);
    power->add_option("--alpha", wopt.alpha)->check(CLI::Range(0.0, 1.0));
    power->add_option("--maf", wopt.maf)->check(CLI::Range(0.0, 0.5));
    power->add_option("--threads", wopt.threads)->check(CLI::NonNegativeNumber);
    power->add_option("--seed", wopt.seed);

    // pvalue
    auto* pv = app.add_subcommand("pvalue", "Tail probability of a weighted chi-square sum");
    std::vector<double> weights;
    int df = 1;
    double x = 0.0;
    pv->add_option("--weights", weights, "Comma-separated weights")->delimiter(',')->required();
    pv->add_option("--df", df, "Degrees of freedom per term")->check(CLI::PositiveNumber);
    pv->add_option("--x", x, "Observed statistic")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    if (*smooth) {
        Curves c;
        fs_smooth_report rep{};
        if (const int rc = report(fs_smooth_file(pheno.c_str(), grid, &sopt, &c.ptr, &rep)))
            return rc;
        if (const int rc = report(fs_curves_write(c.ptr, smooth_out.c_str())))
            return rc;
        std::fprintf(stderr, "smoothed %zu subjects (%zu dropped), lambda=%.3g nugget=%.4g, time [%.6g, %.6g]\n",
                     rep.subjects_used, rep.subjects_dropped, rep.chosen_lambda, rep.nugget, rep.time_origin,
                     rep.time_origin + rep.time_span);
        return 0;
    }

    if (*scan) {
        Curves c;
        Table t;
        if (const int rc = report(fs_curves_read(curves_path.c_str(), &c.ptr)))
            return rc;
        if (!covar_path.empty())
            if (const int rc = report(fs_table_read(covar_path.c_str(), &t.ptr)))
                return rc;
        const auto adj = c_strings(adjust);
        scan_opt.adjust = adj.data();
        scan_opt.n_adjust = adj.size();
        scan_opt.shared_null_spectrum = shared ? 1 : 0;
        scan_opt.missing = missing == "drop_subject" ? FS_MISSING_DROP_SUBJECT : FS_MISSING_MEAN_IMPUTE;
        fs_scan_summary sum{};
        if (const int rc = report(fs_scan_files(c.ptr, t.ptr, geno_path.c_str(), map_path.c_str(), &scan_opt,
                                                scan_out.c_str(), export_prefix.empty() ? nullptr : export_prefix.c_str(),
                                                svg ? 1 : 0, &sum)))
            return rc;
        std::fprintf(stderr,
                     "subjects used %zu (missing covariates %zu, missing genotypes %zu); SNPs %zu: ok %zu, "
                     "skipped_maf %zu, skipped_rank %zu, skipped_missing %zu\n",
                     sum.subjects_used, sum.missing_covariates, sum.missing_genotypes, sum.snps, sum.ok,
                     sum.skipped_maf, sum.skipped_rank, sum.skipped_missing);
        if (sum.ok > 0)
            std::fprintf(stderr, "smallest p-value %.4e at %s\n", sum.min_p, sum.best_snp);
        return 0;
    }

    if (*test) {
        Curves c;
        Table t;
        if (const int rc = report(fs_curves_read(t_curves.c_str(), &c.ptr)))
            return rc;
        if (const int rc = report(fs_table_read(t_covar.c_str(), &t.ptr)))
            return rc;
        const auto adj = c_strings(t_adjust);
        fs_test_result r{};
        if (!interaction.empty()) {
            if (t_columns.size() != 1) {
                std::fprintf(stderr, "funcscan: --interaction needs exactly one --test column (the SNP)\n");
                return kUsage;
            }
            if (const int rc = report(fs_interaction(c.ptr, t.ptr, t_columns[0].c_str(), interaction.c_str(),
                                                     adj.data(), adj.size(), bands.empty() ? nullptr : bands.c_str(),
                                                     &r)))
                return rc;
        } else {
            const auto cols = c_strings(t_columns);
            const fs_method m = method == "pc" ? FS_METHOD_PC
                                : method == "pc5" ? FS_METHOD_PC_FIXED
                                : method == "weighted" ? FS_METHOD_WEIGHTED
                                                       : FS_METHOD_L2;
            if (const int rc = report(fs_test(c.ptr, t.ptr, cols.data(), cols.size(), adj.data(), adj.size(), m,
                                              components, &r)))
                return rc;
        }
        std::printf("statistic\t%.10g\np_value\t%.6e\ndf_per_term\t%d\ntruncation\t%d\n", r.statistic, r.p_value,
                    r.df_per_term, r.truncation);
        if (!std::isnan(r.wilks))
            std::printf("wilks\t%.10g\n", r.wilks);
        return 0;
    }

    if (*sim) {
        popt.signal = sim_signal.c_str();
        popt.planted = no_plant ? 0 : 1;
        char causal[64] = {0};
        if (const int rc = report(fs_simulate_panel(&popt, sim_dir.c_str(), causal, sizeof causal)))
            return rc;
        if (causal[0])
            std::printf("causal_snp\t%s\n", causal);
        return 0;
    }

    if (*power) {
        wopt.signal = power_signal.c_str();
        fs_power_row rows[4];
        if (const int rc = report(fs_power(&wopt, rows)))
            return rc;
        std::printf("method\tpoints\tsignal\tpower\tse\treplicates\tfailures\tseed\n");
        for (const auto& r : rows)
            std::printf("%s\t%d\t%s\t%.4f\t%.4f\t%zu\t%zu\t%llu\n", r.method, wopt.points_per_curve,
                        power_signal.c_str(), r.power, r.se, r.replicates, r.failures,
                        static_cast<unsigned long long>(wopt.seed));
        return 0;
    }

    if (*pv) {
        double p = 0.0, err = 0.0;
        if (const int rc = report(fs_pvalue(weights.data(), weights.size(), df, x, &p, &err)))
            return rc;
        std::printf("p_value\t%.10e\nerror_bound\t%.3e\n", p, err);
        return 0;
    }
    return kUsage;
}
