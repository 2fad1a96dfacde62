#include "scan.hpp"

#include "helpers.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

using namespace funcscan;
using testutil::error_kind_of;

namespace {

PanelSpec small_panel(std::uint64_t seed, std::size_t snps = 200) {
    PanelSpec spec;
    spec.subjects = 300;
    spec.snps = snps;
    spec.grid_points = 20;
    spec.causal_index = snps / 2;
    spec.seed = seed;
    return spec;
}

std::string scan_text(const std::vector<ScanRecord>& records) {
    std::string out = format_scan_header() + "\n";
    for (const auto& r : records)
        out += format_scan_record(r) + "\n";
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("scan") {

TEST_CASE("fast path agrees with the generic model fit") {
    const SyntheticPanel p = make_synthetic_panel(small_panel(3, 40));
    ScanConfig cfg;
    cfg.adjust = {"age", "gender"};
    const ScanContext ctx(p.curves, p.subject_ids, &p.covariates, p.genotypes.subject_ids, cfg);
    for (Eigen::Index s = 0; s < p.genotypes.snp_count(); ++s) {
        const Eigen::VectorXd row = p.genotypes.dosages.row(s).transpose();
        const SnpInfo& info = p.genotypes.snps[static_cast<std::size_t>(s)];
        const ScanRecord fast = ctx.test(info, row.data());
        const ScanRecord slow = ctx.test_direct(info, row.data());
        REQUIRE(fast.status == slow.status);
        if (fast.status != ScanStatus::Ok)
            continue;
        CHECK(testutil::rel_diff(fast.lambda, slow.lambda) < 1e-8);
        CHECK(std::abs(fast.p_value - slow.p_value) <= 1e-8 * std::max(1e-300, slow.p_value) + 1e-14);
        CHECK(fast.truncation_I == slow.truncation_I);

        // Independent route: the association test on an explicit design.
        DesignMatrix x = ctx.null_design();
        x.add("snp", row, ColumnRole::Test);
        const AssociationResult ref = lambda_test(ctx.curves(), x);
        CHECK(testutil::rel_diff(fast.lambda, ref.statistic) < 1e-8);
    }
}

TEST_CASE("the planted SNP is the top hit") {
    const SyntheticPanel p = make_synthetic_panel(small_panel(5));
    const ScanContext ctx(p.curves, p.subject_ids, &p.covariates, p.genotypes.subject_ids, ScanConfig{});
    const auto records = run_scan(ctx, p.genotypes);
    std::size_t best = 0;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].status == ScanStatus::Ok && records[i].p_value < records[best].p_value)
            best = i;
    CHECK(records[best].snp_id == p.causal_snp);
    CHECK(records[best].p_value < 0.05 / 200.0);
}

TEST_CASE("skip statuses") {
    const SyntheticPanel p = make_synthetic_panel(small_panel(7, 2));
    const Eigen::Index n = p.curves.count();
    ScanConfig cfg;
    cfg.adjust = {"age"};
    const ScanContext ctx(p.curves, p.subject_ids, &p.covariates, p.genotypes.subject_ids, cfg);
    const SnpInfo info{"x", "1", 1};

    // 24 heterozygotes among 300 subjects: MAF 0.04.
    std::vector<double> rare(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < 24; ++i)
        rare[static_cast<std::size_t>(i)] = 1.0;
    const ScanRecord r = ctx.test(info, rare.data());
    CHECK(r.status == ScanStatus::SkippedMaf);
    CHECK(r.maf == doctest::Approx(0.04));
    CHECK(std::isnan(r.p_value));

    ScanConfig open = cfg;
    open.maf_threshold = 0.0;
    const ScanContext ctx0(p.curves, p.subject_ids, &p.covariates, p.genotypes.subject_ids, open);
    const std::vector<double> mono(static_cast<std::size_t>(n), 0.0);
    CHECK(ctx0.test(info, mono.data()).status == ScanStatus::SkippedRank);

    // Dosage that is an affine function of age.
    const Eigen::VectorXd age = p.covariates.numeric("age", [&] {
        std::vector<std::size_t> rows(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < rows.size(); ++i)
            rows[i] = i;
        return rows;
    }());
    std::vector<double> collinear(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        collinear[static_cast<std::size_t>(i)] = 2.0 * (age[i] - 5.0) / 7.0;
    CHECK(ctx0.test(info, collinear.data()).status == ScanStatus::SkippedRank);

    const std::vector<double> missing(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
    CHECK(ctx.test(info, missing.data()).status == ScanStatus::SkippedMissing);

    const std::string line = format_scan_record(r);
    CHECK(line.find("skipped_maf") != std::string::npos);
    CHECK(line.find("NA") != std::string::npos);
}

TEST_CASE("missing genotypes: mean imputation keeps N, dropping matches a subset fit") {
    const SyntheticPanel p = make_synthetic_panel(small_panel(9, 3));
    const Eigen::Index n = p.curves.count();
    Eigen::VectorXd g = p.genotypes.dosages.row(1).transpose();
    for (Eigen::Index i = 0; i < n; i += 10)
        g[i] = std::numeric_limits<double>::quiet_NaN();
    const SnpInfo info{"m", "1", 1};

    const ScanContext impute(p.curves, p.subject_ids, nullptr, p.genotypes.subject_ids, ScanConfig{});
    CHECK(impute.test(info, g.data()).n_used == n);

    ScanConfig cfg;
    cfg.missing = MissingPolicy::DropSubject;
    const ScanContext drop(p.curves, p.subject_ids, nullptr, p.genotypes.subject_ids, cfg);
    const ScanRecord r = drop.test(info, g.data());
    CHECK(r.n_used == n - 30);

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isnan(g[i]))
            keep.push_back(i);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(keep.size()), p.curves.values().cols());
    Eigen::VectorXd gk(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        y.row(static_cast<Eigen::Index>(k)) = p.curves.values().row(keep[k]);
        gk[static_cast<Eigen::Index>(k)] = g[keep[k]];
    }
    DesignMatrix x(gk.size());
    x.add("snp", gk, ColumnRole::Test);
    CHECK(testutil::rel_diff(r.lambda, lambda_test(CurveSet(p.curves.grid(), y), x).statistic) < 1e-8);
}

TEST_CASE("join keeps curve order and counts the losses") {
    const SyntheticPanel p = make_synthetic_panel(small_panel(2, 5));
    std::vector<std::string> geno_ids = p.genotypes.subject_ids;
    geno_ids.erase(geno_ids.begin() + 3);
    geno_ids[0] = "unknown";
    const ScanContext ctx(p.curves, p.subject_ids, &p.covariates, geno_ids, ScanConfig{});
    CHECK(ctx.join().phenotype_subjects == 300);
    CHECK(ctx.join().missing_genotypes == 2);
    CHECK(ctx.join().used_subjects == 298);
    CHECK(ctx.curves().values().row(0) == p.curves.values().row(1));
}

TEST_CASE("results do not depend on the thread count") {
    const SyntheticPanel p = make_synthetic_panel(small_panel(11, 300));
    ScanConfig cfg;
    cfg.adjust = {"age", "gender", "treatment"};
    cfg.chunk_size = 37;
    cfg.threads = 1;
    const ScanContext one(p.curves, p.subject_ids, &p.covariates, p.genotypes.subject_ids, cfg);
    cfg.threads = 4;
    const ScanContext four(p.curves, p.subject_ids, &p.covariates, p.genotypes.subject_ids, cfg);
    CHECK(scan_text(run_scan(one, p.genotypes)) == scan_text(run_scan(four, p.genotypes)));
}

TEST_CASE("streaming from files matches the in-memory scan") {
    const SyntheticPanel p = make_synthetic_panel(small_panel(13, 120));
    testutil::TempDir dir("stream");
    write_panel(p, dir.str());
    const CurveTable ct = read_curves(dir.file("curves.tsv"));
    const CovariateTable cov = CovariateTable::read(dir.file("covar.csv"));
    ScanConfig cfg;
    cfg.adjust = {"age", "treatment"};
    cfg.chunk_size = 25;
    GenotypeReader reader(dir.file("geno.tsv"));
    const ScanContext file_ctx(ct.curves, ct.subject_ids, &cov, reader.subject_ids(), cfg);
    std::vector<ScanRecord> streamed;
    run_scan(file_ctx, reader, read_snp_map(dir.file("snps.tsv")),
             [&](const ScanRecord& r) { streamed.push_back(r); });

    const ScanContext mem_ctx(p.curves, p.subject_ids, &p.covariates, p.genotypes.subject_ids, cfg);
    const auto in_memory = run_scan(mem_ctx, p.genotypes);
    CHECK(scan_text(streamed) == scan_text(in_memory));
}

TEST_CASE("shared null spectrum stays close to the per-SNP spectrum") {
    const SyntheticPanel p = make_synthetic_panel(small_panel(17, 30));
    ScanConfig cfg;
    const ScanContext exact(p.curves, p.subject_ids, nullptr, p.genotypes.subject_ids, cfg);
    cfg.shared_null_spectrum = true;
    const ScanContext shared(p.curves, p.subject_ids, nullptr, p.genotypes.subject_ids, cfg);
    const auto a = run_scan(exact, p.genotypes);
    const auto b = run_scan(shared, p.genotypes);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].status != ScanStatus::Ok)
            continue;
        CHECK(a[i].lambda == b[i].lambda);
        if (a[i].p_value > 1e-6)
            CHECK(std::abs(std::log(a[i].p_value) - std::log(b[i].p_value)) < 0.5);
    }
}

TEST_CASE("categorical covariates are dummy coded against the first sorted level") {
    const CovariateTable t({"a", "b", "c", "d"}, {"arm", "w"}, {{"B", "A", "C", "A"}, {"1", "2", "3", "5"}});
    const DesignMatrix x = covariate_design(t, {0, 1, 2, 3}, {"arm", "w"});
    REQUIRE(x.cols() == 4);
    CHECK(x.names()[1] == "arm=B");
    CHECK(x.names()[2] == "arm=C");
    CHECK(x.matrix().col(1) == Eigen::Vector4d(1, 0, 0, 0));
    CHECK(x.matrix().col(3) == Eigen::Vector4d(1, 2, 3, 5));
    CHECK(error_kind_of([&] { covariate_design(t, {1, 3}, {"arm"}); }) == ErrorKind::DegenerateFactor);
}

TEST_CASE("QQ points") {
    const auto one = qq_points({0.01});
    REQUIRE(one.size() == 1);
    CHECK(one[0].observed == doctest::Approx(2.0));
    CHECK(one[0].expected == doctest::Approx(-std::log10(0.5)));
    for (const auto& q : qq_points({1.0, 1.0, 1.0}))
        CHECK(q.observed == 0.0);

    // Uniform p-values stay inside the Kolmogorov-Smirnov band.
    const std::size_t n = 100000;
    Rng rng(21);
    std::vector<double> p(n);
    for (auto& v : p)
        v = rng.uniform();
    const auto qq = qq_points(p);
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double observed_p = std::pow(10.0, -qq[k].observed);
        const double expected_p = std::pow(10.0, -qq[k].expected);
        worst = std::max(worst, std::abs(observed_p - expected_p));
    }
    CHECK(worst <= 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("Manhattan and QQ export") {
    const SyntheticPanel p = make_synthetic_panel(small_panel(23, 50));
    const ScanContext ctx(p.curves, p.subject_ids, nullptr, p.genotypes.subject_ids, ScanConfig{});
    const auto records = run_scan(ctx, p.genotypes);
    testutil::TempDir dir("export");
    const ExportPaths paths = qq_manhattan_export(records, dir.file("run"), true);
    const std::string man = slurp(paths.manhattan);
    CHECK(man.rfind("snp_id\tchromosome\tposition\tneg_log10_p\n", 0) == 0);
    std::size_t ok = 0;
    for (const auto& r : records)
        ok += r.status == ScanStatus::Ok;
    CHECK(static_cast<std::size_t>(std::count(man.begin(), man.end(), '\n')) == ok + 1);
    CHECK(slurp(paths.qq).rfind("expected\tobserved\n", 0) == 0);
    CHECK(slurp(paths.manhattan_svg).find("<svg") != std::string::npos);
    CHECK(slurp(paths.qq_svg).find("<svg") != std::string::npos);
}

TEST_CASE("interaction test structure") {
    PanelSpec spec = small_panel(29, 1);
    spec.causal_index = 0;
    spec.interaction_norm = 0.5;
    const SyntheticPanel p = make_synthetic_panel(spec);
    const Eigen::VectorXd snp = p.genotypes.dosages.row(0).transpose();
    const InteractionResult r = interaction_test(p.curves, p.subject_ids, p.covariates, snp, "treatment", {"age"});
    CHECK(r.baseline == "A");
    REQUIRE(r.terms.size() == 2);
    CHECK(r.test.df_per_term == 2);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(((r.lower[k].values().array() <= r.coefficients[k].values().array()) &&
               (r.coefficients[k].values().array() <= r.upper[k].values().array()))
                  .all());

    const CovariateTable single(p.subject_ids, {"treatment"},
                                {std::vector<std::string>(p.subject_ids.size(), "A")});
    CHECK(error_kind_of([&] { interaction_test(p.curves, p.subject_ids, single, snp, "treatment", {}); }) ==
          ErrorKind::DegenerateFactor);
}

TEST_CASE("interaction test is calibrated and has power") {
    const int reps = 150;
    int null_hits = 0, alt_hits = 0;
    for (int rep = 0; rep < reps; ++rep) {
        PanelSpec spec;
        spec.subjects = 540;
        spec.snps = 1;
        spec.causal_index = 0;
        spec.grid_points = 20;
        spec.seed = 1000 + static_cast<std::uint64_t>(rep);
        const SyntheticPanel null_panel = make_synthetic_panel(spec);
        const Eigen::VectorXd g0 = null_panel.genotypes.dosages.row(0).transpose();
        null_hits += interaction_test(null_panel.curves, null_panel.subject_ids, null_panel.covariates, g0,
                                      "treatment", {"age", "gender"})
                         .test.p_value < 0.05;
        spec.interaction_norm = 0.2;
        const SyntheticPanel alt = make_synthetic_panel(spec);
        const Eigen::VectorXd g1 = alt.genotypes.dosages.row(0).transpose();
        alt_hits += interaction_test(alt.curves, alt.subject_ids, alt.covariates, g1, "treatment", {"age", "gender"})
                        .test.p_value < 0.05;
    }
    const double band = 3.0 * std::sqrt(0.05 * 0.95 / reps);
    CHECK(std::abs(null_hits / double(reps) - 0.05) <= band);
    CHECK(alt_hits / double(reps) >= 0.8);
}

}
