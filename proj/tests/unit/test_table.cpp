#include "table.hpp"

#include "helpers.hpp"

#include <cmath>
#include <fstream>

using namespace funcscan;
using testutil::error_kind_of;

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream(path) << text;
}

std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("table") {

TEST_CASE("field splitting") {
    const auto f = split_fields(" a , \"b c\" ,d\r", ',');
    REQUIRE(f.size() == 3);
    CHECK(f[0] == "a");
    CHECK(f[1] == "b c");
    CHECK(f[2] == "d");
    CHECK(detect_delimiter("x,y") == ',');
    CHECK(detect_delimiter("x\ty") == '\t');
    CHECK(parse_number("2.5e-1", "ctx") == 0.25);
    CHECK(error_kind_of([] { parse_number("abc", "ctx"); }) == ErrorKind::Parse);
    CHECK(error_kind_of([] { parse_number("inf", "ctx"); }) == ErrorKind::Parse);
}

TEST_CASE("long-format reader") {
    testutil::TempDir dir("long");
    write_text(dir.file("ok.csv"), "subject_id,time,value\ns1,0.5,1.0\ns1,1.5,\ns2,2,3\n");
    const auto recs = read_long_format(dir.file("ok.csv"));
    REQUIRE(recs.size() == 2);
    CHECK(recs[1].subject_id == "s2");
    CHECK(recs[1].time == 2.0);

    write_text(dir.file("bad.csv"), "subject_id,time,value\ns1,0.5,1.0\ns1,oops,2\n");
    const std::string msg = error_text([&] { read_long_format(dir.file("bad.csv")); });
    CHECK(msg.find("bad.csv:3") != std::string::npos);

    write_text(dir.file("cols.csv"), "id,time,value\n");
    CHECK(error_kind_of([&] { read_long_format(dir.file("cols.csv")); }) == ErrorKind::Parse);
    CHECK(error_kind_of([&] { read_long_format(dir.file("absent.csv")); }) == ErrorKind::Io);
}

TEST_CASE("curve files round-trip exactly") {
    testutil::TempDir dir("curves");
    Rng rng(3);
    const TimeGrid g = TimeGrid::uniform(9);
    const CurveSet c(g, testutil::normal_matrix(4, 9, rng));
    write_curves(dir.file("c.tsv"), {"a", "b", "c", "d"}, c);
    const CurveTable back = read_curves(dir.file("c.tsv"));
    CHECK(back.subject_ids == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(back.curves.values() == c.values());
    CHECK(back.curves.grid().points() == g.points());
}

TEST_CASE("covariate table") {
    testutil::TempDir dir("cov");
    write_text(dir.file("c.csv"), "subject_id,age,arm\nx,5.5,B\ny,7,A\n");
    const CovariateTable t = CovariateTable::read(dir.file("c.csv"));
    CHECK(t.is_numeric("age"));
    CHECK_FALSE(t.is_numeric("arm"));
    CHECK(*t.row_of("y") == 1);
    CHECK_FALSE(t.row_of("z"));
    CHECK(t.levels("arm", {0, 1}) == std::vector<std::string>{"A", "B"});
    CHECK(error_kind_of([&] { t.numeric("arm", {0}); }) == ErrorKind::Parse);

    write_text(dir.file("dup.csv"), "subject_id,age\nx,1\nx,2\n");
    CHECK(error_kind_of([&] { CovariateTable::read(dir.file("dup.csv")); }) == ErrorKind::Parse);
}

TEST_CASE("genotype reader") {
    testutil::TempDir dir("geno");
    write_text(dir.file("g.tsv"), "snp_id\ta\tb\tc\nrs1\t0\t1\t2\nrs2\tNA\t.\t\nrs3\t1\t1\t1\n");
    GenotypeReader r(dir.file("g.tsv"));
    CHECK(r.subject_ids().size() == 3);
    std::vector<GenotypeReader::Row> rows;
    r.next_chunk(2, rows);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].dosages[2] == 2.0);
    CHECK(std::isnan(rows[1].dosages[0]));
    CHECK(std::isnan(rows[1].dosages[2]));
    r.next_chunk(5, rows);
    CHECK(rows.size() == 3);

    write_text(dir.file("bad.tsv"), "snp_id\ta\tb\nrs1\t0\t3\n");
    GenotypeReader bad(dir.file("bad.tsv"));
    std::vector<GenotypeReader::Row> out;
    const std::string msg = error_text([&] { bad.next_chunk(10, out); });
    CHECK(msg.find(":2") != std::string::npos);

    write_text(dir.file("map.tsv"), "snp_id\tchromosome\tposition\nrs1\t3\t12345\n");
    const auto map = read_snp_map(dir.file("map.tsv"));
    CHECK(map.at("rs1").position == 12345);
    CHECK(map.at("rs1").chromosome == "3");
}

}
