#include "table.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <set>

namespace funcscan {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '"'))
        ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"'))
        --e;
    return s.substr(b, e - b);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::Io, "cannot open " + path);
    return in;
}

std::string where(const std::string& path, std::size_t line) {
    return path + ":" + std::to_string(line);
}

bool is_missing(const std::string& f) {
    return f.empty() || f == "NA" || f == "." || f == "nan" || f == "NaN";
}

}  // namespace

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos)
            break;
        start = pos + 1;
    }
    return out;
}

char detect_delimiter(const std::string& header) {
    return header.find(',') != std::string::npos ? ',' : '\t';
}

double parse_number(const std::string& field, const std::string& context) {
    if (field.empty())
        fail(ErrorKind::Parse, context + ": empty numeric field");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
        fail(ErrorKind::Parse, context + ": not a finite number: '" + field + "'");
    return v;
}

std::vector<LongitudinalRecord> read_long_format(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorKind::Parse, path + ": empty file");
    const char delim = detect_delimiter(line);
    const auto header = split_fields(line, delim);
    auto col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            fail(ErrorKind::Parse, where(path, 1) + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_id = col("subject_id");
    const std::size_t c_time = col("time");
    const std::size_t c_value = col("value");
    std::vector<LongitudinalRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto f = split_fields(line, delim);
        if (f.size() != header.size())
            fail(ErrorKind::Parse, where(path, lineno) + ": expected " + std::to_string(header.size()) + " fields");
        if (is_missing(f[c_value]))
            continue;
        out.push_back({f[c_id], parse_number(f[c_time], where(path, lineno)), parse_number(f[c_value], where(path, lineno))});
    }
    if (out.empty())
        fail(ErrorKind::Parse, path + ": no observations");
    return out;
}

void write_curves(const std::string& path, const std::vector<std::string>& ids, const CurveSet& curves) {
    if (static_cast<Eigen::Index>(ids.size()) != curves.count())
        fail(ErrorKind::InvalidArgument, "subject id count does not match curve count");
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f)
        fail(ErrorKind::Io, "cannot write " + path);
    std::fputs("subject_id", f);
    for (Eigen::Index j = 0; j < curves.values().cols(); ++j)
        std::fprintf(f, "\t%.17g", curves.grid().points()[j]);
    std::fputc('\n', f);
    for (Eigen::Index i = 0; i < curves.count(); ++i) {
        std::fputs(ids[static_cast<std::size_t>(i)].c_str(), f);
        for (Eigen::Index j = 0; j < curves.values().cols(); ++j)
            std::fprintf(f, "\t%.17g", curves.values()(i, j));
        std::fputc('\n', f);
    }
    if (std::fclose(f) != 0)
        fail(ErrorKind::Io, "error while writing " + path);
}

CurveTable read_curves(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorKind::Parse, path + ": empty file");
    const char delim = detect_delimiter(line);
    const auto header = split_fields(line, delim);
    if (header.size() < 3)
        fail(ErrorKind::Parse, where(path, 1) + ": need a label column and at least two grid points");
    std::vector<double> pts;
    for (std::size_t j = 1; j < header.size(); ++j)
        pts.push_back(parse_number(header[j], where(path, 1)));
    TimeGrid grid(std::move(pts));

    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto f = split_fields(line, delim);
        if (f.size() != header.size())
            fail(ErrorKind::Parse, where(path, lineno) + ": expected " + std::to_string(header.size()) + " fields");
        ids.push_back(f[0]);
        std::vector<double> r;
        for (std::size_t j = 1; j < f.size(); ++j)
            r.push_back(parse_number(f[j], where(path, lineno)));
        rows.push_back(std::move(r));
    }
    if (rows.empty())
        fail(ErrorKind::Parse, path + ": no curves");
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return {std::move(ids), CurveSet(grid, std::move(values))};
}

CovariateTable::CovariateTable(std::vector<std::string> ids, std::vector<std::string> names,
                               std::vector<std::vector<std::string>> columns)
    : ids_(std::move(ids)), names_(std::move(names)), columns_(std::move(columns)) {
    for (std::size_t j = 0; j < names_.size(); ++j)
        index_[names_[j]] = j;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!rows_.emplace(ids_[i], i).second)
            fail(ErrorKind::Parse, "duplicate subject id in covariate table: " + ids_[i]);
    }
}

CovariateTable CovariateTable::read(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorKind::Parse, path + ": empty file");
    const char delim = detect_delimiter(line);
    const auto header = split_fields(line, delim);
    if (header.empty() || header[0] != "subject_id")
        fail(ErrorKind::Parse, where(path, 1) + ": first column must be subject_id");
    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> cols(header.size() - 1);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto f = split_fields(line, delim);
        if (f.size() != header.size())
            fail(ErrorKind::Parse, where(path, lineno) + ": expected " + std::to_string(header.size()) + " fields");
        ids.push_back(f[0]);
        for (std::size_t j = 1; j < f.size(); ++j)
            cols[j - 1].push_back(f[j]);
    }
    return CovariateTable(std::move(ids), std::vector<std::string>(header.begin() + 1, header.end()), std::move(cols));
}

std::optional<std::size_t> CovariateTable::row_of(const std::string& subject) const {
    const auto it = rows_.find(subject);
    if (it == rows_.end())
        return std::nullopt;
    return it->second;
}

const std::vector<std::string>& CovariateTable::raw(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end())
        fail(ErrorKind::Parse, "covariate table has no column '" + name + "'");
    return columns_[it->second];
}

bool CovariateTable::is_numeric(const std::string& name) const {
    for (const auto& v : raw(name)) {
        char* end = nullptr;
        std::strtod(v.c_str(), &end);
        if (v.empty() || *end != '\0')
            return false;
    }
    return true;
}

Eigen::VectorXd CovariateTable::numeric(const std::string& name, const std::vector<std::size_t>& rows) const {
    const auto& col = raw(name);
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = parse_number(col[rows[i]], "covariate '" + name + "' for subject " + ids_[rows[i]]);
    return out;
}

std::vector<std::string> CovariateTable::levels(const std::string& name, const std::vector<std::size_t>& rows) const {
    const auto& col = raw(name);
    std::set<std::string> seen;
    for (std::size_t r : rows)
        seen.insert(col[r]);
    return {seen.begin(), seen.end()};
}

std::unordered_map<std::string, SnpInfo> read_snp_map(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorKind::Parse, path + ": empty file");
    const char delim = detect_delimiter(line);
    std::unordered_map<std::string, SnpInfo> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto f = split_fields(line, delim);
        if (f.size() < 3)
            fail(ErrorKind::Parse, where(path, lineno) + ": expected snp_id, chromosome, position");
        const double pos = parse_number(f[2], where(path, lineno));
        out[f[0]] = SnpInfo{f[0], f[1], static_cast<std::int64_t>(pos)};
    }
    return out;
}

GenotypeReader::GenotypeReader(const std::string& path) : path_(path), in_(open_input(path)) {
    std::string line;
    if (!std::getline(in_, line))
        fail(ErrorKind::Parse, path + ": empty file");
    line_ = 1;
    delim_ = detect_delimiter(line);
    auto header = split_fields(line, delim_);
    if (header.size() < 2)
        fail(ErrorKind::Parse, where(path, 1) + ": genotype header needs snp_id and subject columns");
    subjects_.assign(header.begin() + 1, header.end());
}

bool GenotypeReader::next_chunk(std::size_t max_rows, std::vector<Row>& out) {
    std::string line;
    std::size_t read = 0;
    while (read < max_rows && std::getline(in_, line)) {
        ++line_;
        if (trim(line).empty())
            continue;
        const auto f = split_fields(line, delim_);
        if (f.size() != subjects_.size() + 1)
            fail(ErrorKind::Parse, where(path_, line_) + ": expected " + std::to_string(subjects_.size() + 1) + " fields");
        Row row{f[0], std::vector<double>(subjects_.size()), line_};
        for (std::size_t j = 1; j < f.size(); ++j) {
            if (is_missing(f[j])) {
                row.dosages[j - 1] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            const double d = parse_number(f[j], where(path_, line_));
            if (d < 0.0 || d > 2.0)
                fail(ErrorKind::Parse, where(path_, line_) + ": dosage outside [0,2]");
            row.dosages[j - 1] = d;
        }
        out.push_back(std::move(row));
        ++read;
    }
    return read > 0;
}

}  // namespace funcscan
