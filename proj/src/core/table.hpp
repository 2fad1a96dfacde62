#pragma once

// Delimited text formats: long-format visits, curve matrices, covariate tables,
// genotype dosage matrices and SNP maps.

#include "fnspace.hpp"
#include "smoothing.hpp"

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace funcscan {

/// Splits on `delim`, trimming surrounding whitespace and a trailing '\r'.
std::vector<std::string> split_fields(const std::string& line, char delim);

/// Comma when the header line has one, tab otherwise.
char detect_delimiter(const std::string& header);

/// Parses a finite double, throwing Parse with `context` on failure.
double parse_number(const std::string& field, const std::string& context);

/// `subject_id,time,value` with one row per visit; times are left in study units.
std::vector<LongitudinalRecord> read_long_format(const std::string& path);

struct CurveTable {
    std::vector<std::string> subject_ids;
    CurveSet curves;
};

/// Header row `subject_id` followed by the grid points, then one row per subject.
void write_curves(const std::string& path, const std::vector<std::string>& ids, const CurveSet& curves);
CurveTable read_curves(const std::string& path);

class CovariateTable {
public:
    static CovariateTable read(const std::string& path);
    CovariateTable(std::vector<std::string> ids, std::vector<std::string> names,
                   std::vector<std::vector<std::string>> columns);

    const std::vector<std::string>& subject_ids() const { return ids_; }
    const std::vector<std::string>& names() const { return names_; }
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    std::optional<std::size_t> row_of(const std::string& subject) const;

    const std::vector<std::string>& raw(const std::string& name) const;
    bool is_numeric(const std::string& name) const;

    /// Column values for the given table rows; throws Parse if not numeric.
    Eigen::VectorXd numeric(const std::string& name, const std::vector<std::size_t>& rows) const;

    /// Sorted distinct values of a column over the given rows.
    std::vector<std::string> levels(const std::string& name, const std::vector<std::size_t>& rows) const;

private:
    std::vector<std::string> ids_;
    std::vector<std::string> names_;
    std::vector<std::vector<std::string>> columns_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::size_t> rows_;
};

struct SnpInfo {
    std::string id;
    std::string chromosome;
    std::int64_t position = 0;
};

/// Sidecar map: `snp_id chromosome position`, tab or comma separated, with header.
std::unordered_map<std::string, SnpInfo> read_snp_map(const std::string& path);

/// Streams a dosage matrix: header `snp_id` + subject ids, then one row per SNP
/// with values in {0,1,2} or NA / . / empty for missing.
class GenotypeReader {
public:
    explicit GenotypeReader(const std::string& path);

    const std::vector<std::string>& subject_ids() const { return subjects_; }

    struct Row {
        std::string snp_id;
        std::vector<double> dosages;   // NaN marks a missing call
        std::size_t line = 0;
    };

    /// Appends up to `max_rows` rows; returns false once the file is exhausted.
    bool next_chunk(std::size_t max_rows, std::vector<Row>& out);

private:
    std::string path_;
    std::ifstream in_;
    char delim_ = '\t';
    std::size_t line_ = 0;
    std::vector<std::string> subjects_;
};

}  // namespace funcscan
