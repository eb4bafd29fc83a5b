#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "tellipsoid/errors.hpp"

namespace tellipsoid {

// Labeled expression matrix: one row per gene, one column per sample.
// Values are 64-bit reals throughout (unitless after optional log10).
struct ExpressionMatrix {
    std::vector<std::string> gene_ids;   // size m, unique, non-empty
    std::vector<std::string> sample_ids; // size n, unique, non-empty
    Eigen::MatrixXd values;              // m x n, all entries finite

    Eigen::Index genes() const { return values.rows(); }
    Eigen::Index samples() const { return values.cols(); }
};

// Assignment of each sample to group 1 or group 2, aligned to sample order.
struct GroupLabels {
    std::vector<int> assignment; // size n, entries in {1, 2}
    int n1 = 0;                  // count of group-1 samples, >= 2
    int n2 = 0;                  // count of group-2 samples, >= 2
};

// Structural checks; throw ValidationError with a message naming the offender.
void validate(const ExpressionMatrix& x);
void validate(const GroupLabels& labels, Eigen::Index n_samples);

// Replaces every entry by log10(entry); all entries must be > 0.
void log10_transform(ExpressionMatrix& x);

// TSV ingestion. Header row `gene_id<TAB>s1<TAB>...<TAB>sn`, then one row per
// gene. Throws IoError on filesystem problems, ValidationError on content
// problems (malformed value, wrong column count, duplicate id, ...), always
// naming the offending row/column.
ExpressionMatrix load_expression_matrix(const std::string& path, bool apply_log10 = false);
ExpressionMatrix read_expression_matrix(std::istream& in, const std::string& source_name,
                                        bool apply_log10 = false);
void write_expression_matrix(const ExpressionMatrix& x, const std::string& path);
void write_expression_matrix(const ExpressionMatrix& x, std::ostream& out);

// Labels TSV: `sample_id<TAB>group` rows in any order, group in {1,2}; an
// optional header line and `#` comments are skipped. Result is aligned to
// sample_ids order. Every sample must be labeled exactly once.
GroupLabels load_labels(const std::string& path, const std::vector<std::string>& sample_ids);
GroupLabels read_labels(std::istream& in, const std::string& source_name,
                        const std::vector<std::string>& sample_ids);
void write_labels(const GroupLabels& labels, const std::vector<std::string>& sample_ids,
                  const std::string& path);

} // namespace tellipsoid
