#include "tellipsoid/expression_data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace tellipsoid {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

// Strips a trailing '\r' so CRLF files parse like LF files.
bool get_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

double parse_double(const std::string& field, const std::string& source, std::size_t line_no,
                    std::size_t column_no) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ValidationError(source + ": line " + std::to_string(line_no) + ", column " +
                              std::to_string(column_no) + ": cannot parse '" + field +
                              "' as a number");
    }
    if (!std::isfinite(value)) {
        throw ValidationError(source + ": line " + std::to_string(line_no) + ", column " +
                              std::to_string(column_no) + ": non-finite value '" + field + "'");
    }
    return value;
}

void check_unique(const std::vector<std::string>& ids, const std::string& what,
                  const std::string& source) {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
        if (id.empty()) throw ValidationError(source + ": empty " + what);
        if (!seen.insert(id).second) {
            throw ValidationError(source + ": duplicate " + what + " '" + id + "'");
        }
    }
}

// Structural checks that every parsed matrix must satisfy. The m/n floor is
// separate: tiny matrices are legal to read and write, but too small to
// analyze, so validate() alone enforces the floor.
void validate_structure(const ExpressionMatrix& x) {
    const Eigen::Index m = x.values.rows();
    const Eigen::Index n = x.values.cols();
    if (static_cast<Eigen::Index>(x.gene_ids.size()) != m) {
        throw ValidationError("gene_ids size does not match the matrix row count");
    }
    if (static_cast<Eigen::Index>(x.sample_ids.size()) != n) {
        throw ValidationError("sample_ids size does not match the matrix column count");
    }
    check_unique(x.gene_ids, "gene ID", "expression matrix");
    check_unique(x.sample_ids, "sample ID", "expression matrix");
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!std::isfinite(x.values(i, j))) {
                throw ValidationError("non-finite value for gene '" + x.gene_ids[i] +
                                      "', sample '" + x.sample_ids[j] + "'");
            }
        }
    }
}

} // namespace

void validate(const ExpressionMatrix& x) {
    validate_structure(x);
    const Eigen::Index m = x.values.rows();
    const Eigen::Index n = x.values.cols();
    if (m < 4) throw ValidationError("expression matrix needs at least 4 genes, got " +
                                     std::to_string(m));
    if (n < 4) throw ValidationError("expression matrix needs at least 4 samples, got " +
                                     std::to_string(n));
}

void validate(const GroupLabels& labels, Eigen::Index n_samples) {
    if (static_cast<Eigen::Index>(labels.assignment.size()) != n_samples) {
        throw ValidationError("label count does not match sample count");
    }
    int n1 = 0, n2 = 0;
    for (std::size_t j = 0; j < labels.assignment.size(); ++j) {
        const int g = labels.assignment[j];
        if (g == 1) ++n1;
        else if (g == 2) ++n2;
        else throw ValidationError("sample " + std::to_string(j + 1) + ": group must be 1 or 2");
    }
    if (n1 != labels.n1 || n2 != labels.n2) {
        throw ValidationError("stored group counts disagree with the assignment vector");
    }
    if (n1 < 2 || n2 < 2) {
        throw ValidationError("each group needs at least 2 samples (n1=" + std::to_string(n1) +
                              ", n2=" + std::to_string(n2) + ")");
    }
}

void log10_transform(ExpressionMatrix& x) {
    for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.values.cols(); ++j) {
            const double v = x.values(i, j);
            if (!(v > 0.0)) {
                throw ValidationError("log10 requires positive values: gene '" + x.gene_ids[i] +
                                      "', sample '" + x.sample_ids[j] + "' has " +
                                      std::to_string(v));
            }
            x.values(i, j) = std::log10(v);
        }
    }
}

ExpressionMatrix read_expression_matrix(std::istream& in, const std::string& source_name,
                                        bool apply_log10) {
    std::string line;
    if (!get_line(in, line)) throw ValidationError(source_name + ": empty file");
    const auto header = split_tabs(line);
    if (header.size() < 2) {
        throw ValidationError(source_name + ": header must contain gene_id plus sample columns");
    }

    ExpressionMatrix x;
    x.sample_ids.assign(header.begin() + 1, header.end());
    const std::size_t n = x.sample_ids.size();

    std::vector<double> flat;
    std::size_t line_no = 1;
    while (get_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != n + 1) {
            throw ValidationError(source_name + ": line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(n + 1) + " columns, got " +
                                  std::to_string(fields.size()));
        }
        x.gene_ids.push_back(fields[0]);
        for (std::size_t j = 0; j < n; ++j) {
            flat.push_back(parse_double(fields[j + 1], source_name, line_no, j + 2));
        }
    }

    const std::size_t m = x.gene_ids.size();
    x.values.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            x.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * n + j];
        }
    }

    if (x.gene_ids.empty()) throw ValidationError(source_name + ": no gene rows");
    validate_structure(x);
    if (apply_log10) log10_transform(x);
    return x;
}

ExpressionMatrix load_expression_matrix(const std::string& path, bool apply_log10) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read_expression_matrix(in, path, apply_log10);
}

void write_expression_matrix(const ExpressionMatrix& x, std::ostream& out) {
    out << "gene_id";
    for (const auto& s : x.sample_ids) out << '\t' << s;
    out << '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
        out << x.gene_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < x.values.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", x.values(i, j));
            out << '\t' << buf;
        }
        out << '\n';
    }
}

void write_expression_matrix(const ExpressionMatrix& x, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_expression_matrix(x, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

GroupLabels read_labels(std::istream& in, const std::string& source_name,
                        const std::vector<std::string>& sample_ids) {
    std::unordered_set<std::string> known(sample_ids.begin(), sample_ids.end());
    std::unordered_set<std::string> labeled;
    GroupLabels labels;
    labels.assignment.assign(sample_ids.size(), 0);

    std::string line;
    std::size_t line_no = 0;
    while (get_line(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2) {
            throw ValidationError(source_name + ": line " + std::to_string(line_no) +
                                  ": expected 2 columns, got " + std::to_string(fields.size()));
        }
        if (fields[0] == "sample_id" && fields[1] == "group") continue; // header
        if (known.find(fields[0]) == known.end()) {
            throw ValidationError(source_name + ": line " + std::to_string(line_no) +
                                  ": unknown sample ID '" + fields[0] + "'");
        }
        if (!labeled.insert(fields[0]).second) {
            throw ValidationError(source_name + ": sample '" + fields[0] + "' labeled twice");
        }
        int group = 0;
        if (fields[1] == "1") group = 1;
        else if (fields[1] == "2") group = 2;
        else {
            throw ValidationError(source_name + ": line " + std::to_string(line_no) +
                                  ": group must be 1 or 2, got '" + fields[1] + "'");
        }
        for (std::size_t j = 0; j < sample_ids.size(); ++j) {
            if (sample_ids[j] == fields[0]) {
                labels.assignment[j] = group;
                break;
            }
        }
    }

    for (std::size_t j = 0; j < sample_ids.size(); ++j) {
        if (labels.assignment[j] == 0) {
            throw ValidationError(source_name + ": sample '" + sample_ids[j] + "' has no label");
        }
        if (labels.assignment[j] == 1) ++labels.n1;
        else ++labels.n2;
    }
    validate(labels, static_cast<Eigen::Index>(sample_ids.size()));
    return labels;
}

GroupLabels load_labels(const std::string& path, const std::vector<std::string>& sample_ids) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read_labels(in, path, sample_ids);
}

void write_labels(const GroupLabels& labels, const std::vector<std::string>& sample_ids,
                  const std::string& path) {
    if (labels.assignment.size() != sample_ids.size()) {
        throw ValidationError("label count does not match sample count");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "sample_id\tgroup\n";
    for (std::size_t j = 0; j < sample_ids.size(); ++j) {
        out << sample_ids[j] << '\t' << labels.assignment[j] << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace tellipsoid
