#include "tellipsoid/ranking.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tellipsoid {

namespace {

// Shared ordering rule: magnitude descending, exact ties by ascending
// original gene index.
std::vector<Eigen::Index> order_by_magnitude(const Eigen::VectorXd& values,
                                             const std::vector<Eigen::Index>& indices) {
    std::vector<Eigen::Index> order(indices.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double ma = std::abs(values[a]);
        const double mb = std::abs(values[b]);
        if (ma != mb) return ma > mb;
        return indices[static_cast<std::size_t>(a)] < indices[static_cast<std::size_t>(b)];
    });
    return order;
}

std::vector<int> t_rank_of_gene(const TStatistics& stats) {
    const Eigen::Index m = stats.genes();
    std::vector<Eigen::Index> identity(static_cast<std::size_t>(m));
    std::iota(identity.begin(), identity.end(), Eigen::Index{0});
    const auto order = order_by_magnitude(stats.t, identity);
    std::vector<int> rank(static_cast<std::size_t>(m), 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        rank[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos) + 1;
    }
    return rank;
}

constexpr Eigen::Index kTileRows = 512;

} // namespace

TellipsoidScores tellipsoid_scores(const ZAPartition& part, const CorrelationModel& corr,
                                   SolveMethod method) {
    const Eigen::Index m = static_cast<Eigen::Index>(part.permutation.size());
    const Eigen::Index c = part.c;
    if (corr.c != c || corr.z.rows() != m) {
        throw ValidationError("correlation model does not match the partition");
    }

    TellipsoidScores scores;
    scores.c = c;
    scores.method = method;
    scores.back_permutation = part.permutation;
    scores.u_hat_star = Eigen::VectorXd::Zero(m);

    const auto z0 = corr.z.topRows(c);
    const auto z1 = corr.z.bottomRows(m - c);

    if (method == SolveMethod::dense_cholesky) {
        const SolveReport report = solve_dense(corr.c00(true), part.t0);
        // C10 * x in row tiles: keeps the dense path's semantics (the
        // correlations are materialized) without an (m-c) x c allocation.
        Eigen::VectorXd correction(m - c);
        for (Eigen::Index row = 0; row < m - c; row += kTileRows) {
            const Eigen::Index count = std::min(kTileRows, m - c - row);
            correction.segment(row, count).noalias() =
                (z1.middleRows(row, count) * z0.transpose()) * report.solution;
        }
        scores.u_hat_star.tail(m - c) = part.t1 - correction;
    } else {
        // Z0^T x equals the inner Woodbury vector w exactly, so C10 * x =
        // Z1 * w; this never touches the 1/delta-amplified x.
        const Eigen::VectorXd w = lowrank_projection(z0, corr.delta, part.t0);
        scores.u_hat_star.tail(m - c) = part.t1 - z1 * w;
    }
    return scores;
}

RankedGeneList rank_genes(const TellipsoidScores& scores, const TStatistics& stats,
                          const std::vector<std::string>& gene_ids, Eigen::Index R) {
    const Eigen::Index m = scores.u_hat_star.size();
    if (R < 1 || R > m) {
        throw ValidationError("R out of range: must satisfy 1 <= R <= " + std::to_string(m));
    }
    if (stats.genes() != m || static_cast<Eigen::Index>(gene_ids.size()) != m) {
        throw ValidationError("scores, statistics, and gene IDs disagree in size");
    }

    // Genes inside the ZA partition are rank-ineligible (their u* is pinned
    // at zero), so only the top m-c compete.
    const Eigen::Index c = scores.c;
    const Eigen::VectorXd u1 = scores.u_hat_star.tail(m - c);
    std::vector<Eigen::Index> original(static_cast<std::size_t>(m - c));
    for (Eigen::Index r = 0; r < m - c; ++r) {
        original[static_cast<std::size_t>(r)] =
            scores.back_permutation[static_cast<std::size_t>(c + r)];
    }
    const auto order = order_by_magnitude(u1, original);
    const auto t_ranks = t_rank_of_gene(stats);

    RankedGeneList list;
    list.meta.method = to_string(scores.method);
    const Eigen::Index rows = std::min(R, m - c);
    list.rows.reserve(static_cast<std::size_t>(rows));
    for (Eigen::Index pos = 0; pos < rows; ++pos) {
        const Eigen::Index gene = original[static_cast<std::size_t>(order[pos])];
        RankedGeneRow row;
        row.rank = static_cast<int>(pos) + 1;
        row.gene_id = gene_ids[static_cast<std::size_t>(gene)];
        row.u_star = u1[order[pos]];
        row.t = stats.t[gene];
        row.t_rank = t_ranks[static_cast<std::size_t>(gene)];
        list.rows.push_back(std::move(row));
    }
    return list;
}

RankedGeneList rank_raw_t(const TStatistics& stats, const std::vector<std::string>& gene_ids,
                          Eigen::Index R) {
    const Eigen::Index m = stats.genes();
    if (R < 1 || R > m) {
        throw ValidationError("R out of range: must satisfy 1 <= R <= " + std::to_string(m));
    }
    if (static_cast<Eigen::Index>(gene_ids.size()) != m) {
        throw ValidationError("statistics and gene IDs disagree in size");
    }

    std::vector<Eigen::Index> identity(static_cast<std::size_t>(m));
    std::iota(identity.begin(), identity.end(), Eigen::Index{0});
    const auto order = order_by_magnitude(stats.t, identity);

    RankedGeneList list;
    list.meta.method = "raw_t";
    list.rows.reserve(static_cast<std::size_t>(R));
    for (Eigen::Index pos = 0; pos < R; ++pos) {
        const Eigen::Index gene = order[pos];
        RankedGeneRow row;
        row.rank = static_cast<int>(pos) + 1;
        row.gene_id = gene_ids[static_cast<std::size_t>(gene)];
        row.t = stats.t[gene];
        row.t_rank = row.rank;
        list.rows.push_back(std::move(row));
    }
    return list;
}

RankedGeneList run_tellipsoid(const ExpressionMatrix& x, const GroupLabels& labels,
                              Eigen::Index R, const TellipsoidOptions& opts) {
    validate(x);
    validate(labels, x.samples());

    const TStatistics stats = two_sample_t(x, labels);
    const ZAPartition part = partition_za(stats, opts.P);
    const CenteredMatrix centered = remove_treatment_effects(x, labels);
    const CorrelationModel corr = build_correlation_model(centered, part, opts.delta);

    const SolveMethod method = opts.method.value_or(
        x.samples() < part.c ? SolveMethod::lowrank_woodbury : SolveMethod::dense_cholesky);
    const TellipsoidScores scores = tellipsoid_scores(part, corr, method);

    RankedGeneList list = rank_genes(scores, stats, x.gene_ids, R);
    list.meta.P = opts.P;
    list.meta.c = part.c;
    list.meta.delta = opts.delta;
    return list;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_ranked_list(const RankedGeneList& list, std::ostream& out) {
    out << "rank\tgene_id\tu_star\tt\tt_rank\n";
    for (const auto& row : list.rows) {
        out << row.rank << '\t' << row.gene_id << '\t';
        if (row.u_star) out << format_double(*row.u_star);
        out << '\t' << format_double(row.t) << '\t' << row.t_rank << '\n';
    }
    if (list.meta.P) out << "# P=" << format_double(*list.meta.P) << '\n';
    if (list.meta.c) out << "# c=" << *list.meta.c << '\n';
    if (list.meta.delta) out << "# delta=" << format_double(*list.meta.delta) << '\n';
    out << "# method=" << list.meta.method << '\n';
    if (list.meta.seed) out << "# seed=" << *list.meta.seed << '\n';
}

void write_ranked_list(const RankedGeneList& list, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_ranked_list(list, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

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

double parse_double_field(const std::string& field, const std::string& source,
                          std::size_t line_no) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ValidationError(source + ": line " + std::to_string(line_no) +
                              ": cannot parse '" + field + "' as a number");
    }
    return value;
}

long parse_long_field(const std::string& field, const std::string& source, std::size_t line_no) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ValidationError(source + ": line " + std::to_string(line_no) +
                              ": cannot parse '" + field + "' as an integer");
    }
    return value;
}

} // namespace

RankedGeneList read_ranked_list(std::istream& in, const std::string& source_name) {
    RankedGeneList list;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = line.substr(1);
            const std::size_t eq = body.find('=');
            if (eq == std::string::npos) continue;
            std::string key = body.substr(0, eq);
            const std::string value = body.substr(eq + 1);
            key.erase(0, key.find_first_not_of(' '));
            key.erase(key.find_last_not_of(' ') + 1);
            if (key == "P") list.meta.P = parse_double_field(value, source_name, line_no);
            else if (key == "c") list.meta.c = parse_long_field(value, source_name, line_no);
            else if (key == "delta") list.meta.delta = parse_double_field(value, source_name, line_no);
            else if (key == "method") list.meta.method = value;
            else if (key == "seed")
                list.meta.seed = static_cast<std::uint64_t>(parse_long_field(value, source_name, line_no));
            continue;
        }
        const auto fields = split_tabs(line);
        if (!saw_header) {
            if (fields.size() != 5 || fields[0] != "rank") {
                throw ValidationError(source_name + ": expected ranked-list header "
                                      "'rank\tgene_id\tu_star\tt\tt_rank'");
            }
            saw_header = true;
            continue;
        }
        if (fields.size() != 5) {
            throw ValidationError(source_name + ": line " + std::to_string(line_no) +
                                  ": expected 5 columns, got " + std::to_string(fields.size()));
        }
        RankedGeneRow row;
        row.rank = static_cast<int>(parse_long_field(fields[0], source_name, line_no));
        row.gene_id = fields[1];
        if (!fields[2].empty()) row.u_star = parse_double_field(fields[2], source_name, line_no);
        row.t = parse_double_field(fields[3], source_name, line_no);
        row.t_rank = static_cast<int>(parse_long_field(fields[4], source_name, line_no));
        list.rows.push_back(std::move(row));
    }
    if (!saw_header) throw ValidationError(source_name + ": missing ranked-list header");
    return list;
}

RankedGeneList load_ranked_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read_ranked_list(in, path);
}

} // namespace tellipsoid
