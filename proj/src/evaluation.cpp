#include "tellipsoid/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace tellipsoid {

namespace {

std::unordered_map<std::string, std::size_t> index_truth(const GroundTruth& truth) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(truth.gene_ids.size());
    for (std::size_t i = 0; i < truth.gene_ids.size(); ++i) index.emplace(truth.gene_ids[i], i);
    return index;
}

} // namespace

FdrScore empirical_fdr(const RankedGeneList& list, const GroundTruth& truth) {
    const auto index = index_truth(truth);
    FdrScore score;
    score.R = static_cast<Eigen::Index>(list.rows.size());
    for (const auto& row : list.rows) {
        const auto it = index.find(row.gene_id);
        if (it == index.end()) {
            throw ValidationError("gene '" + row.gene_id + "' is not present in the truth");
        }
        if (truth.direction[it->second] == Direction::null_gene) ++score.no_fp;
    }
    score.fdr = score.R > 0 ? static_cast<double>(score.no_fp) / static_cast<double>(score.R) : 0.0;
    return score;
}

namespace {

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// NoFP over the first R rows for every requested R, via one prefix scan.
std::vector<Eigen::Index> prefix_no_fp(const RankedGeneList& list, const GroundTruth& truth,
                                       const std::unordered_map<std::string, std::size_t>& index) {
    std::vector<Eigen::Index> prefix(list.rows.size() + 1, 0);
    for (std::size_t i = 0; i < list.rows.size(); ++i) {
        const auto it = index.find(list.rows[i].gene_id);
        if (it == index.end()) {
            throw ValidationError("gene '" + list.rows[i].gene_id + "' is not present in the truth");
        }
        prefix[i + 1] =
            prefix[i] + (truth.direction[it->second] == Direction::null_gene ? 1 : 0);
    }
    return prefix;
}

} // namespace

EvaluationReport run_study(const StudyConfig& config) {
    if (!config.generator) throw ValidationError("study config is missing a generator");
    if (config.replicates < 1) throw ValidationError("study needs at least one replicate");
    if (config.methods.empty()) throw ValidationError("study needs at least one method");
    if (config.list_sizes.empty()) throw ValidationError("study needs at least one list size R");
    for (const auto& method : config.methods) {
        if (method != "tellipsoid" && method != "raw_t") {
            throw ValidationError("unknown method '" + method +
                                  "' (expected tellipsoid or raw_t)");
        }
    }
    Eigen::Index r_max = 0;
    for (const Eigen::Index r : config.list_sizes) {
        if (r < 1) throw ValidationError("list size R must be positive");
        r_max = std::max(r_max, r);
    }

    EvaluationReport report;
    for (int rep = 0; rep < config.replicates; ++rep) {
        const SimulatedDataset ds = config.generator(derive_seed(config.seed, rep));
        const auto index = index_truth(ds.truth);

        for (const auto& method : config.methods) {
            RankedGeneList list;
            if (method == "tellipsoid") {
                list = run_tellipsoid(ds.x, ds.labels, r_max, config.options);
                if (static_cast<Eigen::Index>(list.rows.size()) < r_max) {
                    throw ValidationError(
                        "list size R=" + std::to_string(r_max) +
                        " exceeds the rank-eligible gene count m-c=" +
                        std::to_string(list.rows.size()) + "; lower R or P");
                }
            } else {
                const TStatistics stats = two_sample_t(ds.x, ds.labels);
                list = rank_raw_t(stats, ds.x.gene_ids, r_max);
            }

            const auto prefix = prefix_no_fp(list, ds.truth, index);
            for (const Eigen::Index r : config.list_sizes) {
                StudyRow row;
                row.replicate = rep;
                row.method = method;
                row.R = r;
                row.no_fp = prefix[static_cast<std::size_t>(r)];
                row.fdr = static_cast<double>(row.no_fp) / static_cast<double>(r);
                report.series.push_back(std::move(row));
            }
        }
    }

    for (const auto& method : config.methods) {
        for (const Eigen::Index r : config.list_sizes) {
            std::vector<double> fdrs;
            int zero_count = 0;
            for (const auto& row : report.series) {
                if (row.method != method || row.R != r) continue;
                fdrs.push_back(row.fdr);
                if (row.no_fp == 0) ++zero_count;
            }
            StudySummaryRow summary;
            summary.method = method;
            summary.R = r;
            summary.median_fdr = median(std::move(fdrs));
            summary.frac_zero_fdr =
                static_cast<double>(zero_count) / static_cast<double>(config.replicates);
            report.summary.push_back(std::move(summary));
        }
    }
    return report;
}

std::string comparison_table(const RankedGeneList& tellipsoid_list,
                             const RankedGeneList& raw_list, const GroundTruth& truth) {
    const auto index = index_truth(truth);
    for (const auto* list : {&tellipsoid_list, &raw_list}) {
        for (const auto& row : list->rows) {
            if (index.find(row.gene_id) == index.end()) {
                throw ValidationError("gene '" + row.gene_id +
                                      "' is not present in the truth (mismatched universes)");
            }
        }
    }

    const FdrScore tell_score = empirical_fdr(tellipsoid_list, truth);
    const FdrScore raw_score = empirical_fdr(raw_list, truth);

    std::ostringstream out;
    char buf[64];
    out << "u_rank\tgene_id\tu_star\tt\tt_rank\tstatus\n";
    for (const auto& row : tellipsoid_list.rows) {
        const bool is_null =
            truth.direction[index.at(row.gene_id)] == Direction::null_gene;
        std::snprintf(buf, sizeof(buf), "%.2f", row.u_star ? *row.u_star : 0.0);
        out << row.rank << '\t' << row.gene_id << '\t' << buf;
        std::snprintf(buf, sizeof(buf), "%.2f", row.t);
        out << '\t' << buf << '\t' << row.t_rank << '\t' << (is_null ? "null" : "") << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%.4f", tell_score.fdr);
    out << "# tellipsoid: R=" << tell_score.R << " NoFP=" << tell_score.no_fp << " FDR=" << buf
        << '\n';
    std::snprintf(buf, sizeof(buf), "%.4f", raw_score.fdr);
    out << "# raw_t: R=" << raw_score.R << " NoFP=" << raw_score.no_fp << " FDR=" << buf << '\n';
    return out.str();
}

namespace {

std::string format_fdr(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace

void write_study_series(const EvaluationReport& report, std::ostream& out) {
    out << "replicate\tmethod\tR\tNoFP\tFDR\n";
    for (const auto& row : report.series) {
        out << row.replicate << '\t' << row.method << '\t' << row.R << '\t' << row.no_fp << '\t'
            << format_fdr(row.fdr) << '\n';
    }
}

void write_study_summary(const EvaluationReport& report, std::ostream& out) {
    out << "method\tR\tmedian_FDR\tfrac_zero_FDR\n";
    for (const auto& row : report.summary) {
        out << row.method << '\t' << row.R << '\t' << format_fdr(row.median_fdr) << '\t'
            << format_fdr(row.frac_zero_fdr) << '\n';
    }
}

void write_study_series(const EvaluationReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_study_series(report, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

void write_study_summary(const EvaluationReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_study_summary(report, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace tellipsoid
