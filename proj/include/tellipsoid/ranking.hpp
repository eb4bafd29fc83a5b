#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tellipsoid/correlation.hpp"
#include "tellipsoid/solver.hpp"
#include "tellipsoid/tstats.hpp"

namespace tellipsoid {

// Revised statistics in ZA-partition order. The first c entries are exactly
// zero (the zero assumption pins u0 = 0); the rest are u1* from the
// conditional-mean closed form.
struct TellipsoidScores {
    Eigen::VectorXd u_hat_star;                 // size m, partition order
    std::vector<Eigen::Index> back_permutation; // rank position -> original gene index
    Eigen::Index c = 0;
    SolveMethod method = SolveMethod::dense_cholesky;
};

// u1* = t1 - C10 * x with x the solution of (C00 + delta*I) x = t0.
// dense_cholesky materializes the correlation blocks (reference path);
// lowrank_woodbury works in the factored form throughout and evaluates the
// algebraically identical Z1 * w, which avoids the 1/delta-amplified x.
TellipsoidScores tellipsoid_scores(const ZAPartition& part, const CorrelationModel& corr,
                                   SolveMethod method);

// One reported discovery.
struct RankedGeneRow {
    int rank = 0;                 // 1-based, contiguous
    std::string gene_id;
    std::optional<double> u_star; // empty for the raw-t baseline
    double t = 0.0;
    int t_rank = 0;               // 1-based rank under |t| descending over all m genes
};

struct RankedListMeta {
    std::optional<double> P;
    std::optional<Eigen::Index> c;
    std::optional<double> delta;
    std::string method;                // "dense-cholesky" | "lowrank-woodbury" | "raw_t"
    std::optional<std::uint64_t> seed; // present when the data was simulated
};

struct RankedGeneList {
    std::vector<RankedGeneRow> rows; // |u*| (or |t|) non-increasing
    RankedListMeta meta;
};

// Top-R by |u*| descending, ties broken by ascending original gene index.
// Genes in the ZA partition are rank-ineligible, so the list has
// min(R, m - c) rows. Throws when R is outside [1, m].
RankedGeneList rank_genes(const TellipsoidScores& scores, const TStatistics& stats,
                          const std::vector<std::string>& gene_ids, Eigen::Index R);

// Baseline: top-R by |t| descending, same tie rule, u* column empty.
RankedGeneList rank_raw_t(const TStatistics& stats, const std::vector<std::string>& gene_ids,
                          Eigen::Index R);

struct TellipsoidOptions {
    double P = 50.0;
    double delta = 1e-10;
    // auto rule: lowrank when n < c, else dense.
    std::optional<SolveMethod> method;
};

// Full pipeline: t-stats -> ZA partition -> centering -> correlation model
// -> solve -> ranked list. Deterministic for fixed inputs.
RankedGeneList run_tellipsoid(const ExpressionMatrix& x, const GroupLabels& labels,
                              Eigen::Index R, const TellipsoidOptions& opts = {});

// Ranked-list TSV: header `rank gene_id u_star t t_rank` (tab-separated),
// R data rows, then `# key=value` metadata comment lines.
void write_ranked_list(const RankedGeneList& list, const std::string& path);
void write_ranked_list(const RankedGeneList& list, std::ostream& out);
RankedGeneList load_ranked_list(const std::string& path);
RankedGeneList read_ranked_list(std::istream& in, const std::string& source_name);

} // namespace tellipsoid
