#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tellipsoid/ranking.hpp"
#include "tellipsoid/simulation.hpp"

namespace tellipsoid {

// Score for one (list, truth) pairing: NoFP = truly-null genes reported,
// empirical FDR = NoFP / R.
struct FdrScore {
    Eigen::Index no_fp = 0;
    Eigen::Index R = 0;
    double fdr = 0.0;
};

// Throws when a listed gene is missing from truth (naming the gene).
FdrScore empirical_fdr(const RankedGeneList& list, const GroundTruth& truth);

struct StudyRow {
    int replicate = 0;
    std::string method; // "tellipsoid" | "raw_t"
    Eigen::Index R = 0;
    Eigen::Index no_fp = 0;
    double fdr = 0.0;
};

struct StudySummaryRow {
    std::string method;
    Eigen::Index R = 0;
    double median_fdr = 0.0;
    double frac_zero_fdr = 0.0; // fraction of replicates with NoFP == 0
};

struct EvaluationReport {
    std::vector<StudyRow> series;        // one row per (replicate, method, R)
    std::vector<StudySummaryRow> summary; // one row per (method, R)
};

struct StudyConfig {
    // Produces one dataset per replicate; called with a per-replicate seed
    // derived from `seed`.
    std::function<SimulatedDataset(std::uint64_t)> generator;
    std::vector<std::string> methods;   // subset of {"tellipsoid", "raw_t"}
    std::vector<Eigen::Index> list_sizes;
    int replicates = 0;
    std::uint64_t seed = 0;
    TellipsoidOptions options;
};

// Replicated comparison study: generate, rank with each method, score at
// each R. Deterministic given the config seed.
EvaluationReport run_study(const StudyConfig& config);

// Table-1-style text report of the Tellipsoid list with truly null genes
// flagged; the footer carries NoFP/FDR for both methods. Both lists must
// rank genes known to the truth.
std::string comparison_table(const RankedGeneList& tellipsoid_list,
                             const RankedGeneList& raw_list, const GroundTruth& truth);

// Series TSV: `replicate<TAB>method<TAB>R<TAB>NoFP<TAB>FDR`;
// summary TSV: `method<TAB>R<TAB>median_FDR<TAB>frac_zero_FDR`.
void write_study_series(const EvaluationReport& report, const std::string& path);
void write_study_summary(const EvaluationReport& report, const std::string& path);
void write_study_series(const EvaluationReport& report, std::ostream& out);
void write_study_summary(const EvaluationReport& report, std::ostream& out);

} // namespace tellipsoid
