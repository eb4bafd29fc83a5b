#pragma once

#include <Eigen/Dense>

#include <vector>

#include "tellipsoid/expression_data.hpp"

namespace tellipsoid {

// Per-gene unpaired two-sample t-statistics, in input gene order.
struct TStatistics {
    Eigen::VectorXd t;                     // size m, always finite
    Eigen::MatrixX2d group_means;          // m x 2, column k-1 = group-k mean
    Eigen::VectorXd pooled_sd;             // size m, s_i = s_p * sqrt(1/n1 + 1/n2), >= 0
    std::vector<char> zero_variance_flags; // size m, 1 where s_i == 0 (t forced to 0)

    Eigen::Index genes() const { return t.size(); }
};

// t_i = (mean2 - mean1) / s_i with the pooled-SD denominator (n1 + n2 - 2).
// A gene with zero pooled variance and equal group means gets t = 0 and its
// zero_variance flag set; zero variance with unequal means is rejected
// (ValidationError naming the gene).
TStatistics two_sample_t(const ExpressionMatrix& x, const GroupLabels& labels);

// Zero-assumption split of the t vector: the c genes of smallest |t| are
// declared null (t0), the rest compete for discovery (t1).
struct ZAPartition {
    std::vector<Eigen::Index> permutation; // size m; permutation[r] = original index of rank r
    Eigen::Index c = 0;                    // cut count, 1 <= c <= m-1
    double P = 0.0;                        // percentage in (0, 100)
    Eigen::VectorXd t0;                    // size c, |t| ascending
    Eigen::VectorXd t1;                    // size m-c, |t| ascending
};

// c = ceil(0.01 * m * P), guarded against FP round-up on exact products
// (0.01*1000*0.1 evaluates to 1.0000000000000002 in doubles).
Eigen::Index za_cut(Eigen::Index m, double P);

// Sort ascending by |t| (stable, ties by original index) and cut at c.
// Throws ValidationError when P is out of (0, 100) or the cut leaves either
// side empty.
ZAPartition partition_za(const TStatistics& stats, double P);

} // namespace tellipsoid
