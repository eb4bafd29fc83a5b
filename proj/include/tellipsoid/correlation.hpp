#pragma once

#include <Eigen/Dense>

#include "tellipsoid/expression_data.hpp"
#include "tellipsoid/tstats.hpp"

namespace tellipsoid {

// Expression matrix with each gene's within-group mean removed, original
// gene order. Row norms are kept because correlation normalizes by them.
struct CenteredMatrix {
    Eigen::MatrixXd values;   // m x n, within-group means ~0 per gene
    Eigen::VectorXd row_norms; // size m, Euclidean norm of each centered row
};

// Subtract each gene's group-1 mean from its group-1 entries and likewise
// for group 2. The input matrix is untouched.
CenteredMatrix remove_treatment_effects(const ExpressionMatrix& x, const GroupLabels& labels);

// Sample correlation between genes, held in low-rank factored form and
// indexed in ZA-partition order: corr(rank i, rank j) = z.row(i) . z.row(j).
//
// z rows are the centered rows scaled to unit norm. A degenerate gene (zero
// centered norm) instead gets a dedicated extra basis column with entry 1,
// which makes its diagonal exactly 1 and every off-diagonal exactly 0 in
// both the factored and materialized forms. Hence z is m x (n + d) with d
// the number of degenerate genes (d = 0 in regular data).
struct CorrelationModel {
    Eigen::MatrixXd z;          // m x r factor, ZA-partition row order
    Eigen::Index c = 0;         // partition cut, rows [0, c) belong to the null block
    double delta = 0.0;         // diagonal jitter for the (0,0) block, > 0
    Eigen::Index degenerate_count = 0;

    Eigen::Index rank_bound() const { return z.cols(); }

    // Materialized correlation blocks (Pearson correlations in [-1, 1]).
    // c00(true) adds delta to the diagonal, i.e. the matrix the solver sees.
    Eigen::MatrixXd c00(bool jittered) const;
    Eigen::MatrixXd c10() const;
};

// Build the factored correlation model for the given partition. Throws
// ValidationError when delta <= 0 or dimensions disagree.
CorrelationModel build_correlation_model(const CenteredMatrix& xtilde, const ZAPartition& part,
                                         double delta = 1e-10);

// Theoretical covariance of two null t-statistics whose within-group
// correlations are rho1 (group 1) and rho2 (group 2):
//   (n2*rho1 + n1*rho2) / (n1 + n2) * nu / (nu - 2).
// Reduces to rho*nu/(nu-2) when rho1 == rho2 and to the plain average of the
// two correlations (times nu/(nu-2)) when n1 == n2.
double theoretical_tcov(double rho1, double rho2, int n1, int n2, double nu);

} // namespace tellipsoid
