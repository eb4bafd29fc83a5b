#include "tellipsoid/correlation.hpp"

#include <algorithm>
#include <cmath>

namespace tellipsoid {

CenteredMatrix remove_treatment_effects(const ExpressionMatrix& x, const GroupLabels& labels) {
    validate(labels, x.samples());
    const Eigen::Index m = x.genes();
    const Eigen::Index n = x.samples();

    CenteredMatrix out;
    out.values.resize(m, n);
    out.row_norms.resize(m);

    for (Eigen::Index i = 0; i < m; ++i) {
        for (int group : {1, 2}) {
            // A group whose entries are all identical centers to exactly
            // zero; doing this bitwise avoids leaving ulp-sized residue that
            // would later be normalized into pure noise.
            bool constant = true;
            bool seen = false;
            double first = 0.0;
            double sum = 0.0;
            int count = 0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (labels.assignment[static_cast<std::size_t>(j)] != group) continue;
                const double v = x.values(i, j);
                if (!seen) {
                    first = v;
                    seen = true;
                } else if (v != first) {
                    constant = false;
                }
                sum += v;
                ++count;
            }
            const double mean = constant ? first : sum / count;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (labels.assignment[static_cast<std::size_t>(j)] != group) continue;
                out.values(i, j) = constant ? 0.0 : x.values(i, j) - mean;
            }
        }
        out.row_norms[i] = out.values.row(i).norm();
    }
    return out;
}

CorrelationModel build_correlation_model(const CenteredMatrix& xtilde, const ZAPartition& part,
                                         double delta) {
    if (delta <= 0.0) {
        throw ValidationError("jitter delta must be positive, got " + std::to_string(delta));
    }
    const Eigen::Index m = xtilde.values.rows();
    if (static_cast<Eigen::Index>(part.permutation.size()) != m) {
        throw ValidationError("partition size does not match the centered matrix");
    }
    const Eigen::Index n = xtilde.values.cols();

    Eigen::Index degenerate = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (xtilde.row_norms[i] == 0.0) ++degenerate;
    }

    CorrelationModel model;
    model.c = part.c;
    model.delta = delta;
    model.degenerate_count = degenerate;
    model.z = Eigen::MatrixXd::Zero(m, n + degenerate);

    Eigen::Index next_axis = n;
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index src = part.permutation[static_cast<std::size_t>(r)];
        const double norm = xtilde.row_norms[src];
        if (norm == 0.0) {
            // Dedicated basis column: diagonal exactly 1, off-diagonals
            // exactly 0, in both the factored and materialized forms.
            model.z(r, next_axis++) = 1.0;
        } else {
            model.z.row(r).head(n) = xtilde.values.row(src) / norm;
        }
    }
    return model;
}

Eigen::MatrixXd CorrelationModel::c00(bool jittered) const {
    const auto z0 = z.topRows(c);
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(c, c);
    block.selfadjointView<Eigen::Lower>().rankUpdate(z0);
    block.triangularView<Eigen::StrictlyUpper>() =
        block.triangularView<Eigen::StrictlyLower>().transpose();
    // Unit rows make the diagonal 1 by definition; pin it exactly and clamp
    // rounding spill past +-1 on the off-diagonals.
    block = block.cwiseMax(-1.0).cwiseMin(1.0);
    block.diagonal().setOnes();
    if (jittered) block.diagonal().array() += delta;
    return block;
}

Eigen::MatrixXd CorrelationModel::c10() const {
    const Eigen::Index m = z.rows();
    Eigen::MatrixXd block = z.bottomRows(m - c) * z.topRows(c).transpose();
    block = block.cwiseMax(-1.0).cwiseMin(1.0);
    return block;
}

double theoretical_tcov(double rho1, double rho2, int n1, int n2, double nu) {
    if (!(rho1 >= -1.0 && rho1 <= 1.0) || !(rho2 >= -1.0 && rho2 <= 1.0)) {
        throw ValidationError("correlation must lie in [-1, 1]");
    }
    if (n1 < 1 || n2 < 1) throw ValidationError("group sizes must be positive");
    if (!(nu > 2.0)) {
        throw ValidationError("degrees of freedom must exceed 2, got " + std::to_string(nu));
    }
    const double pooled = (n2 * rho1 + n1 * rho2) / static_cast<double>(n1 + n2);
    return pooled * nu / (nu - 2.0);
}

} // namespace tellipsoid
