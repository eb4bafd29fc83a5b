#include "tellipsoid/tstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tellipsoid {

namespace {

bool group_constant(const Eigen::MatrixXd& values, Eigen::Index gene,
                    const std::vector<int>& assignment, int group) {
    bool seen = false;
    double first = 0.0;
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        if (assignment[static_cast<std::size_t>(j)] != group) continue;
        if (!seen) {
            first = values(gene, j);
            seen = true;
        } else if (values(gene, j) != first) {
            return false;
        }
    }
    return true;
}

} // namespace

TStatistics two_sample_t(const ExpressionMatrix& x, const GroupLabels& labels) {
    validate(x);
    validate(labels, x.samples());
    const Eigen::Index m = x.genes();
    const Eigen::Index n = x.samples();
    const double n1 = labels.n1;
    const double n2 = labels.n2;
    const double inv_nu = 1.0 / (n1 + n2 - 2.0);
    const double size_factor = 1.0 / n1 + 1.0 / n2;

    TStatistics stats;
    stats.t.resize(m);
    stats.group_means.resize(m, 2);
    stats.pooled_sd.resize(m);
    stats.zero_variance_flags.assign(static_cast<std::size_t>(m), 0);

    for (Eigen::Index i = 0; i < m; ++i) {
        double sum1 = 0.0, sum2 = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (labels.assignment[static_cast<std::size_t>(j)] == 1) sum1 += x.values(i, j);
            else sum2 += x.values(i, j);
        }
        const double mean1 = sum1 / n1;
        const double mean2 = sum2 / n2;
        stats.group_means(i, 0) = mean1;
        stats.group_means(i, 1) = mean2;

        // Constant-within-both-groups genes have zero pooled variance by
        // definition; detect that exactly instead of testing a rounded sum
        // of squares against zero.
        if (group_constant(x.values, i, labels.assignment, 1) &&
            group_constant(x.values, i, labels.assignment, 2)) {
            double v1 = 0.0, v2 = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (labels.assignment[static_cast<std::size_t>(j)] == 1) v1 = x.values(i, j);
                else v2 = x.values(i, j);
            }
            if (v1 != v2) {
                throw ValidationError("gene '" + x.gene_ids[static_cast<std::size_t>(i)] +
                                      "' has zero within-group variance but unequal group means");
            }
            stats.pooled_sd[i] = 0.0;
            stats.t[i] = 0.0;
            stats.zero_variance_flags[static_cast<std::size_t>(i)] = 1;
            continue;
        }

        double ss = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double mean = labels.assignment[static_cast<std::size_t>(j)] == 1 ? mean1 : mean2;
            const double d = x.values(i, j) - mean;
            ss += d * d;
        }
        const double s = std::sqrt(ss * inv_nu * size_factor);
        stats.pooled_sd[i] = s;
        stats.t[i] = (mean2 - mean1) / s;
    }
    return stats;
}

Eigen::Index za_cut(Eigen::Index m, double P) {
    if (!(P > 0.0 && P < 100.0)) {
        throw ValidationError("P out of range: must satisfy 0 < P < 100, got " + std::to_string(P));
    }
    const double q = 0.01 * static_cast<double>(m) * P;
    // 0.01*m*P can land one ulp above an exact integer (0.01*1000*0.1 ->
    // 1.0000000000000002); back off before the ceiling so such products do
    // not gain a spurious extra gene. True half-integers are untouched.
    const double guard = 1e-9 + q * 1e-12;
    return static_cast<Eigen::Index>(std::ceil(q - guard));
}

ZAPartition partition_za(const TStatistics& stats, double P) {
    const Eigen::Index m = stats.genes();
    const Eigen::Index c = za_cut(m, P);
    if (c < 1 || c > m - 1) {
        throw ValidationError("zero-assumption cut c=" + std::to_string(c) +
                              " leaves an empty partition (m=" + std::to_string(m) + ")");
    }

    ZAPartition part;
    part.c = c;
    part.P = P;
    part.permutation.resize(static_cast<std::size_t>(m));
    std::iota(part.permutation.begin(), part.permutation.end(), Eigen::Index{0});
    std::stable_sort(part.permutation.begin(), part.permutation.end(),
                     [&](Eigen::Index a, Eigen::Index b) {
                         return std::abs(stats.t[a]) < std::abs(stats.t[b]);
                     });

    part.t0.resize(c);
    part.t1.resize(m - c);
    for (Eigen::Index r = 0; r < m; ++r) {
        const double v = stats.t[part.permutation[static_cast<std::size_t>(r)]];
        if (r < c) part.t0[r] = v;
        else part.t1[r - c] = v;
    }
    return part;
}

} // namespace tellipsoid
