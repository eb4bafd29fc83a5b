#include "tellipsoid/solver.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>

namespace tellipsoid {

std::string to_string(SolveMethod m) {
    return m == SolveMethod::dense_cholesky ? "dense-cholesky" : "lowrank-woodbury";
}

bool solve_accepted(double residual_2norm_abs, double a_frobenius, double x_2norm,
                    double b_2norm, double tol) {
    return residual_2norm_abs <= tol * (a_frobenius * x_2norm + b_2norm);
}

namespace {

// Unblocked Cholesky scan used only to diagnose a failed factorization: find
// the first leading principal minor that is not positive definite.
Eigen::Index first_bad_leading_minor(const Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        double d = a(k, k) - l.row(k).head(k).squaredNorm();
        if (!(d > 0.0) || !std::isfinite(d)) return k + 1;
        const double lkk = std::sqrt(d);
        l(k, k) = lkk;
        for (Eigen::Index i = k + 1; i < n; ++i) {
            l(i, k) = (a(i, k) - l.row(i).head(k).dot(l.row(k).head(k))) / lkk;
        }
    }
    return 0;
}

void check_acceptance(const SolveReport& report, double residual_abs, double a_frobenius,
                      double b_norm) {
    if (!solve_accepted(residual_abs, a_frobenius, report.solution.norm(), b_norm)) {
        std::ostringstream msg;
        msg << to_string(report.method)
            << " solve rejected: residual exceeds the backward-error bound"
            << " (relative residual " << report.residual_norm
            << "); jitter may be insufficient or the input corrupted";
        throw ValidationError(msg.str());
    }
}

Eigen::VectorXd inner_woodbury_solve(const Eigen::MatrixXd& z0, double delta,
                                     const Eigen::VectorXd& t0) {
    if (delta <= 0.0) {
        throw ValidationError("jitter delta must be positive, got " + std::to_string(delta));
    }
    if (z0.rows() != t0.size()) {
        throw ValidationError("factor row count does not match the right-hand side");
    }
    const Eigen::Index r = z0.cols();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(r, r);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(z0.transpose());
    gram.diagonal().array() += delta;
    // LLT only references the lower triangle, which rankUpdate filled.
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw ValidationError("inner " + std::to_string(r) + "x" + std::to_string(r) +
                              " factorization failed in the low-rank solve");
    }
    return llt.solve(z0.transpose() * t0);
}

} // namespace

SolveReport solve_dense(const Eigen::MatrixXd& c00_jittered, const Eigen::VectorXd& t0) {
    if (c00_jittered.rows() != c00_jittered.cols()) {
        throw ValidationError("dense solve requires a square matrix");
    }
    if (c00_jittered.rows() != t0.size()) {
        throw ValidationError("matrix size does not match the right-hand side");
    }

    const Eigen::LLT<Eigen::MatrixXd> llt(c00_jittered);
    if (llt.info() != Eigen::Success) {
        const Eigen::Index minor = first_bad_leading_minor(c00_jittered);
        throw ValidationError("Cholesky factorization failed: leading minor of order " +
                              std::to_string(minor) +
                              " is not positive definite (insufficient jitter or corrupted input)");
    }

    SolveReport report;
    report.method = SolveMethod::dense_cholesky;
    report.solution = llt.solve(t0);

    const double b_norm = t0.norm();
    const double residual = (c00_jittered * report.solution - t0).norm();
    report.residual_norm = b_norm > 0.0 ? residual / b_norm : residual;
    check_acceptance(report, residual, c00_jittered.norm(), b_norm);
    return report;
}

SolveReport solve_lowrank(const Eigen::MatrixXd& z0, double delta, const Eigen::VectorXd& t0) {
    const Eigen::VectorXd w = inner_woodbury_solve(z0, delta, t0);

    SolveReport report;
    report.method = SolveMethod::lowrank_woodbury;
    report.solution = (t0 - z0 * w) / delta;

    // The residual uses the implicit operator A = Z0 Z0^T + delta*I; its
    // Frobenius norm follows exactly from the small Gram matrix.
    const Eigen::Index c = z0.rows();
    const Eigen::Index r = z0.cols();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(r, r);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(z0.transpose());
    Eigen::MatrixXd gram_full = gram.selfadjointView<Eigen::Lower>();
    const double a_frob = std::sqrt(gram_full.squaredNorm() + 2.0 * delta * gram_full.trace() +
                                    delta * delta * static_cast<double>(c));

    const double b_norm = t0.norm();
    const Eigen::VectorXd ax =
        z0 * (z0.transpose() * report.solution) + delta * report.solution;
    const double residual = (ax - t0).norm();
    report.residual_norm = b_norm > 0.0 ? residual / b_norm : residual;
    check_acceptance(report, residual, a_frob, b_norm);
    return report;
}

Eigen::VectorXd lowrank_projection(const Eigen::MatrixXd& z0, double delta,
                                   const Eigen::VectorXd& t0) {
    return inner_woodbury_solve(z0, delta, t0);
}

double mahalanobis_distance(const Eigen::VectorXd& t, const Eigen::VectorXd& u,
                            const Eigen::MatrixXd& sigma) {
    if (t.size() != u.size() || sigma.rows() != sigma.cols() || sigma.rows() != t.size()) {
        throw ValidationError("Mahalanobis distance: dimension mismatch");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw ValidationError("Mahalanobis distance: matrix is not positive definite");
    }
    const Eigen::VectorXd d = t - u;
    const double q = d.dot(llt.solve(d));
    return std::sqrt(std::max(q, 0.0));
}

Eigen::VectorXd ustar_closed_form(const Eigen::VectorXd& t, const Eigen::MatrixXd& sigma,
                                  Eigen::Index c) {
    const Eigen::Index m = t.size();
    if (sigma.rows() != m || sigma.cols() != m) {
        throw ValidationError("closed form: Sigma dimensions do not match t");
    }
    if (c < 1 || c > m - 1) throw ValidationError("closed form: cut must satisfy 1 <= c <= m-1");

    const Eigen::LLT<Eigen::MatrixXd> llt(sigma.topLeftCorner(c, c));
    if (llt.info() != Eigen::Success) {
        throw ValidationError("closed form: Sigma00 is not positive definite");
    }
    return t.tail(m - c) - sigma.bottomLeftCorner(m - c, c) * llt.solve(t.head(c));
}

Eigen::VectorXd brute_force_ustar(const Eigen::VectorXd& t, const Eigen::MatrixXd& sigma,
                                  Eigen::Index c) {
    const Eigen::Index m = t.size();
    if (sigma.rows() != m || sigma.cols() != m) {
        throw ValidationError("brute force: Sigma dimensions do not match t");
    }
    if (c < 1 || c > m - 1) throw ValidationError("brute force: cut must satisfy 1 <= c <= m-1");
    if (m > 200) throw ValidationError("brute force oracle is restricted to m <= 200");

    // Stationarity of the quadratic (t-u)^T Sigma^{-1} (t-u) over u1 with
    // u0 = 0: writing Sigma^{-1} = [[A, B], [C, D]], the minimizing residual
    // v1 = t1 - u1 solves D v1 = -C t0. Explicit full inversion on purpose:
    // this is the independent oracle, not a production path.
    const Eigen::MatrixXd sigma_inv = sigma.inverse();
    const Eigen::MatrixXd d_block = sigma_inv.bottomRightCorner(m - c, m - c);
    const Eigen::MatrixXd c_block = sigma_inv.bottomLeftCorner(m - c, c);

    const Eigen::LLT<Eigen::MatrixXd> llt(d_block);
    if (llt.info() != Eigen::Success) {
        throw ValidationError("brute force: inverse (1,1) block is not positive definite");
    }
    const Eigen::VectorXd v1 = llt.solve(-c_block * t.head(c));
    return t.tail(m - c) - v1;
}

} // namespace tellipsoid
