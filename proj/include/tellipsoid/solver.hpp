#pragma once

#include <Eigen/Dense>

#include <string>

#include "tellipsoid/errors.hpp"

namespace tellipsoid {

enum class SolveMethod { dense_cholesky, lowrank_woodbury };

std::string to_string(SolveMethod m);

// Outcome of solving (C00 + delta*I) x = t0.
//
// residual_norm is the literal ||A x - b||_2 / ||b||_2. Note that for the
// near-singular jittered systems this pipeline produces (eigenvalues
// clustered at delta ~ 1e-10, ||x|| ~ ||b||/delta), the b-relative residual
// of *any* double-precision solution has a rounding floor of about
// eps*||A||*||x||/||b||, several orders above eps. Acceptance of a solve is
// therefore judged against the normwise backward-error bound
//   ||r|| <= tol * (||A||_F * ||x|| + ||b||),
// which is scale-correct for Cholesky; see `solve_accepted`.
struct SolveReport {
    Eigen::VectorXd solution;
    SolveMethod method = SolveMethod::dense_cholesky;
    double residual_norm = 0.0;
};

// Backward-error acceptance test described above (tol defaults to 1e-8).
bool solve_accepted(double residual_2norm_abs, double a_frobenius, double x_2norm,
                    double b_2norm, double tol = 1e-8);

// Cholesky solve of a materialized SPD system. The caller supplies the
// jittered matrix. Throws ValidationError on dimension mismatch; a
// factorization failure is reported with the index of the first non-positive
// leading minor (signals insufficient jitter or corrupted input). Throws
// when the accepted-solve bound fails.
SolveReport solve_dense(const Eigen::MatrixXd& c00_jittered, const Eigen::VectorXd& t0);

// Woodbury solve of (delta*I + Z0 Z0^T) x = t0 through the n x n system:
//   x = (t0 - Z0 (delta*I_n + Z0^T Z0)^{-1} Z0^T t0) / delta.
// Cost O(c n^2 + n^3) instead of O(c^3). Throws on delta <= 0 or inner
// factorization failure.
SolveReport solve_lowrank(const Eigen::MatrixXd& z0, double delta, const Eigen::VectorXd& t0);

// The inner Woodbury quantity w = (delta*I + Z0^T Z0)^{-1} Z0^T t0. The
// identity Z0^T x = w (exact for any delta > 0) lets the ranking stage form
// C10 * x as Z1 * w without ever touching the 1/delta-amplified x.
Eigen::VectorXd lowrank_projection(const Eigen::MatrixXd& z0, double delta,
                                   const Eigen::VectorXd& t0);

// sqrt((t - u)^T Sigma^{-1} (t - u)). Throws on dimension mismatch or a
// non-SPD Sigma.
double mahalanobis_distance(const Eigen::VectorXd& t, const Eigen::VectorXd& u,
                            const Eigen::MatrixXd& sigma);

// Independent oracle for the closed form: minimizes the Mahalanobis
// quadratic over u1 (u0 pinned at zero) by solving the stationarity
// condition with an explicit full inverse of Sigma. Intended for small m
// (<= 200); O(m^3) with no structure exploited.
Eigen::VectorXd brute_force_ustar(const Eigen::VectorXd& t, const Eigen::MatrixXd& sigma,
                                  Eigen::Index c);

// Closed form u1* = t1 - Sigma10 Sigma00^{-1} t0 on an explicit SPD Sigma
// (the quantity brute_force_ustar verifies).
Eigen::VectorXd ustar_closed_form(const Eigen::VectorXd& t, const Eigen::MatrixXd& sigma,
                                  Eigen::Index c);

} // namespace tellipsoid
