#ifndef FUSEBENCH_SPD_HPP
#define FUSEBENCH_SPD_HPP

#include <Eigen/Dense>

#include "fusebench/errors.hpp"

namespace fusebench {

/// Relative eigenvalue floor used by all positive-definiteness checks:
/// 1e-10 * (1 + largest absolute entry). Scale-invariant by construction.
double pd_tolerance(const Eigen::MatrixXd& m);

/// Relative tolerance for the symmetry check: |A_ij - A_ji| must not
/// exceed 1e-10 * (1 + max|A_ij|).
double symmetry_tolerance(const Eigen::MatrixXd& m);

/// True iff m is square, symmetric within symmetry_tolerance, and its
/// smallest eigenvalue exceeds tol. Total function: never throws.
bool is_positive_definite(const Eigen::MatrixXd& m, double tol);

/// Symmetric positive definite matrix. Construction symmetrizes the input
/// ((A + A^T)/2) to absorb floating-point asymmetry from upstream products,
/// then validates; grossly asymmetric or non-PD input is rejected.
class SpdMatrix {
public:
    explicit SpdMatrix(Eigen::MatrixXd entries);

    static SpdMatrix identity(Eigen::Index dim);
    static SpdMatrix diagonal(const Eigen::VectorXd& diag);
    /// Identity scaled by a positive factor.
    static SpdMatrix scaled_identity(Eigen::Index dim, double scale);

    Eigen::Index dim() const { return entries_.rows(); }
    const Eigen::MatrixXd& matrix() const { return entries_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
    double trace() const { return entries_.trace(); }

private:
    struct already_validated {};
    SpdMatrix(Eigen::MatrixXd entries, already_validated) : entries_(std::move(entries)) {}

    Eigen::MatrixXd entries_;

    friend SpdMatrix spd_from_validated(Eigen::MatrixXd entries);
};

/// Internal constructor for matrices whose positive definiteness has already
/// been established by the caller (e.g. A = G^T G with full column rank).
/// Still symmetrizes. Library-internal; not part of the checked API.
SpdMatrix spd_from_validated(Eigen::MatrixXd entries);

/// Symmetric square root: returns symmetric S with S*S = A.
SpdMatrix sym_sqrt(const SpdMatrix& a);

/// Inverse via Cholesky factorization.
SpdMatrix spd_inverse(const SpdMatrix& a);

/// ln|A| from the Cholesky factor (sum of log diagonal entries); stable for
/// the dimensions this library works at, no raw determinant is formed.
double logdet(const SpdMatrix& a);

/// ln of the multivariate gamma function:
///   ln Gamma_l(a) = l(l-1)/4 * ln(pi) + sum_{j=1..l} ln Gamma(a - (j-1)/2).
/// Requires a > (l-1)/2 so all gamma arguments are positive.
double ln_multigamma(int l, double a);

namespace detail {

/// Eigendecomposition-based symmetric square root of a raw symmetric matrix.
/// Throws NotPositiveDefinite if any eigenvalue is at or below
/// pd_tolerance(a); eigenvalues are never silently floored.
Eigen::MatrixXd sym_sqrt_raw(const Eigen::MatrixXd& a);

/// Symmetric inverse square root, same validation as sym_sqrt_raw.
Eigen::MatrixXd sym_inv_sqrt_raw(const Eigen::MatrixXd& a);

/// ln|A| of a raw SPD matrix via Cholesky; throws NotPositiveDefinite.
double logdet_raw(const Eigen::MatrixXd& a);

} // namespace detail

} // namespace fusebench

#endif
