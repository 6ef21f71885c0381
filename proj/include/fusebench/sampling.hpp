#ifndef FUSEBENCH_SAMPLING_HPP
#define FUSEBENCH_SAMPLING_HPP

#include <vector>

#include <Eigen/Dense>

#include "fusebench/random_stream.hpp"
#include "fusebench/spd.hpp"

namespace fusebench {

/// Parameters of the Wishart distribution W_l(n, Sigma): the law of G^T G
/// for G an n x l matrix of rows drawn from N(0, Sigma).
struct WishartParams {
    Eigen::Index dim;  // l
    double dof;        // n; density exists for n > l - 1
    SpdMatrix scale;   // Sigma, l x l
};

/// Parameters of the inverted matrix-variate t-distribution IT_{l,m}(n, M,
/// Sigma, Omega) over l x m matrices T with bounded support
///   I - Sigma^-1 (T-M) Omega^-1 (T-M)^T > 0
/// and density proportional to |I - Sigma^-1 (T-M) Omega^-1 (T-M)^T|^((n-2)/2).
struct InvTParams {
    double dof;                // n > 0
    Eigen::MatrixXd location;  // M, l x m
    SpdMatrix row_scale;       // Sigma, l x l
    SpdMatrix col_scale;       // Omega, m x m
};

/// The known per-node covariances: k blocks of size m x m.
class DiagonalBlocks {
public:
    DiagonalBlocks(std::vector<SpdMatrix> blocks);

    int k() const { return static_cast<int>(blocks_.size()); }
    Eigen::Index m() const { return blocks_.front().dim(); }
    const SpdMatrix& block(int j) const { return blocks_.at(static_cast<std::size_t>(j)); }
    const std::vector<SpdMatrix>& blocks() const { return blocks_; }

private:
    std::vector<SpdMatrix> blocks_;
};

/// The cross-covariance blocks: one m x m matrix per pair (i, j) with
/// 0 <= i < j < k. Individually unconstrained; jointly they must assemble
/// with a DiagonalBlocks into a positive definite full matrix.
class OffDiagonalBlocks {
public:
    OffDiagonalBlocks(int k, Eigen::Index m);

    int k() const { return k_; }
    Eigen::Index m() const { return m_; }
    const Eigen::MatrixXd& block(int i, int j) const;
    void set_block(int i, int j, Eigen::MatrixXd value);

private:
    int k_;
    Eigen::Index m_;
    std::vector<Eigen::MatrixXd> blocks_;  // pair (i,j), i<j, in lexicographic order
};

/// Assemble the full (k*m) x (k*m) covariance from its diagonal and
/// off-diagonal blocks. No positive definiteness check is performed here.
Eigen::MatrixXd assemble_joint(const DiagonalBlocks& pd, const OffDiagonalBlocks& po);

/// Matrix of independent standard normal entries, filled column by column.
Eigen::MatrixXd sample_gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng);

/// Draw from W_l(n, Sigma) by the stacking construction: G is n x l standard
/// Gaussian and the draw is Sigma^(1/2) (G^T G) Sigma^(1/2) with the
/// symmetric square root. Requires integer n >= l.
SpdMatrix sample_wishart(const WishartParams& params, RandomStream& rng);

/// Wishart log-density at A; valid for any real dof > l - 1.
double wishart_logpdf(const SpdMatrix& a, const WishartParams& params);

/// Draw from IT_{l,m}(n, M, Sigma, Omega):
///   T = Sigma^(1/2) (S + X X^T)^(-1/2) X Omega^(1/2) + M
/// with S ~ W_l(n+l-1, I) drawn first and X ~ N_{l,m}(0, I x I) second.
/// All square roots are the symmetric ones. Requires integer n >= 1.
Eigen::MatrixXd sample_inverted_t(const InvTParams& params, RandomStream& rng);

/// Inverted matrix-variate t log-density at T. Throws OutOfSupport when
/// I - Sigma^-1 (T-M) Omega^-1 (T-M)^T is not positive definite.
double inverted_t_logpdf(const Eigen::MatrixXd& t, const InvTParams& params);

/// Draw the off-diagonal block A12 (size l1 x l2) of a Wishart matrix
/// with dof n and block-diagonal scale, conditional on the diagonal blocks:
///   A12^T = A22^(1/2) (S + X X^T)^(-1/2) X A11^(1/2),
/// S ~ W_{l2}(n - l1, I), X ~ N_{l2,l1}(0, I x I). The conditional law of
/// A12^T is IT_{l2,l1}(n - l1 - l2 + 1, O, A22, A11). Requires integer n
/// with n - l1 >= l2.
Eigen::MatrixXd sample_offdiag_two(const SpdMatrix& a11, const SpdMatrix& a22, double dof,
                                   RandomStream& rng);

/// Draw all k(k-1)/2 off-diagonal blocks conditional on the diagonal blocks,
/// one block column at a time: step j (1-based, j = 1..k-1) treats the
/// already-assembled leading j*m principal submatrix B_j as one unit and
/// draws the blocks coupling it to node j+1 exactly as sample_offdiag_two
/// does for the pair (B_j, A_{(j+1)(j+1)}). With a shared stream the k = 2
/// case reproduces sample_offdiag_two bit for bit. Requires integer
/// dof >= k*m.
OffDiagonalBlocks sample_offdiag_chain(const DiagonalBlocks& pd, double dof, RandomStream& rng);

/// Log-density of the off-diagonal blocks conditional on the diagonal
/// blocks under a Wishart prior with dof n and any block-diagonal scale:
/// the sum over chain steps j = 1..k-1 of inverted matrix-variate t terms
///   IT_{m, j*m}(n - (j+1)m + 1, O, A_{(j+1)(j+1)}, B_j).
/// Valid for real dof > k*m - 1. Throws OutOfSupport if the assembled
/// matrix is not positive definite.
double conditional_logpdf(const OffDiagonalBlocks& po, const DiagonalBlocks& pd, double dof);

namespace detail {

/// Chain sampler core taking precomputed symmetric square roots of the
/// diagonal blocks, so repeated draws against the same blocks (the Monte
/// Carlo fusion loop) do not refactor them. dof must already be validated
/// as an integer >= k*m.
OffDiagonalBlocks sample_offdiag_chain_prepared(const DiagonalBlocks& pd,
                                                const std::vector<Eigen::MatrixXd>& sqrt_diag,
                                                int dof, RandomStream& rng);

} // namespace detail

} // namespace fusebench

#endif
