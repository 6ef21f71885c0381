#ifndef FUSEBENCH_FUSION_HPP
#define FUSEBENCH_FUSION_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fusebench/sampling.hpp"
#include "fusebench/spd.hpp"

namespace fusebench {

/// One node's state estimate together with its error covariance.
struct Estimate {
    Eigen::VectorXd x;  // length m
    SpdMatrix P;        // m x m
};

/// Full joint covariance of k stacked m-dimensional estimates, with typed
/// access to its diagonal (per-node) and off-diagonal (cross) blocks.
class JointCovariance {
public:
    JointCovariance(SpdMatrix full, int k);

    /// Assemble and validate from blocks; throws NotPositiveDefinite if the
    /// assembled matrix is not positive definite.
    static JointCovariance from_blocks(const DiagonalBlocks& pd, const OffDiagonalBlocks& po);

    int k() const { return k_; }
    Eigen::Index m() const { return full_.dim() / k_; }
    const SpdMatrix& full() const { return full_; }

    /// The m x m block coupling nodes i and j (any order).
    Eigen::MatrixXd block(int i, int j) const;
    DiagonalBlocks diagonal_blocks() const;
    OffDiagonalBlocks off_diagonal_blocks() const;

private:
    SpdMatrix full_;
    int k_;
};

enum class FusionMethod { optimal, bayesian_mc, fast_ci };

const char* to_string(FusionMethod method);

/// Extra information the Monte Carlo fuser reports alongside its estimate.
/// The reported covariance is the plain average of the per-sample fused
/// covariances; it ignores the spread of the fused mean across samples and
/// can therefore understate the true error, so it is not calibrated.
struct McDiagnostics {
    int mc_samples = 0;
    int rejections = 0;
    bool p0_calibrated = false;
};

struct FusedEstimate {
    Eigen::VectorXd x0_hat;
    SpdMatrix P0;
    FusionMethod method;
    std::optional<McDiagnostics> diagnostics;
};

/// Per-node m x m weight matrices of a linear unbiased fusion rule; the
/// blocks must sum to the identity.
struct WeightSet {
    std::vector<Eigen::MatrixXd> blocks;

    Eigen::MatrixXd sum() const;
    bool sums_to_identity(double tol = 1e-10) const;
};

/// Minimum-variance linear unbiased fusion given the full joint covariance:
///   P0 = (I_(k)^T Px^-1 I_(k))^-1,   x0 = P0 I_(k)^T Px^-1 x
/// where I_(k) vertically stacks k identity blocks. k = 1 returns the input
/// estimate unchanged.
FusedEstimate optimal_fusion(const std::vector<Estimate>& estimates, const JointCovariance& px);

/// The weight blocks realizing optimal_fusion.
WeightSet optimal_weights(const JointCovariance& px);

/// Closed-form two-node fusion:
///   W1 = (P22 - P12^T) D^-1,  W2 = (P11 - P12) D^-1,
///   D  = P11 - P12 - P12^T + P22,
/// with the fused covariance W^T Px W. Algebraically identical to
/// optimal_fusion at k = 2 and kept as an independent route.
FusedEstimate two_node_fusion(const Estimate& e1, const Estimate& e2, const Eigen::MatrixXd& p12);

WeightSet two_node_weights(const SpdMatrix& p11, const SpdMatrix& p22, const Eigen::MatrixXd& p12);

/// Monte Carlo minimum mean square error fusion when only the per-node
/// covariances are known. The joint covariance is given a Wishart prior with
/// prior_dof degrees of freedom (any block-diagonal scale yields the same
/// conditional, so none is taken); mc_samples cross-covariance draws from
/// the conditional law are fused optimally and averaged in sample order.
///
/// Sample j of the integration uses substream rng.child(j).child(a) where a
/// is the retry attempt (0 for the first), so results are independent of
/// evaluation order. Requires integer prior_dof >= k*m.
FusedEstimate bayesian_mc_fusion(const std::vector<Estimate>& estimates, double prior_dof,
                                 int mc_samples, const RandomStream& rng);

/// Closed-form covariance intersection weights proportional to inverse
/// covariance traces: w_i = (1/tr P_ii) / sum_j (1/tr P_jj).
std::vector<double> fast_ci_weights(const DiagonalBlocks& pd);

/// Covariance intersection fusion with given convex weights:
///   P0^-1 = sum_j w_j P_jj^-1,   P0^-1 x0 = sum_j w_j P_jj^-1 x_j.
/// A weight vector concentrated on one node returns that estimate exactly.
FusedEstimate ci_fusion(const std::vector<Estimate>& estimates, const std::vector<double>& weights);

/// Collect the estimates' covariances as DiagonalBlocks.
DiagonalBlocks diagonal_blocks_of(const std::vector<Estimate>& estimates);

namespace detail {

/// Knobs of the Monte Carlo fuser that the public API pins to defaults.
/// Draws whose assembled joint covariance has condition number above
/// max_condition (or a non-positive eigenvalue) are rejected and retried on
/// the next per-sample substream.
struct McOptions {
    double max_condition = 1e12;
    int max_attempts = 64;
};

FusedEstimate bayesian_mc_fusion_impl(const std::vector<Estimate>& estimates, double prior_dof,
                                      int mc_samples, const RandomStream& rng,
                                      const McOptions& options);

/// Fused moments on raw matrices; px must be positive definite.
void fuse_optimal_raw(const Eigen::VectorXd& stacked, const Eigen::MatrixXd& px, Eigen::Index m,
                      Eigen::VectorXd& x0, Eigen::MatrixXd& p0);

} // namespace detail

} // namespace fusebench

#endif
