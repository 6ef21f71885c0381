#include "fusebench/fusion.hpp"

#include <cmath>
#include <sstream>

namespace fusebench {

namespace {

// Dimensions (k, m) of an estimate list; all covariances and vectors must
// agree, every component finite.
std::pair<int, Eigen::Index> check_estimates(const std::vector<Estimate>& estimates,
                                             const char* what) {
    if (estimates.empty()) {
        throw DimensionMismatch(std::string(what) + ": need at least one estimate");
    }
    const Eigen::Index m = estimates.front().P.dim();
    for (const auto& e : estimates) {
        if (e.P.dim() != m || e.x.size() != m) {
            throw DimensionMismatch(std::string(what) + ": estimates have mixed dimensions");
        }
        if (!e.x.allFinite()) {
            throw DimensionMismatch(std::string(what) + ": estimate vector has non-finite entries");
        }
    }
    return {static_cast<int>(estimates.size()), m};
}

Eigen::VectorXd stack_estimates(const std::vector<Estimate>& estimates, Eigen::Index m) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(estimates.size()) * m);
    for (std::size_t j = 0; j < estimates.size(); ++j) {
        x.segment(static_cast<Eigen::Index>(j) * m, m) = estimates[j].x;
    }
    return x;
}

Eigen::MatrixXd stacked_identity(int k, Eigen::Index m) {
    Eigen::MatrixXd ik(k * m, m);
    for (int j = 0; j < k; ++j) {
        ik.middleRows(j * m, m) = Eigen::MatrixXd::Identity(m, m);
    }
    return ik;
}

} // namespace

JointCovariance::JointCovariance(SpdMatrix full, int k) : full_(std::move(full)), k_(k) {
    if (k < 1) {
        throw DimensionMismatch("JointCovariance: k must be positive");
    }
    if (full_.dim() % k != 0) {
        std::ostringstream msg;
        msg << "JointCovariance: dimension " << full_.dim() << " is not a multiple of k = " << k;
        throw DimensionMismatch(msg.str());
    }
}

JointCovariance JointCovariance::from_blocks(const DiagonalBlocks& pd,
                                             const OffDiagonalBlocks& po) {
    return JointCovariance(SpdMatrix(assemble_joint(pd, po)), pd.k());
}

Eigen::MatrixXd JointCovariance::block(int i, int j) const {
    if (i < 0 || j < 0 || i >= k_ || j >= k_) {
        throw DimensionMismatch("JointCovariance::block: index out of range");
    }
    const Eigen::Index bm = m();
    return full_.matrix().block(i * bm, j * bm, bm, bm);
}

DiagonalBlocks JointCovariance::diagonal_blocks() const {
    std::vector<SpdMatrix> blocks;
    blocks.reserve(static_cast<std::size_t>(k_));
    for (int j = 0; j < k_; ++j) {
        blocks.emplace_back(block(j, j));
    }
    return DiagonalBlocks(std::move(blocks));
}

OffDiagonalBlocks JointCovariance::off_diagonal_blocks() const {
    OffDiagonalBlocks po(k_, m());
    for (int i = 0; i < k_; ++i) {
        for (int j = i + 1; j < k_; ++j) {
            po.set_block(i, j, block(i, j));
        }
    }
    return po;
}

const char* to_string(FusionMethod method) {
    switch (method) {
        case FusionMethod::optimal: return "optimal";
        case FusionMethod::bayesian_mc: return "bayesian_mc";
        case FusionMethod::fast_ci: return "fast_ci";
    }
    return "unknown";
}

Eigen::MatrixXd WeightSet::sum() const {
    if (blocks.empty()) {
        return Eigen::MatrixXd();
    }
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(blocks.front().rows(), blocks.front().cols());
    for (const auto& w : blocks) {
        total += w;
    }
    return total;
}

bool WeightSet::sums_to_identity(double tol) const {
    if (blocks.empty()) {
        return false;
    }
    const Eigen::MatrixXd total = sum();
    if (total.rows() != total.cols()) {
        return false;
    }
    return (total - Eigen::MatrixXd::Identity(total.rows(), total.cols())).cwiseAbs().maxCoeff() <=
           tol;
}

namespace detail {

void fuse_optimal_raw(const Eigen::VectorXd& stacked, const Eigen::MatrixXd& px, Eigen::Index m,
                      Eigen::VectorXd& x0, Eigen::MatrixXd& p0) {
    const Eigen::Index km = px.rows();
    const int k = static_cast<int>(km / m);
    Eigen::LLT<Eigen::MatrixXd> llt(px);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("optimal fusion: joint covariance factorization failed");
    }
    const Eigen::MatrixXd ik = stacked_identity(k, m);
    const Eigen::MatrixXd y = llt.solve(ik);         // Px^-1 I_(k)
    Eigen::MatrixXd info = ik.transpose() * y;       // I_(k)^T Px^-1 I_(k)
    info = 0.5 * (info + info.transpose());
    Eigen::LLT<Eigen::MatrixXd> info_llt(info);
    if (info_llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("optimal fusion: information matrix factorization failed");
    }
    x0 = info_llt.solve(y.transpose() * stacked);
    p0 = info_llt.solve(Eigen::MatrixXd::Identity(m, m));
    p0 = 0.5 * (p0 + p0.transpose());
}

} // namespace detail

FusedEstimate optimal_fusion(const std::vector<Estimate>& estimates, const JointCovariance& px) {
    const auto [k, m] = check_estimates(estimates, "optimal_fusion");
    if (px.k() != k || px.m() != m) {
        throw DimensionMismatch("optimal_fusion: joint covariance disagrees with estimates");
    }
    if (k == 1) {
        return FusedEstimate{estimates.front().x, estimates.front().P, FusionMethod::optimal, {}};
    }
    Eigen::VectorXd x0;
    Eigen::MatrixXd p0;
    detail::fuse_optimal_raw(stack_estimates(estimates, m), px.full().matrix(), m, x0, p0);
    return FusedEstimate{std::move(x0), SpdMatrix(std::move(p0)), FusionMethod::optimal, {}};
}

WeightSet optimal_weights(const JointCovariance& px) {
    const int k = px.k();
    const Eigen::Index m = px.m();
    Eigen::LLT<Eigen::MatrixXd> llt(px.full().matrix());
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("optimal_weights: joint covariance factorization failed");
    }
    const Eigen::MatrixXd ik = stacked_identity(k, m);
    const Eigen::MatrixXd y = llt.solve(ik);
    Eigen::MatrixXd info = ik.transpose() * y;
    info = 0.5 * (info + info.transpose());
    Eigen::LLT<Eigen::MatrixXd> info_llt(info);
    if (info_llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("optimal_weights: information matrix factorization failed");
    }
    // W^T = info^-1 I_(k)^T Px^-1; the block applied to x_j is column block j.
    const Eigen::MatrixXd wt = info_llt.solve(y.transpose());
    WeightSet weights;
    weights.blocks.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        weights.blocks.push_back(wt.middleCols(j * m, m));
    }
    return weights;
}

WeightSet two_node_weights(const SpdMatrix& p11, const SpdMatrix& p22,
                           const Eigen::MatrixXd& p12) {
    const Eigen::Index m = p11.dim();
    if (p22.dim() != m || p12.rows() != m || p12.cols() != m) {
        throw DimensionMismatch("two_node_weights: block dimensions disagree");
    }
    const Eigen::MatrixXd denom =
        p11.matrix() - p12 - p12.transpose() + p22.matrix();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(denom);
    if (!lu.isInvertible()) {
        throw SingularDenominator("two_node_weights: weight denominator is singular");
    }
    // W D = (P22 - P12^T)  =>  W = (P22 - P12^T) D^-1 via solving D^T X^T = ...
    const Eigen::MatrixXd denom_inv = lu.inverse();
    WeightSet weights;
    weights.blocks.push_back((p22.matrix() - p12.transpose()) * denom_inv);
    weights.blocks.push_back((p11.matrix() - p12) * denom_inv);
    return weights;
}

FusedEstimate two_node_fusion(const Estimate& e1, const Estimate& e2,
                              const Eigen::MatrixXd& p12) {
    const Eigen::Index m = e1.P.dim();
    if (e2.P.dim() != m || e1.x.size() != m || e2.x.size() != m || p12.rows() != m ||
        p12.cols() != m) {
        throw DimensionMismatch("two_node_fusion: dimensions disagree");
    }
    Eigen::MatrixXd full(2 * m, 2 * m);
    full.topLeftCorner(m, m) = e1.P.matrix();
    full.topRightCorner(m, m) = p12;
    full.bottomLeftCorner(m, m) = p12.transpose();
    full.bottomRightCorner(m, m) = e2.P.matrix();
    if (!is_positive_definite(full, pd_tolerance(full))) {
        throw NotPositiveDefinite("two_node_fusion: assembled joint covariance is not PD");
    }
    const WeightSet w = two_node_weights(e1.P, e2.P, p12);
    const Eigen::MatrixXd& w1 = w.blocks[0];
    const Eigen::MatrixXd& w2 = w.blocks[1];
    Eigen::VectorXd x0 = w1 * e1.x + w2 * e2.x;
    Eigen::MatrixXd p0 = w1 * e1.P.matrix() * w1.transpose() + w1 * p12 * w2.transpose() +
                         w2 * p12.transpose() * w1.transpose() +
                         w2 * e2.P.matrix() * w2.transpose();
    return FusedEstimate{std::move(x0), SpdMatrix(std::move(p0)), FusionMethod::optimal, {}};
}

namespace detail {

FusedEstimate bayesian_mc_fusion_impl(const std::vector<Estimate>& estimates, double prior_dof,
                                      int mc_samples, const RandomStream& rng,
                                      const McOptions& options) {
    const auto [k, m] = check_estimates(estimates, "bayesian_mc_fusion");
    if (mc_samples < 1) {
        throw DomainError("bayesian_mc_fusion: mc_samples must be at least 1");
    }
    const double min_dof = static_cast<double>(k) * static_cast<double>(m);
    if (!(prior_dof == std::floor(prior_dof)) || prior_dof < min_dof) {
        std::ostringstream msg;
        msg << "bayesian_mc_fusion: prior dof must be an integer >= k*m = " << min_dof
            << ", got " << prior_dof;
        throw InvalidDof(msg.str());
    }
    const int dof = static_cast<int>(prior_dof);

    const DiagonalBlocks pd = diagonal_blocks_of(estimates);
    std::vector<Eigen::MatrixXd> sqrt_diag;
    sqrt_diag.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        sqrt_diag.push_back(detail::sym_sqrt_raw(pd.block(j).matrix()));
    }
    const Eigen::VectorXd stacked = stack_estimates(estimates, m);

    Eigen::VectorXd x0_sum = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd p0_sum = Eigen::MatrixXd::Zero(m, m);
    int rejections = 0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    for (int j = 0; j < mc_samples; ++j) {
        const RandomStream sample_root = rng.child(static_cast<std::uint64_t>(j));
        Eigen::MatrixXd px;
        bool accepted = false;
        for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
            RandomStream draw_rng = sample_root.child(static_cast<std::uint64_t>(attempt));
            const OffDiagonalBlocks po =
                detail::sample_offdiag_chain_prepared(pd, sqrt_diag, dof, draw_rng);
            px = assemble_joint(pd, po);
            es.compute(px, Eigen::EigenvaluesOnly);
            if (es.info() == Eigen::Success) {
                const double lo = es.eigenvalues().minCoeff();
                const double hi = es.eigenvalues().maxCoeff();
                if (lo > pd_tolerance(px) && hi / lo <= options.max_condition) {
                    accepted = true;
                    break;
                }
            }
            ++rejections;
        }
        if (!accepted) {
            std::ostringstream msg;
            msg << "bayesian_mc_fusion: sample " << j << " exhausted " << options.max_attempts
                << " attempts without a well-conditioned joint covariance";
            throw Error(msg.str());
        }
        Eigen::VectorXd x0;
        Eigen::MatrixXd p0;
        fuse_optimal_raw(stacked, px, m, x0, p0);
        x0_sum += x0;
        p0_sum += p0;
    }
    const double scale = 1.0 / static_cast<double>(mc_samples);
    McDiagnostics diag;
    diag.mc_samples = mc_samples;
    diag.rejections = rejections;
    return FusedEstimate{scale * x0_sum, SpdMatrix(scale * p0_sum), FusionMethod::bayesian_mc,
                         diag};
}

} // namespace detail

FusedEstimate bayesian_mc_fusion(const std::vector<Estimate>& estimates, double prior_dof,
                                 int mc_samples, const RandomStream& rng) {
    return detail::bayesian_mc_fusion_impl(estimates, prior_dof, mc_samples, rng,
                                           detail::McOptions{});
}

std::vector<double> fast_ci_weights(const DiagonalBlocks& pd) {
    std::vector<double> inv_traces;
    inv_traces.reserve(static_cast<std::size_t>(pd.k()));
    double total = 0.0;
    for (int j = 0; j < pd.k(); ++j) {
        const double inv = 1.0 / pd.block(j).trace();
        inv_traces.push_back(inv);
        total += inv;
    }
    for (auto& w : inv_traces) {
        w /= total;
    }
    return inv_traces;
}

FusedEstimate ci_fusion(const std::vector<Estimate>& estimates,
                        const std::vector<double>& weights) {
    const auto [k, m] = check_estimates(estimates, "ci_fusion");
    if (weights.size() != estimates.size()) {
        throw WeightSumError("ci_fusion: one weight per estimate required");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw WeightSumError("ci_fusion: weights must be finite and nonnegative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-10) {
        std::ostringstream msg;
        msg << "ci_fusion: weights sum to " << total << ", expected 1";
        throw WeightSumError(msg.str());
    }
    // A weight vector concentrated on one node selects that estimate as is.
    for (int j = 0; j < k; ++j) {
        if (weights[static_cast<std::size_t>(j)] == 1.0) {
            return FusedEstimate{estimates[static_cast<std::size_t>(j)].x,
                                 estimates[static_cast<std::size_t>(j)].P,
                                 FusionMethod::fast_ci, {}};
        }
    }
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd info_vec = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < k; ++j) {
        const double w = weights[static_cast<std::size_t>(j)];
        if (w == 0.0) {
            continue;
        }
        const auto& e = estimates[static_cast<std::size_t>(j)];
        Eigen::LLT<Eigen::MatrixXd> llt(e.P.matrix());
        if (llt.info() != Eigen::Success) {
            throw NotPositiveDefinite("ci_fusion: node covariance factorization failed");
        }
        info.noalias() += w * llt.solve(Eigen::MatrixXd::Identity(m, m));
        info_vec.noalias() += w * llt.solve(e.x);
    }
    info = 0.5 * (info + info.transpose());
    Eigen::LLT<Eigen::MatrixXd> info_llt(info);
    if (info_llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("ci_fusion: combined information matrix is not PD");
    }
    Eigen::VectorXd x0 = info_llt.solve(info_vec);
    Eigen::MatrixXd p0 = info_llt.solve(Eigen::MatrixXd::Identity(m, m));
    return FusedEstimate{std::move(x0), SpdMatrix(std::move(p0)), FusionMethod::fast_ci, {}};
}

DiagonalBlocks diagonal_blocks_of(const std::vector<Estimate>& estimates) {
    std::vector<SpdMatrix> blocks;
    blocks.reserve(estimates.size());
    for (const auto& e : estimates) {
        blocks.push_back(e.P);
    }
    return DiagonalBlocks(std::move(blocks));
}

} // namespace fusebench
